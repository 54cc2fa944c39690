#include "nvmag/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace nvmag {

namespace {

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream stream(line);
    while (std::getline(stream, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

double parse_number(const std::string& field, int row, int column) {
    std::size_t pos = 0;
    double value = 0.0;
    try {
        value = std::stod(field, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    // allow trailing whitespace only
    while (pos < field.size() && std::isspace(static_cast<unsigned char>(field[pos]))) ++pos;
    if (pos != field.size() || field.empty())
        throw CsvError("row " + std::to_string(row) + ", column " + std::to_string(column) +
                           ": cannot parse number from '" + field + "'",
                       row);
    return value;
}

// Generic column reader: skips '#' comments and blank lines, checks the header
// against the allowed schemas, returns rows of parsed numbers.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

Table read_table(std::istream& in, const std::vector<std::vector<std::string>>& schemas,
                 const char* what) {
    Table table;
    std::string line;
    int row = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string trimmed = line;
        trimmed.erase(0, trimmed.find_first_not_of(" \t"));
        if (trimmed.empty() || trimmed[0] == '#') continue;
        const auto fields = split_fields(line);
        if (!header_seen) {
            for (const auto& schema : schemas)
                if (fields == std::vector<std::string>(schema.begin(), schema.end())) {
                    table.header = fields;
                    header_seen = true;
                    break;
                }
            if (!header_seen)
                throw CsvError(std::string(what) + ": row " + std::to_string(row) +
                                   ": unexpected header '" + line + "'",
                               row);
            continue;
        }
        if (fields.size() != table.header.size())
            throw CsvError(std::string(what) + ": row " + std::to_string(row) + ": expected " +
                               std::to_string(table.header.size()) + " fields, got " +
                               std::to_string(fields.size()),
                           row);
        std::vector<double> values;
        for (std::size_t c = 0; c < fields.size(); ++c)
            values.push_back(parse_number(fields[c], row, static_cast<int>(c) + 1));
        table.rows.push_back(std::move(values));
    }
    if (!header_seen) throw CsvError(std::string(what) + ": empty file", 0);
    if (table.rows.empty()) throw CsvError(std::string(what) + ": no data rows", 0);
    return table;
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CsvError("cannot open " + path, 0);
    return in;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw CsvError("cannot open " + path + " for writing", 0);
    return out;
}

}  // namespace

OdmrSpectrum read_odmr_csv(std::istream& in) {
    const Table table = read_table(
        in, {{"freq_mhz", "pl_norm"}, {"freq_mhz", "pl_norm", "counts"}}, "odmr csv");
    OdmrSpectrum spectrum;
    const bool has_counts = table.header.size() == 3;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        spectrum.freqs_mhz.push_back(table.rows[i][0]);
        spectrum.pl_norm.push_back(table.rows[i][1]);
        if (has_counts) spectrum.counts_per_point.push_back(table.rows[i][2]);
        if (i > 0 && !(spectrum.freqs_mhz[i] > spectrum.freqs_mhz[i - 1]))
            throw CsvError("odmr csv: data row " + std::to_string(i + 1) +
                               ": freq_mhz not strictly increasing",
                           static_cast<int>(i + 1));
    }
    spectrum.validate();
    return spectrum;
}

void write_odmr_csv(std::ostream& out, const OdmrSpectrum& spectrum) {
    spectrum.validate();
    const bool has_counts = !spectrum.counts_per_point.empty();
    out << (has_counts ? "freq_mhz,pl_norm,counts\n" : "freq_mhz,pl_norm\n");
    for (std::size_t i = 0; i < spectrum.freqs_mhz.size(); ++i) {
        out << format_value(spectrum.freqs_mhz[i]) << ',' << format_value(spectrum.pl_norm[i]);
        if (has_counts) out << ',' << format_value(spectrum.counts_per_point[i]);
        out << '\n';
    }
}

DecayRecord read_decay_csv(std::istream& in, DecayKind kind) {
    const Table table = read_table(in, {{"time_us", "signal"}}, "decay csv");
    DecayRecord record;
    record.model_kind = kind;
    for (const auto& row : table.rows) {
        record.times_us.push_back(row[0]);
        record.signal.push_back(row[1]);
    }
    record.validate();
    return record;
}

void write_decay_csv(std::ostream& out, const DecayRecord& record) {
    record.validate();
    out << "time_us,signal\n";
    for (std::size_t i = 0; i < record.times_us.size(); ++i)
        out << format_value(record.times_us[i]) << ',' << format_value(record.signal[i]) << '\n';
}

SaturationCurve read_saturation_csv(std::istream& in) {
    const Table table = read_table(in, {{"power_mw", "rate_hz"}}, "saturation csv");
    SaturationCurve curve;
    for (const auto& row : table.rows) {
        curve.powers_mw.push_back(row[0]);
        curve.rates_hz.push_back(row[1]);
    }
    curve.validate();
    return curve;
}

void write_saturation_csv(std::ostream& out, const SaturationCurve& curve) {
    curve.validate();
    out << "power_mw,rate_hz\n";
    for (std::size_t i = 0; i < curve.powers_mw.size(); ++i)
        out << format_value(curve.powers_mw[i]) << ',' << format_value(curve.rates_hz[i]) << '\n';
}

OdmrSpectrum read_odmr_csv_file(const std::string& path) {
    auto in = open_input(path);
    return read_odmr_csv(in);
}
void write_odmr_csv_file(const std::string& path, const OdmrSpectrum& spectrum) {
    auto out = open_output(path);
    write_odmr_csv(out, spectrum);
}
DecayRecord read_decay_csv_file(const std::string& path, DecayKind kind) {
    auto in = open_input(path);
    return read_decay_csv(in, kind);
}
void write_decay_csv_file(const std::string& path, const DecayRecord& record) {
    auto out = open_output(path);
    write_decay_csv(out, record);
}
SaturationCurve read_saturation_csv_file(const std::string& path) {
    auto in = open_input(path);
    return read_saturation_csv(in);
}
void write_saturation_csv_file(const std::string& path, const SaturationCurve& curve) {
    auto out = open_output(path);
    write_saturation_csv(out, curve);
}

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

namespace {

double get_number(const nlohmann::json& obj, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number()) throw ConfigError(std::string("config field '") + key + "' must be a number");
    return obj[key].get<double>();
}

}  // namespace

RunConfig parse_config(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ConfigError("config root must be a JSON object");
    RunConfig config;
    config.echo = doc;

    if (doc.contains("model")) {
        const auto& m = doc["model"];
        if (!m.is_object()) throw ConfigError("config field 'model' must be an object");
        config.model.d_mhz = get_number(m, "d_mhz", config.model.d_mhz);
        config.model.e_mhz = get_number(m, "e_mhz", config.model.e_mhz);
        config.model.a_hf_mhz = get_number(m, "a_hf_mhz", config.model.a_hf_mhz);
        config.g_factor = get_number(m, "g_factor", config.g_factor);
        config.model.gamma_mhz_per_mt =
            get_number(m, "gamma_mhz_per_mt", constants::gamma_mhz_per_mt(config.g_factor));
    }
    config.model.validate();

    if (doc.contains("seed")) {
        const auto& s = doc["seed"];
        if (!s.is_number_integer() || (s.is_number_integer() && !s.is_number_unsigned() &&
                                       s.get<std::int64_t>() < 0))
            throw ConfigError("config field 'seed' must be a non-negative integer");
        config.seed = s.get<std::uint64_t>();
    }

    if (doc.contains("simulate")) {
        const auto& s = doc["simulate"];
        if (!s.is_object()) throw ConfigError("config field 'simulate' must be an object");
        if (s.contains("field_mt")) {
            const auto& f = s["field_mt"];
            if (!f.is_array() || f.size() != 3)
                throw ConfigError("config field 'simulate.field_mt' must be a 3-element array");
            config.field_mt = FieldVector{f[0].get<double>(), f[1].get<double>(), f[2].get<double>()};
            if (!std::isfinite(config.field_mt->bx_mt) || !std::isfinite(config.field_mt->by_mt) ||
                !std::isfinite(config.field_mt->bz_mt))
                throw ConfigError("config field 'simulate.field_mt' must be finite");
        }
        if (s.contains("peaks")) {
            for (const auto& p : s["peaks"]) {
                LorentzianPeak peak{get_number(p, "center_mhz", 0.0), get_number(p, "fwhm_mhz", 0.0),
                                    get_number(p, "contrast", 0.0)};
                if (!(peak.fwhm_mhz > 0.0))
                    throw ConfigError("config simulate.peaks: fwhm_mhz must be > 0");
                if (!(peak.contrast > 0.0 && peak.contrast <= 1.0))
                    throw ConfigError("config simulate.peaks: contrast must be in (0, 1]");
                config.peaks.push_back(peak);
            }
        }
        if (s.contains("grid")) {
            const auto& g = s["grid"];
            config.grid_start_mhz = get_number(g, "start_mhz", config.grid_start_mhz);
            config.grid_stop_mhz = get_number(g, "stop_mhz", config.grid_stop_mhz);
            if (g.contains("points")) config.grid_points = g["points"].get<int>();
            if (!(config.grid_stop_mhz > config.grid_start_mhz))
                throw ConfigError("config simulate.grid: stop_mhz must exceed start_mhz");
            if (config.grid_points < 2)
                throw ConfigError("config simulate.grid: points must be >= 2");
        }
        config.fwhm_mhz = get_number(s, "fwhm_mhz", config.fwhm_mhz);
        config.contrast = get_number(s, "contrast", config.contrast);
        config.counts_per_point = get_number(s, "counts_per_point", config.counts_per_point);
        if (!(config.fwhm_mhz > 0.0)) throw ConfigError("config simulate.fwhm_mhz must be > 0");
        if (!(config.contrast > 0.0 && config.contrast <= 1.0))
            throw ConfigError("config simulate.contrast must be in (0, 1]");
        if (config.counts_per_point < 0.0)
            throw ConfigError("config simulate.counts_per_point must be >= 0");
    }

    if (doc.contains("fit")) {
        const auto& f = doc["fit"];
        if (f.contains("n_peaks")) config.n_peaks = f["n_peaks"].get<int>();
        if (f.contains("shared_width")) config.shared_width = f["shared_width"].get<bool>();
        config.pairing_floor_mhz = get_number(f, "pairing_floor_mhz", config.pairing_floor_mhz);
        if (config.n_peaks < 0) throw ConfigError("config fit.n_peaks must be >= 0");
        if (!(config.pairing_floor_mhz > 0.0))
            throw ConfigError("config fit.pairing_floor_mhz must be > 0");
        if (f.contains("decay_init")) {
            const auto& d = f["decay_init"];
            DecayParams init;
            init.amplitude = get_number(d, "amplitude", init.amplitude);
            init.decay_us = get_number(d, "decay_us", init.decay_us);
            init.offset = get_number(d, "offset", init.offset);
            init.freq_mhz = get_number(d, "freq_mhz", init.freq_mhz);
            init.phase_rad = get_number(d, "phase_rad", init.phase_rad);
            init.hyperfine_mhz = get_number(d, "hyperfine_mhz", init.hyperfine_mhz);
            if (!(init.decay_us > 0.0))
                throw ConfigError("config fit.decay_init.decay_us must be > 0");
            config.decay_init = init;
        }
    }

    if (doc.contains("sensitivity")) {
        const auto& s = doc["sensitivity"];
        config.sensitivity.contrast = get_number(s, "contrast", config.sensitivity.contrast);
        config.sensitivity.pl_rate_hz = get_number(s, "pl_rate_hz", config.sensitivity.pl_rate_hz);
        config.sensitivity.readout_us = get_number(s, "readout_us", config.sensitivity.readout_us);
        config.sensitivity.t2_star_us = get_number(s, "t2_star_us", config.sensitivity.t2_star_us);
        config.sensitivity.t2_us = get_number(s, "t2_us", config.sensitivity.t2_us);
        config.sensitivity.validate();
        config.budget.p_sat_mw = get_number(s, "p_sat_mw", config.budget.p_sat_mw);
        config.budget.c_sat_hz = get_number(s, "c_sat_hz", config.budget.c_sat_hz);
        config.budget.enhancement = get_number(s, "enhancement", config.budget.enhancement);
        config.budget.insertion_loss_db =
            get_number(s, "insertion_loss_db", config.budget.insertion_loss_db);
        config.budget.mfd_x_um = get_number(s, "mfd_x_um", config.budget.mfd_x_um);
        config.budget.mfd_y_um = get_number(s, "mfd_y_um", config.budget.mfd_y_um);
        config.budget.validate();
    }

    return config;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::parse_error& err) {
        throw ConfigError("config parse error in " + path + ": " + err.what());
    }
    return parse_config(doc);
}

std::vector<double> make_grid(const RunConfig& config) {
    std::vector<double> grid(config.grid_points);
    const double step =
        (config.grid_stop_mhz - config.grid_start_mhz) / (config.grid_points - 1);
    for (int i = 0; i < config.grid_points; ++i) grid[i] = config.grid_start_mhz + i * step;
    return grid;
}

// ---------------------------------------------------------------------------
// Result documents
// ---------------------------------------------------------------------------

nlohmann::json make_result_document(const std::string& command, const nlohmann::json& config_echo,
                                    const nlohmann::json& results,
                                    const std::vector<std::string>& warnings) {
    return nlohmann::json{{"schema_version", result_schema_version},
                          {"command", command},
                          {"config", config_echo},
                          {"results", results},
                          {"warnings", warnings}};
}

nlohmann::json peak_set_to_json(const PeakSet& peaks) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : peaks)
        arr.push_back({{"center_mhz", p.center_mhz},
                       {"center_sigma_mhz", p.center_sigma_mhz},
                       {"fwhm_mhz", p.fwhm_mhz},
                       {"fwhm_sigma_mhz", p.fwhm_sigma_mhz},
                       {"contrast", p.contrast},
                       {"contrast_sigma", p.contrast_sigma}});
    return arr;
}

PeakSet peak_set_from_json(const nlohmann::json& doc) {
    const nlohmann::json* arr = &doc;
    // Accept either a bare peak array or a fit-odmr result document.
    if (doc.is_object()) {
        if (doc.contains("results") && doc["results"].contains("peaks"))
            arr = &doc["results"]["peaks"];
        else if (doc.contains("peaks"))
            arr = &doc["peaks"];
        else
            throw ConfigError("peaks document: no 'peaks' array found");
    }
    if (!arr->is_array()) throw ConfigError("peaks document: expected an array");
    PeakSet peaks;
    for (const auto& p : *arr) {
        PeakEstimate est;
        if (p.is_number()) {
            est.center_mhz = p.get<double>();
        } else {
            est.center_mhz = get_number(p, "center_mhz", std::numeric_limits<double>::quiet_NaN());
            est.center_sigma_mhz = get_number(p, "center_sigma_mhz", 0.0);
            est.fwhm_mhz = get_number(p, "fwhm_mhz", 0.0);
            est.contrast = get_number(p, "contrast", 0.0);
            if (!std::isfinite(est.center_mhz))
                throw ConfigError("peaks document: peak without center_mhz");
        }
        peaks.push_back(est);
    }
    if (peaks.empty()) throw ConfigError("peaks document: empty peak list");
    return peaks;
}

nlohmann::json fit_result_to_json(const FitResult& fit) {
    nlohmann::json params = nlohmann::json::object();
    for (std::size_t i = 0; i < fit.names.size(); ++i) {
        params[fit.names[i]] = fit.params(static_cast<Eigen::Index>(i));
        params[fit.names[i] + "_sigma"] = fit.sigma(static_cast<Eigen::Index>(i));
    }
    return {{"params", params},
            {"residual_rms", fit.residual_rms},
            {"converged", fit.converged},
            {"iterations", fit.iterations},
            {"flags", fit.flags}};
}

nlohmann::json projection_set_to_json(const ProjectionSet& proj) {
    nlohmann::json arr = nlohmann::json::array();
    for (int i = 0; i < 4; ++i) {
        if (std::isfinite(proj.b_proj_mt[i]))
            arr.push_back({{"b_proj_mt", proj.b_proj_mt[i]}, {"sigma_mt", proj.sigma_mt[i]}});
        else
            arr.push_back({{"b_proj_mt", nullptr}, {"unresolved", true}});
    }
    return arr;
}

nlohmann::json reconstruction_to_json(const ReconstructionResult& result) {
    return {{"b_mt", {result.b.bx_mt, result.b.by_mt, result.b.bz_mt}},
            {"b_norm_mt", result.b.norm()},
            {"b_norm_sigma_mt", result.b_norm_sigma_mt()},
            {"signs", result.signs},
            {"residual_mt", result.residual_mt},
            {"ambiguity_note", result.ambiguity_note},
            {"tied_patterns", result.tied_patterns}};
}

nlohmann::json sensitivity_report_to_json(const SensitivityReport& report) {
    return {{"g_factor", report.g_factor},
            {"contrast", report.inputs.contrast},
            {"pl_rate_hz", report.inputs.pl_rate_hz},
            {"readout_us", report.inputs.readout_us},
            {"t2_star_us", report.inputs.t2_star_us},
            {"t2_us", report.inputs.t2_us},
            {"enhancement", report.budget.enhancement},
            {"baseline", {{"eta_dc_t_per_sqrthz", report.baseline_eta_dc_t},
                          {"eta_ac_t_per_sqrthz", report.baseline_eta_ac_t}}},
            {"enhanced", {{"eta_dc_t_per_sqrthz", report.enhanced_eta_dc_t},
                          {"eta_ac_t_per_sqrthz", report.enhanced_eta_ac_t}}},
            {"improvement_ratio", report.improvement_ratio},
            {"transmission_fraction", report.transmission_fraction},
            {"enhanced_saturation_rate_hz", report.enhanced_saturation_rate_hz},
            {"enhanced_saturation_power_mw", report.enhanced_saturation_power_mw}};
}

}  // namespace nvmag
