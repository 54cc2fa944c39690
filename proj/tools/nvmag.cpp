// nvmag: NV-ensemble magnetometry analysis CLI.
//
// Subcommands synthesize ODMR spectra and decay records, fit measured or
// synthetic CSV data, reconstruct vector fields from fitted peaks, and print
// shot-noise sensitivity reports. Results go to stdout as versioned JSON
// documents; diagnostics go to stderr.
//
// Exit codes: 0 success, 1 input/config error, 2 analysis non-convergence or
// degeneracy (a document with diagnostics is still written).

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "nvmag/io.hpp"

namespace {

using nlohmann::json;
using namespace nvmag;

constexpr int exit_ok = 0;
constexpr int exit_input_error = 1;
constexpr int exit_analysis_error = 2;

void emit_document(const json& doc, const std::string& output_path) {
    std::cout << doc.dump(2) << std::endl;
    if (!output_path.empty()) {
        std::ofstream out(output_path);
        if (!out) throw ConfigError("cannot open output file " + output_path);
        out << doc.dump(2) << '\n';
    }
}

struct CommonArgs {
    std::string config_path;
    std::string output_path;
    std::optional<std::uint64_t> seed;
};

RunConfig load_config(const CommonArgs& args) {
    RunConfig config = args.config_path.empty() ? parse_config(json::object())
                                                : parse_config_file(args.config_path);
    if (args.seed) config.seed = *args.seed;
    return config;
}

int cmd_simulate_odmr(const CommonArgs& args) {
    const RunConfig config = load_config(args);
    if (args.output_path.empty()) throw ConfigError("simulate-odmr requires --output");

    const auto grid = make_grid(config);
    OdmrSpectrum spectrum;
    json truth;
    if (!config.peaks.empty()) {
        spectrum = synthesize_odmr(config.peaks, grid);
        json peaks = json::array();
        for (const auto& p : config.peaks)
            peaks.push_back({{"center_mhz", p.center_mhz},
                             {"fwhm_mhz", p.fwhm_mhz},
                             {"contrast", p.contrast}});
        truth["peaks"] = peaks;
    } else if (config.field_mt) {
        spectrum = spectrum_from_field(config.model, *config.field_mt, config.fwhm_mhz,
                                       config.contrast, grid);
        truth["field_mt"] = {config.field_mt->bx_mt, config.field_mt->by_mt,
                             config.field_mt->bz_mt};
        truth["centers_mhz"] = dip_centers_from_field(config.model, *config.field_mt);
        truth["fwhm_mhz"] = config.fwhm_mhz;
        truth["contrast"] = config.contrast;
    } else {
        throw ConfigError("simulate-odmr config needs 'simulate.field_mt' or 'simulate.peaks'");
    }

    if (config.counts_per_point > 0.0) {
        spectrum = add_shot_noise(spectrum, config.counts_per_point, config.seed);
        truth["counts_per_point"] = config.counts_per_point;
        truth["seed"] = config.seed;
    }
    truth["model"] = {{"d_mhz", config.model.d_mhz},
                      {"e_mhz", config.model.e_mhz},
                      {"gamma_mhz_per_mt", config.model.gamma_mhz_per_mt},
                      {"a_hf_mhz", config.model.a_hf_mhz}};

    write_odmr_csv_file(args.output_path, spectrum);
    std::ofstream sidecar(args.output_path + ".truth.json");
    if (!sidecar) throw ConfigError("cannot write truth sidecar");
    sidecar << truth.dump(2) << '\n';
    std::cerr << "wrote " << spectrum.freqs_mhz.size() << " samples to " << args.output_path
              << '\n';
    return exit_ok;
}

int cmd_fit_odmr(const CommonArgs& args, const std::string& input_path) {
    const RunConfig config = load_config(args);
    const OdmrSpectrum spectrum = read_odmr_csv_file(input_path);

    OdmrFitOptions opts;
    opts.n_peaks = config.n_peaks;
    opts.shared_width = config.shared_width;
    const OdmrFitResult result = fit_odmr(spectrum, opts);

    json results = {{"peaks", peak_set_to_json(result.peaks)},
                    {"baseline", result.baseline},
                    {"baseline_sigma", result.baseline_sigma},
                    {"fit", fit_result_to_json(result.fit)}};
    std::vector<std::string> warnings = result.fit.flags;
    if (!result.fit.converged) warnings.push_back("fit did not converge");
    emit_document(make_result_document("fit-odmr", config.echo, results, warnings),
                  args.output_path);
    return result.fit.converged ? exit_ok : exit_analysis_error;
}

int cmd_reconstruct(const CommonArgs& args, const std::string& input_path) {
    const RunConfig config = load_config(args);
    std::ifstream in(input_path);
    if (!in) throw ConfigError("cannot open " + input_path);
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& err) {
        throw ConfigError(std::string("peaks document parse error: ") + err.what());
    }
    const PeakSet peaks = peak_set_from_json(doc);

    try {
        const ProjectionSet proj =
            projections_from_odmr(config.model, peaks, config.pairing_floor_mhz);
        const ReconstructionResult recon = reconstruct_field(config.model, proj);
        json results = {{"projections", projection_set_to_json(proj)},
                        {"reconstruction", reconstruction_to_json(recon)}};
        std::vector<std::string> warnings;
        if (!recon.ambiguity_note.empty()) warnings.push_back(recon.ambiguity_note);
        if (proj.resolved_count() < 4) warnings.push_back("fewer than 4 orientations resolved");
        emit_document(make_result_document("reconstruct", config.echo, results, warnings),
                      args.output_path);
        return exit_ok;
    } catch (const PairingFailedError& err) {
        emit_document(make_result_document("reconstruct", config.echo,
                                           json{{"error", err.what()}}, {"pairing failed"}),
                      args.output_path);
        std::cerr << err.what() << '\n';
        return exit_analysis_error;
    } catch (const DegenerateGeometryError& err) {
        emit_document(make_result_document("reconstruct", config.echo,
                                           json{{"error", err.what()}}, {"degenerate geometry"}),
                      args.output_path);
        std::cerr << err.what() << '\n';
        return exit_analysis_error;
    }
}

int cmd_fit_decay(const CommonArgs& args, const std::string& input_path,
                  const std::string& kind_name) {
    const RunConfig config = load_config(args);
    const DecayKind kind = decay_kind_from_string(kind_name);
    const DecayRecord record = read_decay_csv_file(input_path, kind);

    DecayFitOptions opts;
    opts.init = config.decay_init;
    const FitResult fit = fit_decay(record, kind, opts);

    json results = {{"kind", to_string(kind)}, {"fit", fit_result_to_json(fit)}};
    std::vector<std::string> warnings = fit.flags;
    if (!fit.converged) warnings.push_back("fit did not converge");
    emit_document(make_result_document("fit-decay", config.echo, results, warnings),
                  args.output_path);
    return fit.converged ? exit_ok : exit_analysis_error;
}

int cmd_fit_saturation(const CommonArgs& args, const std::string& input_path) {
    const RunConfig config = load_config(args);
    const SaturationCurve curve = read_saturation_csv_file(input_path);
    const FitResult fit = fit_saturation(curve);

    json results = {{"fit", fit_result_to_json(fit)}};
    std::vector<std::string> warnings = fit.flags;
    if (!fit.converged) warnings.push_back("fit did not converge");
    emit_document(make_result_document("fit-saturation", config.echo, results, warnings),
                  args.output_path);
    return fit.converged ? exit_ok : exit_analysis_error;
}

int cmd_sensitivity(const CommonArgs& args) {
    const RunConfig config = load_config(args);
    const SensitivityReport report =
        sensitivity_report(config.sensitivity, config.budget, config.g_factor);
    emit_document(make_result_document("sensitivity", config.echo,
                                       sensitivity_report_to_json(report), {}),
                  args.output_path);
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"NV-ensemble magnetometry simulation and analysis toolkit"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string input_path;
    std::string kind_name;
    std::uint64_t seed_value = 0;
    bool seed_given = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", args.config_path, "JSON config file");
        cmd->add_option("--output", args.output_path, "output file path");
        cmd->add_option("--seed", seed_value, "RNG seed override")
            ->each([&seed_given](const std::string&) { seed_given = true; });
    };

    auto* simulate = app.add_subcommand("simulate-odmr", "synthesize an ODMR spectrum CSV");
    add_common(simulate);

    auto* fit_odmr_cmd = app.add_subcommand("fit-odmr", "multi-Lorentzian fit of an ODMR CSV");
    fit_odmr_cmd->add_option("input", input_path, "input CSV")->required();
    add_common(fit_odmr_cmd);

    auto* reconstruct = app.add_subcommand("reconstruct", "vector field from fitted peaks JSON");
    reconstruct->add_option("input", input_path, "peaks JSON or fit-odmr document")->required();
    add_common(reconstruct);

    auto* fit_decay_cmd = app.add_subcommand("fit-decay", "coherence-decay fit of a time CSV");
    fit_decay_cmd->add_option("input", input_path, "input CSV")->required();
    fit_decay_cmd->add_option("--kind", kind_name, "rabi|fid|hahn|t1")->required();
    add_common(fit_decay_cmd);

    auto* fit_sat = app.add_subcommand("fit-saturation", "saturation-curve fit of a power CSV");
    fit_sat->add_option("input", input_path, "input CSV")->required();
    add_common(fit_sat);

    auto* sensitivity = app.add_subcommand("sensitivity", "shot-noise sensitivity report");
    add_common(sensitivity);

    CLI11_PARSE(app, argc, argv);
    if (seed_given) args.seed = seed_value;

    try {
        if (simulate->parsed()) return cmd_simulate_odmr(args);
        if (fit_odmr_cmd->parsed()) return cmd_fit_odmr(args, input_path);
        if (reconstruct->parsed()) return cmd_reconstruct(args, input_path);
        if (fit_decay_cmd->parsed()) return cmd_fit_decay(args, input_path, kind_name);
        if (fit_sat->parsed()) return cmd_fit_saturation(args, input_path);
        if (sensitivity->parsed()) return cmd_sensitivity(args);
    } catch (const NoPeaksError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return exit_analysis_error;
    } catch (const PeakCountMismatchError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return exit_analysis_error;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return exit_input_error;
    }
    return exit_input_error;
}
