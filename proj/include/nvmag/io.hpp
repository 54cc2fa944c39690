#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "nvmag/fitters.hpp"
#include "nvmag/sensitivity.hpp"
#include "nvmag/spectra.hpp"
#include "nvmag/spin_model.hpp"
#include "nvmag/vector_field.hpp"

namespace nvmag {

inline constexpr const char* result_schema_version = "1.0";

struct CsvError : std::runtime_error {
    int row;  // 1-based line number in the file, 0 when not line-specific
    CsvError(const std::string& msg, int row_number) : std::runtime_error(msg), row(row_number) {}
};

// CSV schemas (comma separated, '#' comment lines permitted, required header):
//   ODMR:       freq_mhz,pl_norm[,counts]
//   decay:      time_us,signal
//   saturation: power_mw,rate_hz
// Writers emit 17 significant digits so read/write round-trips are lossless.
OdmrSpectrum read_odmr_csv(std::istream& in);
OdmrSpectrum read_odmr_csv_file(const std::string& path);
void write_odmr_csv(std::ostream& out, const OdmrSpectrum& spectrum);
void write_odmr_csv_file(const std::string& path, const OdmrSpectrum& spectrum);

DecayRecord read_decay_csv(std::istream& in, DecayKind kind);
DecayRecord read_decay_csv_file(const std::string& path, DecayKind kind);
void write_decay_csv(std::ostream& out, const DecayRecord& record);
void write_decay_csv_file(const std::string& path, const DecayRecord& record);

SaturationCurve read_saturation_csv(std::istream& in);
SaturationCurve read_saturation_csv_file(const std::string& path);
void write_saturation_csv(std::ostream& out, const SaturationCurve& curve);
void write_saturation_csv_file(const std::string& path, const SaturationCurve& curve);

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Parsed and validated run configuration. Every value is checked against the
// target type's invariants before any computation runs.
struct RunConfig {
    NvModel model;
    double g_factor = constants::g_factor_default;

    // simulate-odmr
    std::optional<FieldVector> field_mt;
    std::vector<LorentzianPeak> peaks;  // explicit peak list alternative
    double grid_start_mhz = 2700.0;
    double grid_stop_mhz = 3040.0;
    int grid_points = 1701;
    double fwhm_mhz = 6.0;
    double contrast = 0.03;
    double counts_per_point = 0.0;  // 0 = noiseless
    std::uint64_t seed = 1;

    // fitting
    int n_peaks = 0;  // 0 = auto
    bool shared_width = false;
    double pairing_floor_mhz = 0.5;

    // decay synthesis/fit init (optional)
    std::optional<DecayParams> decay_init;

    SensitivityInputs sensitivity;
    PhotonBudget budget;

    nlohmann::json echo;  // the raw document, echoed into results
};

RunConfig parse_config(const nlohmann::json& doc);
RunConfig parse_config_file(const std::string& path);

std::vector<double> make_grid(const RunConfig& config);

// Versioned result-document envelope; `results` keys carry units in their
// names (e.g. eta_dc_t_per_sqrthz).
nlohmann::json make_result_document(const std::string& command, const nlohmann::json& config_echo,
                                    const nlohmann::json& results,
                                    const std::vector<std::string>& warnings);

nlohmann::json peak_set_to_json(const PeakSet& peaks);
PeakSet peak_set_from_json(const nlohmann::json& doc);
nlohmann::json fit_result_to_json(const FitResult& fit);
nlohmann::json reconstruction_to_json(const ReconstructionResult& result);
nlohmann::json projection_set_to_json(const ProjectionSet& proj);
nlohmann::json sensitivity_report_to_json(const SensitivityReport& report);

}  // namespace nvmag
