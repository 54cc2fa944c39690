#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nvmag/spectra.hpp"

namespace nvmag {

// ---------------------------------------------------------------------------
// Levenberg-Marquardt engine
// ---------------------------------------------------------------------------

enum class FitStatus { converged, max_iterations, non_finite, singular };

struct LmOptions {
    int max_iterations = 500;
    double cost_reduction_tol = 1e-10;  // relative reduction of ||r||^2
    double gradient_tol = 1e-10;        // infinity norm of J^T r
    double lambda_init = 1e-3;
    double lambda_ceiling = 1e12;
};

struct FitResult {
    std::vector<std::string> names;
    Eigen::VectorXd params;
    Eigen::VectorXd sigma;      // 1-sigma from the linearized covariance
    double residual_rms = 0.0;
    bool converged = false;
    int iterations = 0;
    FitStatus status = FitStatus::max_iterations;
    std::vector<std::string> flags;

    double param(const std::string& name) const;
    double sigma_of(const std::string& name) const;
    bool has_flag(const std::string& flag) const;
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

// Central-difference Jacobian with step max(1e-6, 1e-6*|theta_j|).
Eigen::MatrixXd finite_difference_jacobian(const ResidualFn& residual,
                                           const Eigen::VectorXd& theta);

// Damped normal-equation LM: lambda starts at 1e-3, x10 on a rejected step,
// /10 on an accepted one. Pass a null JacobianFn to use central differences.
FitResult levenberg_marquardt(const ResidualFn& residual, const JacobianFn& jacobian,
                              const Eigen::VectorXd& theta0, const LmOptions& opts = {});

// ---------------------------------------------------------------------------
// Peak detection and model frontends
// ---------------------------------------------------------------------------

struct PeakEstimate {
    double center_mhz = 0.0;
    double fwhm_mhz = 0.0;
    double contrast = 0.0;
    double center_sigma_mhz = 0.0;
    double fwhm_sigma_mhz = 0.0;
    double contrast_sigma = 0.0;
};
using PeakSet = std::vector<PeakEstimate>;

struct NoPeaksError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct PeakCountMismatchError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Initial dip guesses: moving-average smoothing, local minima below
// baseline - 3*(noise MAD), width from half-depth crossings.
PeakSet detect_peaks(const OdmrSpectrum& spectrum);

struct OdmrFitOptions {
    int n_peaks = 0;          // 0 = take every detected candidate
    bool shared_width = false;
    std::optional<PeakSet> init;
    LmOptions lm;
};

struct OdmrFitResult {
    FitResult fit;
    PeakSet peaks;  // sorted ascending by center
    double baseline = 1.0;
    double baseline_sigma = 0.0;
};

OdmrFitResult fit_odmr(const OdmrSpectrum& spectrum, const OdmrFitOptions& opts = {});

struct DecayFitOptions {
    std::optional<DecayParams> init;
    LmOptions lm;
};

// Returns named parameters per kind:
//   t1:   amplitude, t1_us, offset
//   hahn: amplitude, t2_us, offset
//   rabi: amplitude, t_rho_us, freq_mhz, phase_rad, offset
//   fid:  amplitude, t2_star_us, freq_mhz, hyperfine_mhz, offset
FitResult fit_decay(const DecayRecord& record, DecayKind kind,
                    const DecayFitOptions& opts = {});

struct SaturationCurve {
    std::vector<double> powers_mw;
    std::vector<double> rates_hz;

    void validate() const;
};

// Fits C(P) = c_sat * P / (P + p_sat); parameters c_sat_hz, p_sat_mw.
FitResult fit_saturation(const SaturationCurve& curve, const LmOptions& opts = {});

namespace detail {

// Residual and analytic-Jacobian pairs in the internal (transformed)
// parameter space, for cross-checking against finite differences.
std::pair<ResidualFn, JacobianFn> odmr_model_functions(OdmrSpectrum spectrum, int n_peaks,
                                                       bool shared_width);
std::pair<ResidualFn, JacobianFn> decay_model_functions(DecayRecord record, DecayKind kind,
                                                        double stretch = 1.0);
std::pair<ResidualFn, JacobianFn> saturation_model_functions(SaturationCurve curve);

}  // namespace detail

}  // namespace nvmag
