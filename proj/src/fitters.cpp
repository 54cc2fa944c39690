#include "nvmag/fitters.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <numbers>

namespace nvmag {

namespace {

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double hi = v[mid];
    if (v.size() % 2 == 0) {
        std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
        return 0.5 * (v[mid - 1] + hi);
    }
    return hi;
}

double logit(double p) { return std::log(p / (1.0 - p)); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Eigen::VectorXd compute_sigma(const Eigen::MatrixXd& jacobian, double cost, int n_residuals) {
    const int n_params = static_cast<int>(jacobian.cols());
    const int dof = n_residuals - n_params;
    const double variance = dof > 0 ? cost / dof : 0.0;
    Eigen::MatrixXd jtj = jacobian.transpose() * jacobian;
    Eigen::MatrixXd cov = variance * jtj.completeOrthogonalDecomposition().pseudoInverse();
    Eigen::VectorXd sigma(n_params);
    for (int j = 0; j < n_params; ++j)
        sigma(j) = cov(j, j) > 0.0 ? std::sqrt(cov(j, j)) : 0.0;
    return sigma;
}

}  // namespace

double FitResult::param(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return params(static_cast<Eigen::Index>(i));
    throw std::out_of_range("FitResult: no parameter named " + name);
}

double FitResult::sigma_of(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return sigma(static_cast<Eigen::Index>(i));
    throw std::out_of_range("FitResult: no parameter named " + name);
}

bool FitResult::has_flag(const std::string& flag) const {
    return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

Eigen::MatrixXd finite_difference_jacobian(const ResidualFn& residual,
                                           const Eigen::VectorXd& theta) {
    const Eigen::VectorXd r0 = residual(theta);
    Eigen::MatrixXd jac(r0.size(), theta.size());
    Eigen::VectorXd t = theta;
    for (Eigen::Index j = 0; j < theta.size(); ++j) {
        const double step = std::max(1e-6, 1e-6 * std::abs(theta(j)));
        t(j) = theta(j) + step;
        const Eigen::VectorXd r_plus = residual(t);
        t(j) = theta(j) - step;
        const Eigen::VectorXd r_minus = residual(t);
        t(j) = theta(j);
        jac.col(j) = (r_plus - r_minus) / (2.0 * step);
    }
    return jac;
}

FitResult levenberg_marquardt(const ResidualFn& residual, const JacobianFn& jacobian,
                              const Eigen::VectorXd& theta0, const LmOptions& opts) {
    if (!theta0.allFinite())
        throw std::invalid_argument("levenberg_marquardt: theta0 must be finite");

    const JacobianFn jac_fn =
        jacobian ? jacobian
                 : JacobianFn([&residual](const Eigen::VectorXd& t) {
                       return finite_difference_jacobian(residual, t);
                   });

    FitResult result;
    Eigen::VectorXd theta = theta0;
    Eigen::VectorXd r = residual(theta);
    if (static_cast<Eigen::Index>(r.size()) < theta.size())
        throw std::invalid_argument("levenberg_marquardt: fewer residuals than parameters");
    if (!r.allFinite()) {
        result.status = FitStatus::non_finite;
        result.params = theta;
        result.sigma = Eigen::VectorXd::Zero(theta.size());
        return result;
    }

    double cost = r.squaredNorm();
    double lambda = opts.lambda_init;
    Eigen::MatrixXd jac = jac_fn(theta);
    FitStatus status = FitStatus::max_iterations;
    int iter = 0;

    while (iter < opts.max_iterations) {
        ++iter;
        const Eigen::VectorXd gradient = jac.transpose() * r;
        if (gradient.lpNorm<Eigen::Infinity>() < opts.gradient_tol) {
            status = FitStatus::converged;
            break;
        }

        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        bool accepted = false;
        while (!accepted) {
            Eigen::MatrixXd damped = jtj;
            for (Eigen::Index j = 0; j < damped.rows(); ++j)
                damped(j, j) += lambda * std::max(jtj(j, j), 1e-30);
            const Eigen::VectorXd step = damped.ldlt().solve(-gradient);

            bool step_ok = step.allFinite();
            Eigen::VectorXd theta_trial;
            Eigen::VectorXd r_trial;
            double cost_trial = 0.0;
            if (step_ok) {
                theta_trial = theta + step;
                r_trial = residual(theta_trial);
                step_ok = r_trial.allFinite();
                if (step_ok) cost_trial = r_trial.squaredNorm();
            }

            if (step_ok && cost_trial <= cost) {
                // Undamped refinement with the same Jacobian: exact for locally
                // linear models, kept only when it reduces the cost further.
                const Eigen::VectorXd polish =
                    jtj.ldlt().solve(-(jac.transpose() * r_trial));
                if (polish.allFinite()) {
                    const Eigen::VectorXd theta_polish = theta_trial + polish;
                    const Eigen::VectorXd r_polish = residual(theta_polish);
                    if (r_polish.allFinite() && r_polish.squaredNorm() < cost_trial) {
                        theta_trial = theta_polish;
                        r_trial = r_polish;
                        cost_trial = r_trial.squaredNorm();
                    }
                }
                const double reduction = cost > 0.0 ? (cost - cost_trial) / cost : 0.0;
                theta = theta_trial;
                r = r_trial;
                cost = cost_trial;
                jac = jac_fn(theta);
                lambda = std::max(lambda / 10.0, 1e-15);
                accepted = true;
                if (reduction < opts.cost_reduction_tol) status = FitStatus::converged;
            } else {
                lambda *= 10.0;
                if (lambda > opts.lambda_ceiling) {
                    status = step_ok ? FitStatus::singular : FitStatus::non_finite;
                    break;
                }
            }
        }
        if (status != FitStatus::max_iterations) break;
    }

    result.params = theta;
    result.iterations = iter;
    result.status = status;
    result.converged = (status == FitStatus::converged);
    result.residual_rms = std::sqrt(cost / static_cast<double>(r.size()));
    result.sigma = compute_sigma(jac, cost, static_cast<int>(r.size()));
    return result;
}

// ---------------------------------------------------------------------------
// Peak detection
// ---------------------------------------------------------------------------

PeakSet detect_peaks(const OdmrSpectrum& spectrum) {
    spectrum.validate();
    const auto& f = spectrum.freqs_mhz;
    const auto& y = spectrum.pl_norm;
    const int n = static_cast<int>(y.size());
    if (n < 16) throw std::invalid_argument("detect_peaks: need at least 16 samples");

    int window = std::max(5, n / 100);
    if (window % 2 == 0) ++window;
    const int half = window / 2;

    std::vector<double> smooth(n);
    for (int i = 0; i < n; ++i) {
        const int lo = std::max(0, i - half);
        const int hi = std::min(n - 1, i + half);
        double sum = 0.0;
        for (int j = lo; j <= hi; ++j) sum += y[j];
        smooth[i] = sum / (hi - lo + 1);
    }

    // Noise scale from the MAD of first differences, robust to the dips.
    std::vector<double> diffs(n - 1);
    for (int i = 0; i + 1 < n; ++i) diffs[i] = y[i + 1] - y[i];
    const double diff_median = median_of(diffs);
    std::vector<double> abs_dev(diffs.size());
    for (std::size_t i = 0; i < diffs.size(); ++i) abs_dev[i] = std::abs(diffs[i] - diff_median);
    const double noise = 1.4826 * median_of(abs_dev) / std::numbers::sqrt2;

    const double baseline = median_of(smooth);
    const double threshold = baseline - 3.0 * noise;

    std::vector<int> minima;
    for (int i = 1; i + 1 < n; ++i) {
        if (!(smooth[i] < threshold)) continue;
        const int lo = std::max(0, i - half);
        const int hi = std::min(n - 1, i + half);
        bool is_min = true;
        for (int j = lo; j <= hi && is_min; ++j)
            if (smooth[j] < smooth[i]) is_min = false;
        if (!is_min || smooth[i - 1] < smooth[i] || smooth[i + 1] < smooth[i]) continue;
        minima.push_back(i);
        i += half;  // skip the rest of this window
    }

    // Merge candidates that are not separated by a genuine rise: noise wiggles
    // inside one dip produce several local minima, a real saddle between two
    // dips climbs well above the noise scale.
    std::vector<int> kept;
    for (int idx : minima) {
        if (kept.empty()) {
            kept.push_back(idx);
            continue;
        }
        const int prev = kept.back();
        double barrier = smooth[prev];
        for (int j = prev; j <= idx; ++j) barrier = std::max(barrier, smooth[j]);
        const double rise = barrier - std::max(smooth[prev], smooth[idx]);
        if (rise >= 3.0 * noise) {
            kept.push_back(idx);
        } else if (smooth[idx] < smooth[prev]) {
            kept.back() = idx;  // same dip, keep the deeper sample
        }
    }

    PeakSet peaks;
    for (int i : kept) {
        const double depth = baseline - smooth[i];
        const double half_level = baseline - 0.5 * depth;
        int left = i;
        while (left > 0 && smooth[left] < half_level) --left;
        int right = i;
        while (right + 1 < n && smooth[right] < half_level) ++right;
        double width = f[right] - f[left];
        if (!(width > 0.0)) width = 4.0 * (f[1] - f[0]);

        PeakEstimate est;
        est.center_mhz = f[i];
        est.fwhm_mhz = width;
        est.contrast = std::clamp(depth, 1e-6, 1.0);
        peaks.push_back(est);
    }
    if (peaks.empty()) throw NoPeaksError("detect_peaks: no dip crosses the noise threshold");
    std::sort(peaks.begin(), peaks.end(),
              [](const PeakEstimate& a, const PeakEstimate& b) { return a.center_mhz < b.center_mhz; });
    return peaks;
}

// ---------------------------------------------------------------------------
// Multi-Lorentzian ODMR fit
// ---------------------------------------------------------------------------
//
// Internal parameterization keeps the engine unconstrained: widths are fitted
// as log(fwhm) and contrasts through a logit, so every engine point maps to a
// physical peak set.
//
// theta layout (independent widths): [baseline, (center, log fwhm, logit c)*k]
// theta layout (shared width):       [baseline, log fwhm, (center, logit c)*k]

namespace {

struct OdmrModelLayout {
    int n_peaks = 0;
    bool shared_width = false;

    int size() const { return shared_width ? 2 + 2 * n_peaks : 1 + 3 * n_peaks; }
    int center_index(int k) const { return shared_width ? 2 + 2 * k : 1 + 3 * k; }
    int width_index(int k) const { return shared_width ? 1 : 2 + 3 * k; }
    int contrast_index(int k) const { return shared_width ? 3 + 2 * k : 3 + 3 * k; }
};

Eigen::VectorXd odmr_model_values(const OdmrModelLayout& layout, const Eigen::VectorXd& theta,
                                  const std::vector<double>& freqs) {
    Eigen::VectorXd out(freqs.size());
    for (std::size_t i = 0; i < freqs.size(); ++i) {
        double pl = theta(0);
        for (int k = 0; k < layout.n_peaks; ++k) {
            const double center = theta(layout.center_index(k));
            const double fwhm = std::exp(theta(layout.width_index(k)));
            const double contrast = sigmoid(theta(layout.contrast_index(k)));
            const double x = (freqs[i] - center) / (0.5 * fwhm);
            pl -= contrast / (1.0 + x * x);
        }
        out(static_cast<Eigen::Index>(i)) = pl;
    }
    return out;
}

Eigen::MatrixXd odmr_model_jacobian(const OdmrModelLayout& layout, const Eigen::VectorXd& theta,
                                    const std::vector<double>& freqs) {
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(freqs.size()),
                                                layout.size());
    for (std::size_t i = 0; i < freqs.size(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        jac(row, 0) = 1.0;
        for (int k = 0; k < layout.n_peaks; ++k) {
            const double center = theta(layout.center_index(k));
            const double fwhm = std::exp(theta(layout.width_index(k)));
            const double contrast = sigmoid(theta(layout.contrast_index(k)));
            const double x = (freqs[i] - center) / (0.5 * fwhm);
            const double denom = 1.0 + x * x;
            const double denom2 = denom * denom;
            jac(row, layout.center_index(k)) += -4.0 * contrast * x / (fwhm * denom2);
            jac(row, layout.width_index(k)) += -2.0 * contrast * x * x / denom2;
            jac(row, layout.contrast_index(k)) += -(1.0 / denom) * contrast * (1.0 - contrast);
        }
    }
    return jac;
}

}  // namespace

OdmrFitResult fit_odmr(const OdmrSpectrum& spectrum, const OdmrFitOptions& opts) {
    spectrum.validate();

    PeakSet seeds;
    if (opts.init) {
        seeds = *opts.init;
        if (seeds.empty()) throw std::invalid_argument("fit_odmr: empty init peak set");
    } else {
        seeds = detect_peaks(spectrum);
        const int wanted = opts.n_peaks > 0 ? opts.n_peaks : static_cast<int>(seeds.size());
        if (static_cast<int>(seeds.size()) < wanted)
            throw PeakCountMismatchError("fit_odmr: detected " + std::to_string(seeds.size()) +
                                         " candidates, " + std::to_string(wanted) + " requested");
        if (static_cast<int>(seeds.size()) > wanted) {
            std::sort(seeds.begin(), seeds.end(), [](const PeakEstimate& a, const PeakEstimate& b) {
                return a.contrast > b.contrast;
            });
            seeds.resize(wanted);
            std::sort(seeds.begin(), seeds.end(), [](const PeakEstimate& a, const PeakEstimate& b) {
                return a.center_mhz < b.center_mhz;
            });
        }
    }
    if (opts.n_peaks > 0 && static_cast<int>(seeds.size()) != opts.n_peaks)
        throw PeakCountMismatchError("fit_odmr: init has " + std::to_string(seeds.size()) +
                                     " peaks, " + std::to_string(opts.n_peaks) + " requested");

    OdmrModelLayout layout{static_cast<int>(seeds.size()), opts.shared_width};
    Eigen::VectorXd theta0(layout.size());
    theta0(0) = median_of(spectrum.pl_norm);
    if (layout.shared_width) {
        double mean_log_w = 0.0;
        for (const auto& s : seeds) mean_log_w += std::log(s.fwhm_mhz);
        theta0(1) = mean_log_w / seeds.size();
    }
    for (int k = 0; k < layout.n_peaks; ++k) {
        theta0(layout.center_index(k)) = seeds[k].center_mhz;
        if (!layout.shared_width) theta0(layout.width_index(k)) = std::log(seeds[k].fwhm_mhz);
        theta0(layout.contrast_index(k)) = logit(std::clamp(seeds[k].contrast, 1e-6, 1.0 - 1e-6));
    }

    const auto& freqs = spectrum.freqs_mhz;
    auto [residual, jacobian] =
        detail::odmr_model_functions(spectrum, layout.n_peaks, layout.shared_width);

    OdmrFitResult out;
    out.fit = levenberg_marquardt(residual, jacobian, theta0, opts.lm);
    out.baseline = out.fit.params(0);
    out.baseline_sigma = out.fit.sigma(0);

    // Map transformed parameters (and their sigmas) back to physical units.
    std::vector<double> grid_diffs(freqs.size() - 1);
    for (std::size_t i = 0; i + 1 < freqs.size(); ++i) grid_diffs[i] = freqs[i + 1] - freqs[i];
    const double grid_step = median_of(grid_diffs);

    for (int k = 0; k < layout.n_peaks; ++k) {
        PeakEstimate p;
        p.center_mhz = out.fit.params(layout.center_index(k));
        p.center_sigma_mhz = out.fit.sigma(layout.center_index(k));
        p.fwhm_mhz = std::exp(out.fit.params(layout.width_index(k)));
        p.fwhm_sigma_mhz = p.fwhm_mhz * out.fit.sigma(layout.width_index(k));
        p.contrast = sigmoid(out.fit.params(layout.contrast_index(k)));
        p.contrast_sigma = p.contrast * (1.0 - p.contrast) * out.fit.sigma(layout.contrast_index(k));
        out.peaks.push_back(p);
        if (p.fwhm_mhz < 2.0 * grid_step) {
            out.fit.converged = false;
            if (!out.fit.has_flag("degenerate_width")) out.fit.flags.push_back("degenerate_width");
        }
    }
    std::sort(out.peaks.begin(), out.peaks.end(),
              [](const PeakEstimate& a, const PeakEstimate& b) { return a.center_mhz < b.center_mhz; });

    out.fit.names.assign(static_cast<std::size_t>(layout.size()), "");
    out.fit.names[0] = "baseline";
    if (layout.shared_width) out.fit.names[1] = "log_fwhm_shared";
    for (int k = 0; k < layout.n_peaks; ++k) {
        out.fit.names[static_cast<std::size_t>(layout.center_index(k))] =
            "center_" + std::to_string(k);
        if (!layout.shared_width)
            out.fit.names[static_cast<std::size_t>(layout.width_index(k))] =
                "log_fwhm_" + std::to_string(k);
        out.fit.names[static_cast<std::size_t>(layout.contrast_index(k))] =
            "logit_contrast_" + std::to_string(k);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Coherence-decay fits
// ---------------------------------------------------------------------------

namespace {

// Coarse periodogram scan; returns frequencies of the strongest local maxima.
std::vector<double> periodogram_peaks(const std::vector<double>& t, const std::vector<double>& y,
                                      int max_peaks) {
    const double span = t.back() - t.front();
    const double dt = span / static_cast<double>(t.size() - 1);
    const double f_max = 0.5 / dt;
    const double f_min = 0.25 / span;
    const int n_scan = 2000;

    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());

    std::vector<double> freq(n_scan), power(n_scan);
    for (int i = 0; i < n_scan; ++i) {
        const double f = f_min + (f_max - f_min) * i / (n_scan - 1);
        std::complex<double> acc(0.0, 0.0);
        for (std::size_t j = 0; j < t.size(); ++j)
            acc += (y[j] - mean) * std::polar(1.0, -2.0 * std::numbers::pi * f * t[j]);
        freq[i] = f;
        power[i] = std::norm(acc);
    }

    double peak_power = *std::max_element(power.begin(), power.end());
    std::vector<std::pair<double, double>> maxima;  // (power, freq)
    for (int i = 1; i + 1 < n_scan; ++i)
        if (power[i] > power[i - 1] && power[i] >= power[i + 1] && power[i] > 0.1 * peak_power)
            maxima.push_back({power[i], freq[i]});
    std::sort(maxima.rbegin(), maxima.rend());
    if (static_cast<int>(maxima.size()) > max_peaks) maxima.resize(max_peaks);

    std::vector<double> out;
    for (const auto& [p, f] : maxima) out.push_back(f);
    return out;
}

// Decay model values and, when jac != nullptr, the analytic Jacobian in the
// transformed space (decay constant as log).
//   t1/hahn theta: [a, log T, c];  rabi: [a, log T, f, phi, c];
//   fid: [a, log T, f, A, c]
Eigen::VectorXd decay_curve(DecayKind kind, double stretch, const std::vector<double>& times,
                            const Eigen::VectorXd& th, Eigen::MatrixXd* jac) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    const std::size_t n = times.size();
    Eigen::VectorXd values(n);
    const double a = th(0);
    const double decay = std::exp(th(1));
    for (std::size_t i = 0; i < n; ++i) {
        const double t = times[i];
        const auto row = static_cast<Eigen::Index>(i);
        switch (kind) {
            case DecayKind::t1: {
                const double e = std::exp(-t / decay);
                values(row) = a * e + th(2);
                if (jac) {
                    (*jac)(row, 0) = e;
                    (*jac)(row, 1) = a * e * t / decay;
                    (*jac)(row, 2) = 1.0;
                }
                break;
            }
            case DecayKind::hahn: {
                const double z = std::pow(t / decay, stretch);
                const double e = std::exp(-z);
                values(row) = a * e + th(2);
                if (jac) {
                    (*jac)(row, 0) = e;
                    (*jac)(row, 1) = a * e * stretch * z;
                    (*jac)(row, 2) = 1.0;
                }
                break;
            }
            case DecayKind::rabi: {
                const double e = std::exp(-t / decay);
                const double arg = two_pi * th(2) * t + th(3);
                const double c = std::cos(arg);
                const double s = std::sin(arg);
                values(row) = a * e * c + th(4);
                if (jac) {
                    (*jac)(row, 0) = e * c;
                    (*jac)(row, 1) = a * e * c * t / decay;
                    (*jac)(row, 2) = -a * e * s * two_pi * t;
                    (*jac)(row, 3) = -a * e * s;
                    (*jac)(row, 4) = 1.0;
                }
                break;
            }
            case DecayKind::fid: {
                const double z = std::pow(t / decay, stretch);
                const double e = std::exp(-z);
                double beat = 0.0, dbeat_df = 0.0, dbeat_da = 0.0;
                for (int m = -1; m <= 1; ++m) {
                    const double arg = two_pi * (th(2) + m * th(3)) * t;
                    beat += std::cos(arg);
                    dbeat_df += -std::sin(arg) * two_pi * t;
                    dbeat_da += -std::sin(arg) * two_pi * t * m;
                }
                values(row) = a * e * beat / 3.0 + th(4);
                if (jac) {
                    (*jac)(row, 0) = e * beat / 3.0;
                    (*jac)(row, 1) = a * e * stretch * z * beat / 3.0;
                    (*jac)(row, 2) = a * e * dbeat_df / 3.0;
                    (*jac)(row, 3) = a * e * dbeat_da / 3.0;
                    (*jac)(row, 4) = 1.0;
                }
                break;
            }
        }
    }
    return values;
}

DecayParams default_decay_init(const DecayRecord& record, DecayKind kind) {
    const auto& t = record.times_us;
    const auto& y = record.signal;
    const std::size_t n = y.size();

    DecayParams init;
    const std::size_t tail = std::max<std::size_t>(1, n / 10);
    double tail_mean = 0.0;
    for (std::size_t i = n - tail; i < n; ++i) tail_mean += y[i];
    tail_mean /= static_cast<double>(tail);
    init.offset = tail_mean;
    init.decay_us = 0.5 * (t.back() - t.front());

    if (kind == DecayKind::rabi || kind == DecayKind::fid) {
        const double y_max = *std::max_element(y.begin(), y.end());
        const double y_min = *std::min_element(y.begin(), y.end());
        init.amplitude = 0.5 * (y_max - y_min);
        const auto peaks = periodogram_peaks(t, y, 3);
        if (kind == DecayKind::rabi) {
            init.freq_mhz = peaks.empty() ? 1.0 / init.decay_us : peaks.front();
            init.phase_rad = 0.0;
        } else {
            init.hyperfine_mhz = constants::a_hyperfine_mhz_default;
            if (peaks.size() == 3) {
                auto sorted = peaks;
                std::sort(sorted.begin(), sorted.end());
                init.freq_mhz = sorted[1];
                init.hyperfine_mhz = 0.5 * (sorted[2] - sorted[0]);
            } else if (!peaks.empty()) {
                init.freq_mhz = peaks.front();
            } else {
                init.freq_mhz = 1.0 / init.decay_us;
            }
        }
    } else {
        init.amplitude = y.front() - tail_mean;
        if (init.amplitude == 0.0) init.amplitude = 1.0;
    }
    return init;
}

}  // namespace

FitResult fit_decay(const DecayRecord& record, DecayKind kind, const DecayFitOptions& opts) {
    record.validate();
    const DecayParams init = opts.init ? *opts.init : default_decay_init(record, kind);
    if (!(init.decay_us > 0.0))
        throw std::invalid_argument("fit_decay: initial decay constant must be > 0");

    // theta layouts (decay constant fitted as a log):
    //   t1/hahn: [a, log T, c]
    //   rabi:    [a, log T, f, phi, c]
    //   fid:     [a, log T, f, A, c]
    const bool oscillatory = (kind == DecayKind::rabi || kind == DecayKind::fid);
    const int n_params = oscillatory ? 5 : 3;
    Eigen::VectorXd theta0(n_params);
    theta0(0) = init.amplitude;
    theta0(1) = std::log(init.decay_us);
    if (kind == DecayKind::rabi) {
        theta0(2) = init.freq_mhz;
        theta0(3) = init.phase_rad;
        theta0(4) = init.offset;
    } else if (kind == DecayKind::fid) {
        theta0(2) = init.freq_mhz;
        theta0(3) = init.hyperfine_mhz;
        theta0(4) = init.offset;
    } else {
        theta0(2) = init.offset;
    }

    const auto& times = record.times_us;
    const double stretch = init.stretch;

    ResidualFn residual;
    JacobianFn jacobian;
    std::tie(residual, jacobian) = detail::decay_model_functions(record, kind, stretch);

    FitResult result = levenberg_marquardt(residual, jacobian, theta0, opts.lm);

    // Re-express the log-decay parameter in time units.
    const double decay = std::exp(result.params(1));
    const double decay_sigma = decay * result.sigma(1);
    result.params(1) = decay;
    result.sigma(1) = decay_sigma;

    switch (kind) {
        case DecayKind::t1: result.names = {"amplitude", "t1_us", "offset"}; break;
        case DecayKind::hahn: result.names = {"amplitude", "t2_us", "offset"}; break;
        case DecayKind::rabi:
            result.names = {"amplitude", "t_rho_us", "freq_mhz", "phase_rad", "offset"};
            break;
        case DecayKind::fid:
            result.names = {"amplitude", "t2_star_us", "freq_mhz", "hyperfine_mhz", "offset"};
            break;
    }

    if (times.back() - times.front() < decay) result.flags.push_back("insufficient_span");
    return result;
}

// ---------------------------------------------------------------------------
// Saturation fit
// ---------------------------------------------------------------------------

void SaturationCurve::validate() const {
    if (powers_mw.size() != rates_hz.size())
        throw std::invalid_argument("SaturationCurve: length mismatch");
    if (powers_mw.size() < 3) throw std::invalid_argument("SaturationCurve: need >= 3 points");
    for (std::size_t i = 0; i < powers_mw.size(); ++i) {
        if (!(powers_mw[i] > 0.0))
            throw std::invalid_argument("SaturationCurve: powers must be positive");
        if (i > 0 && !(powers_mw[i] > powers_mw[i - 1]))
            throw std::invalid_argument("SaturationCurve: powers must be increasing");
    }
}

FitResult fit_saturation(const SaturationCurve& curve, const LmOptions& lm) {
    curve.validate();
    const auto& p = curve.powers_mw;
    const auto& c = curve.rates_hz;

    // theta = [log c_sat, log p_sat]
    Eigen::VectorXd theta0(2);
    theta0(0) = std::log(2.0 * *std::max_element(c.begin(), c.end()));
    theta0(1) = std::log(median_of(p));

    auto [residual, jacobian] = detail::saturation_model_functions(curve);
    FitResult result = levenberg_marquardt(residual, jacobian, theta0, lm);

    const double c_sat = std::exp(result.params(0));
    const double p_sat = std::exp(result.params(1));
    result.sigma(0) = c_sat * result.sigma(0);
    result.sigma(1) = p_sat * result.sigma(1);
    result.params(0) = c_sat;
    result.params(1) = p_sat;
    result.names = {"c_sat_hz", "p_sat_mw"};

    if (p.back() < p_sat) result.flags.push_back("knee_not_spanned");
    return result;
}

// ---------------------------------------------------------------------------
// Test-support model builders
// ---------------------------------------------------------------------------

namespace detail {

std::pair<ResidualFn, JacobianFn> odmr_model_functions(OdmrSpectrum spectrum, int n_peaks,
                                                       bool shared_width) {
    const OdmrModelLayout layout{n_peaks, shared_width};
    auto freqs = std::make_shared<std::vector<double>>(spectrum.freqs_mhz);
    auto data = std::make_shared<std::vector<double>>(spectrum.pl_norm);
    ResidualFn residual = [layout, freqs, data](const Eigen::VectorXd& t) {
        Eigen::VectorXd r = odmr_model_values(layout, t, *freqs);
        for (Eigen::Index i = 0; i < r.size(); ++i) r(i) -= (*data)[static_cast<std::size_t>(i)];
        return r;
    };
    JacobianFn jacobian = [layout, freqs](const Eigen::VectorXd& t) {
        return odmr_model_jacobian(layout, t, *freqs);
    };
    return {residual, jacobian};
}

std::pair<ResidualFn, JacobianFn> decay_model_functions(DecayRecord record, DecayKind kind,
                                                        double stretch) {
    const int n_params = (kind == DecayKind::rabi || kind == DecayKind::fid) ? 5 : 3;
    auto times = std::make_shared<std::vector<double>>(record.times_us);
    auto data = std::make_shared<std::vector<double>>(record.signal);
    ResidualFn residual = [kind, stretch, times, data](const Eigen::VectorXd& th) {
        Eigen::VectorXd r = decay_curve(kind, stretch, *times, th, nullptr);
        for (Eigen::Index i = 0; i < r.size(); ++i) r(i) -= (*data)[static_cast<std::size_t>(i)];
        return r;
    };
    JacobianFn jacobian = [kind, stretch, times, n_params](const Eigen::VectorXd& th) {
        Eigen::MatrixXd jac(static_cast<Eigen::Index>(times->size()), n_params);
        decay_curve(kind, stretch, *times, th, &jac);
        return jac;
    };
    return {residual, jacobian};
}

std::pair<ResidualFn, JacobianFn> saturation_model_functions(SaturationCurve curve) {
    auto powers = std::make_shared<std::vector<double>>(curve.powers_mw);
    auto data = std::make_shared<std::vector<double>>(curve.rates_hz);
    ResidualFn residual = [powers, data](const Eigen::VectorXd& th) {
        Eigen::VectorXd r(powers->size());
        const double c_sat = std::exp(th(0));
        const double p_sat = std::exp(th(1));
        for (std::size_t i = 0; i < powers->size(); ++i)
            r(static_cast<Eigen::Index>(i)) =
                c_sat * (*powers)[i] / ((*powers)[i] + p_sat) - (*data)[i];
        return r;
    };
    JacobianFn jacobian = [powers](const Eigen::VectorXd& th) {
        Eigen::MatrixXd jac(static_cast<Eigen::Index>(powers->size()), 2);
        const double c_sat = std::exp(th(0));
        const double p_sat = std::exp(th(1));
        for (std::size_t i = 0; i < powers->size(); ++i) {
            const auto row = static_cast<Eigen::Index>(i);
            const double denom = (*powers)[i] + p_sat;
            jac(row, 0) = c_sat * (*powers)[i] / denom;
            jac(row, 1) = -c_sat * (*powers)[i] * p_sat / (denom * denom);
        }
        return jac;
    };
    return {residual, jacobian};
}

}  // namespace detail

}  // namespace nvmag
