#include "nvmag/spectra.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace nvmag {

namespace {

void require_increasing(const std::vector<double>& grid, const char* what) {
    if (grid.empty()) throw std::invalid_argument(std::string(what) + ": empty grid");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1]))
            throw std::invalid_argument(std::string(what) + ": grid not strictly increasing at index " +
                                        std::to_string(i));
}

}  // namespace

void OdmrSpectrum::validate() const {
    require_increasing(freqs_mhz, "OdmrSpectrum");
    if (pl_norm.size() != freqs_mhz.size())
        throw std::invalid_argument("OdmrSpectrum: length mismatch");
    if (!counts_per_point.empty() && counts_per_point.size() != freqs_mhz.size())
        throw std::invalid_argument("OdmrSpectrum: counts length mismatch");
    for (double v : pl_norm)
        if (!(v >= 0.0)) throw std::invalid_argument("OdmrSpectrum: pl_norm must be >= 0");
}

void DecayRecord::validate() const {
    require_increasing(times_us, "DecayRecord");
    if (signal.size() != times_us.size())
        throw std::invalid_argument("DecayRecord: length mismatch");
}

DecayKind decay_kind_from_string(const std::string& name) {
    if (name == "rabi") return DecayKind::rabi;
    if (name == "fid") return DecayKind::fid;
    if (name == "hahn") return DecayKind::hahn;
    if (name == "t1") return DecayKind::t1;
    throw std::invalid_argument("unknown decay kind: " + name);
}

std::string to_string(DecayKind kind) {
    switch (kind) {
        case DecayKind::rabi: return "rabi";
        case DecayKind::fid: return "fid";
        case DecayKind::hahn: return "hahn";
        case DecayKind::t1: return "t1";
    }
    return "?";
}

OdmrSpectrum synthesize_odmr(const std::vector<LorentzianPeak>& peaks,
                             const std::vector<double>& grid_mhz) {
    require_increasing(grid_mhz, "synthesize_odmr");
    if (peaks.empty()) throw std::invalid_argument("synthesize_odmr: empty peak list");
    for (const auto& p : peaks) {
        if (!(p.fwhm_mhz > 0.0)) throw std::invalid_argument("synthesize_odmr: fwhm must be > 0");
        if (!(p.contrast > 0.0 && p.contrast <= 1.0))
            throw std::invalid_argument("synthesize_odmr: contrast must be in (0, 1]");
    }

    OdmrSpectrum out;
    out.freqs_mhz = grid_mhz;
    out.pl_norm.reserve(grid_mhz.size());
    for (double f : grid_mhz) {
        double pl = 1.0;
        for (const auto& p : peaks) {
            const double x = (f - p.center_mhz) / (0.5 * p.fwhm_mhz);
            pl -= p.contrast / (1.0 + x * x);
        }
        out.pl_norm.push_back(pl);
    }
    return out;
}

std::vector<double> dip_centers_from_field(const NvModel& model, const FieldVector& b) {
    std::vector<double> centers;
    centers.reserve(8);
    for (const auto& axis : model.axes) {
        const double proj = std::abs(axis.dot(b.vec()));
        auto [nu_minus, nu_plus] = transition_frequencies(model, proj);
        centers.push_back(nu_minus);
        centers.push_back(nu_plus);
    }
    return centers;
}

OdmrSpectrum spectrum_from_field(const NvModel& model, const FieldVector& b,
                                 double fwhm_mhz, double contrast,
                                 const std::vector<double>& grid_mhz) {
    std::vector<LorentzianPeak> peaks;
    for (double c : dip_centers_from_field(model, b))
        peaks.push_back({c, fwhm_mhz, contrast});
    return synthesize_odmr(peaks, grid_mhz);
}

OdmrSpectrum add_shot_noise(const OdmrSpectrum& spectrum, double counts_per_point,
                            std::uint64_t seed) {
    spectrum.validate();
    if (!(counts_per_point > 0.0))
        throw std::invalid_argument("add_shot_noise: counts_per_point must be > 0");

    std::mt19937_64 rng(seed);
    OdmrSpectrum out = spectrum;
    out.counts_per_point.assign(spectrum.pl_norm.size(), counts_per_point);
    for (std::size_t i = 0; i < out.pl_norm.size(); ++i) {
        const double mean = spectrum.pl_norm[i] * counts_per_point;
        std::poisson_distribution<long long> poisson(mean);
        out.pl_norm[i] = static_cast<double>(poisson(rng)) / counts_per_point;
    }
    return out;
}

double decay_model_value(DecayKind kind, const DecayParams& p, double t_us) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    switch (kind) {
        case DecayKind::rabi:
            return p.amplitude * std::exp(-t_us / p.decay_us) *
                       std::cos(two_pi * p.freq_mhz * t_us + p.phase_rad) +
                   p.offset;
        case DecayKind::fid: {
            const double envelope =
                p.amplitude * std::exp(-std::pow(t_us / p.decay_us, p.stretch));
            double beat = 0.0;
            for (int m = -1; m <= 1; ++m)
                beat += std::cos(two_pi * (p.freq_mhz + m * p.hyperfine_mhz) * t_us);
            return envelope * beat / 3.0 + p.offset;
        }
        case DecayKind::hahn:
            return p.amplitude * std::exp(-std::pow(t_us / p.decay_us, p.stretch)) + p.offset;
        case DecayKind::t1:
            return p.amplitude * std::exp(-t_us / p.decay_us) + p.offset;
    }
    throw std::invalid_argument("decay_model_value: unknown kind");
}

DecayRecord synthesize_decay(DecayKind kind, const DecayParams& params,
                             const std::vector<double>& times_us, std::uint64_t seed) {
    require_increasing(times_us, "synthesize_decay");
    if (!(params.decay_us > 0.0))
        throw std::invalid_argument("synthesize_decay: decay constant must be > 0");
    if (!(params.stretch > 0.0))
        throw std::invalid_argument("synthesize_decay: stretch exponent must be > 0");
    if (params.noise_sigma < 0.0)
        throw std::invalid_argument("synthesize_decay: noise_sigma must be >= 0");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    DecayRecord record;
    record.model_kind = kind;
    record.times_us = times_us;
    record.signal.reserve(times_us.size());
    for (double t : times_us) {
        double v = decay_model_value(kind, params, t);
        if (params.noise_sigma > 0.0) v += params.noise_sigma * gauss(rng);
        record.signal.push_back(v);
    }
    return record;
}

}  // namespace nvmag
