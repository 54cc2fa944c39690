#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nvmag/spin_model.hpp"

namespace nvmag {

struct LorentzianPeak {
    double center_mhz = 0.0;
    double fwhm_mhz = 1.0;
    double contrast = 0.0;  // fractional dip depth in (0, 1]
};

// Sampled ODMR curve: strictly increasing frequency grid, normalized PL with
// baseline 1.0, and optionally the expected photon count behind each sample.
struct OdmrSpectrum {
    std::vector<double> freqs_mhz;
    std::vector<double> pl_norm;
    std::vector<double> counts_per_point;  // empty when no count statistics

    void validate() const;
};

enum class DecayKind { rabi, fid, hahn, t1 };

DecayKind decay_kind_from_string(const std::string& name);
std::string to_string(DecayKind kind);

struct DecayRecord {
    std::vector<double> times_us;
    std::vector<double> signal;
    DecayKind model_kind = DecayKind::t1;

    void validate() const;
};

// Model parameters for synthesize_decay. Interpretation per kind:
//   rabi: amplitude*exp(-t/decay_us)*cos(2 pi freq_mhz t + phase) + offset
//   fid:  amplitude*exp(-(t/decay_us)^stretch) *
//         [cos(2 pi (freq_mhz - A) t) + cos(2 pi freq_mhz t) + cos(2 pi (freq_mhz + A) t)]/3 + offset
//   hahn: amplitude*exp(-(t/decay_us)^stretch) + offset
//   t1:   amplitude*exp(-t/decay_us) + offset
struct DecayParams {
    double amplitude = 1.0;
    double decay_us = 1.0;
    double offset = 0.0;
    double freq_mhz = 0.0;      // Rabi frequency or FID detuning
    double phase_rad = 0.0;     // rabi only
    double stretch = 1.0;       // hahn/fid exponent
    double hyperfine_mhz = 0.0; // fid beat splitting
    double noise_sigma = 0.0;   // optional additive Gaussian read noise
};

// Sum of Lorentzian dips on a unit baseline:
//   pl(f) = 1 - sum_k c_k / (1 + ((f - f_k)/(w_k/2))^2)
OdmrSpectrum synthesize_odmr(const std::vector<LorentzianPeak>& peaks,
                             const std::vector<double>& grid_mhz);

// Eight-dip spectrum from a field vector: each axis projection is mapped
// through the closed-form resonance pair and rendered with a common width and
// contrast. Coinciding projections superpose additively.
OdmrSpectrum spectrum_from_field(const NvModel& model, const FieldVector& b,
                                 double fwhm_mhz, double contrast,
                                 const std::vector<double>& grid_mhz);

// The dip centers spectrum_from_field would use, unsorted (nu-, nu+ per axis).
std::vector<double> dip_centers_from_field(const NvModel& model, const FieldVector& b);

// Poisson shot noise at a given expected photon count per sample,
// deterministic for a fixed seed. Fills counts_per_point of the result.
OdmrSpectrum add_shot_noise(const OdmrSpectrum& spectrum, double counts_per_point,
                            std::uint64_t seed);

DecayRecord synthesize_decay(DecayKind kind, const DecayParams& params,
                             const std::vector<double>& times_us, std::uint64_t seed);

// Closed-form noiseless decay model value at one time point.
double decay_model_value(DecayKind kind, const DecayParams& params, double t_us);

}  // namespace nvmag
