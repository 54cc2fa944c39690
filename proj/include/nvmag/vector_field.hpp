#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "nvmag/fitters.hpp"
#include "nvmag/spin_model.hpp"

namespace nvmag {

struct DegenerateGeometryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct PairingFailedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ReconstructionResult {
    FieldVector b;                 // canonical: first nonzero component positive
    std::array<int, 4> signs{};    // signed projections s_i*b_i ~ n_i . b
    double residual_mt = 0.0;      // RMS signed-projection misfit
    std::string ambiguity_note;    // empty unless sign patterns tie
    std::vector<std::array<int, 4>> tied_patterns;
    Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();  // zero without sigma input

    // 1-sigma on |b| from the covariance along the field direction.
    double b_norm_sigma_mt() const;
};

// Unsigned per-axis projections |n_i . B| with zero sigma.
ProjectionSet project_field(const NvModel& model, const FieldVector& b);

// Least-squares field from four unsigned projections: all 8 sign patterns
// modulo global sign are tried, the minimum-residual solution wins, and the
// ±B ambiguity is resolved to the canonical representative. Entries with
// nonzero sigma are weighted by 1/sigma^2. NaN projections are skipped;
// at least 3 finite entries are required.
ReconstructionResult reconstruct_field(const NvModel& model, const ProjectionSet& proj);

// Pairs fitted resonance centers symmetrically about D (greedy matching on
// |nu_plus + nu_minus - 2D|), inverts each pair to a projection magnitude, and
// propagates the center uncertainties. Accepts 2k centers for k <= 4; the
// unresolved orientations come back as NaN entries. Throws PairingFailedError
// when no pairing beats 4*max(fit sigma, pairing_floor_mhz).
ProjectionSet projections_from_odmr(const NvModel& model, const PeakSet& peaks,
                                    double pairing_floor_mhz = 0.5);

}  // namespace nvmag
