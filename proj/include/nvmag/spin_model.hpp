#pragma once

#include <array>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

#include "nvmag/constants.hpp"

namespace nvmag {

// Ground-state spin model of the NV center: zero-field splittings, Zeeman
// coupling, 14N hyperfine constant, and the four <111> symmetry axes in the
// diamond cubic frame.
struct NvModel {
    double d_mhz = constants::d_mhz_default;
    double e_mhz = constants::e_mhz_default;
    double gamma_mhz_per_mt = constants::gamma_mhz_per_mt(constants::g_factor_default);
    double a_hf_mhz = constants::a_hyperfine_mhz_default;
    std::array<Eigen::Vector3d, 4> axes = default_axes();

    // Fixed <111> tetrahedral axis ordering; this ordering is part of the
    // file-format contract for projection sets.
    static std::array<Eigen::Vector3d, 4> default_axes();

    // Throws std::invalid_argument when an invariant fails.
    void validate() const;
};

struct FieldVector {
    double bx_mt = 0.0;
    double by_mt = 0.0;
    double bz_mt = 0.0;

    Eigen::Vector3d vec() const { return {bx_mt, by_mt, bz_mt}; }
    static FieldVector from_vec(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }
    double norm() const { return vec().norm(); }
};

// Four unsigned per-axis field projection magnitudes |n_i . B| with 1-sigma
// uncertainties. A NaN entry marks an unresolved orientation.
struct ProjectionSet {
    std::array<double, 4> b_proj_mt{};
    std::array<double, 4> sigma_mt{};

    int resolved_count() const;
};

// Closed-form resonance pair nu_+/- = D +/- sqrt((gamma*B_axial)^2 + E^2)
// for a field along one NV axis. Always nu_plus >= nu_minus and
// nu_plus + nu_minus = 2D.
std::pair<double, double> transition_frequencies(const NvModel& model, double b_axial_mt);

// Resonance pair -> unsigned field projection. When half the splitting falls
// below E the projection is indistinguishable from zero at this strain, which
// is reported as a tagged zero instead of a silent failure.
struct ProjectionResult {
    double b_mt = 0.0;
    bool splitting_below_e = false;
};
ProjectionResult invert_projection(const NvModel& model, double nu_plus_mhz, double nu_minus_mhz);

// Oracle route: diagonalize the 3x3 S=1 Hamiltonian
//   H/h = D Sz^2 + E (Sx^2 - Sy^2) + gamma (Bx Sx + By Sy + Bz Sz)
// with the field given in the NV frame, and return the two transition
// frequencies from the ms=0-like level, ascending. For purely axial fields this
// reduces to transition_frequencies exactly.
std::pair<double, double> exact_eigenfrequencies(const NvModel& model,
                                                 const Eigen::Vector3d& b_nv_frame_mt);

// Rigid +/-A hyperfine triplet around a line center.
std::array<double, 3> hyperfine_triplet(double nu_center_mhz, const NvModel& model);

}  // namespace nvmag
