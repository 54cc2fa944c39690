#include "nvmag/spin_model.hpp"

#include <cmath>
#include <complex>

namespace nvmag {

std::array<Eigen::Vector3d, 4> NvModel::default_axes() {
    const double s = 1.0 / std::sqrt(3.0);
    return {Eigen::Vector3d(s, s, s), Eigen::Vector3d(s, -s, -s),
            Eigen::Vector3d(-s, s, -s), Eigen::Vector3d(-s, -s, s)};
}

void NvModel::validate() const {
    if (!(d_mhz > 0.0)) throw std::invalid_argument("NvModel: d_mhz must be > 0");
    if (!(e_mhz >= 0.0)) throw std::invalid_argument("NvModel: e_mhz must be >= 0");
    if (!(e_mhz < d_mhz)) throw std::invalid_argument("NvModel: e_mhz must be < d_mhz");
    if (!(gamma_mhz_per_mt > 0.0))
        throw std::invalid_argument("NvModel: gamma_mhz_per_mt must be > 0");
    if (!(a_hf_mhz >= 0.0)) throw std::invalid_argument("NvModel: a_hf_mhz must be >= 0");

    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    for (const auto& n : axes) {
        if (std::abs(n.norm() - 1.0) > 1e-12)
            throw std::invalid_argument("NvModel: axis is not unit length");
        sum += n;
    }
    if (sum.norm() > 1e-12)
        throw std::invalid_argument("NvModel: axes do not sum to zero");
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            if (std::abs(axes[i].dot(axes[j]) + 1.0 / 3.0) > 1e-12)
                throw std::invalid_argument("NvModel: axis pair dot product is not -1/3");
}

int ProjectionSet::resolved_count() const {
    int n = 0;
    for (double b : b_proj_mt)
        if (std::isfinite(b)) ++n;
    return n;
}

std::pair<double, double> transition_frequencies(const NvModel& model, double b_axial_mt) {
    if (!(b_axial_mt >= 0.0))
        throw std::invalid_argument("transition_frequencies: b_axial_mt must be >= 0");
    const double zeeman = model.gamma_mhz_per_mt * b_axial_mt;
    const double half_split = std::sqrt(zeeman * zeeman + model.e_mhz * model.e_mhz);
    return {model.d_mhz - half_split, model.d_mhz + half_split};
}

ProjectionResult invert_projection(const NvModel& model, double nu_plus_mhz,
                                   double nu_minus_mhz) {
    if (nu_plus_mhz < nu_minus_mhz)
        throw std::invalid_argument("invert_projection: nu_plus < nu_minus");
    const double half_split = 0.5 * (nu_plus_mhz - nu_minus_mhz);
    if (half_split < model.e_mhz) return {0.0, true};
    const double zeeman_sq = half_split * half_split - model.e_mhz * model.e_mhz;
    return {std::sqrt(zeeman_sq) / model.gamma_mhz_per_mt, false};
}

std::pair<double, double> exact_eigenfrequencies(const NvModel& model,
                                                 const Eigen::Vector3d& b_nv_frame_mt) {
    if (!b_nv_frame_mt.allFinite())
        throw std::invalid_argument("exact_eigenfrequencies: field must be finite");

    using cd = std::complex<double>;
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    // S=1 operators in the |+1>, |0>, |-1> basis.
    Eigen::Matrix3cd sx, sy, sz;
    sx << 0, inv_sqrt2, 0, inv_sqrt2, 0, inv_sqrt2, 0, inv_sqrt2, 0;
    sy << 0, cd(0, -inv_sqrt2), 0, cd(0, inv_sqrt2), 0, cd(0, -inv_sqrt2), 0,
        cd(0, inv_sqrt2), 0;
    sz << 1, 0, 0, 0, 0, 0, 0, 0, -1;

    const double gx = model.gamma_mhz_per_mt * b_nv_frame_mt.x();
    const double gy = model.gamma_mhz_per_mt * b_nv_frame_mt.y();
    const double gz = model.gamma_mhz_per_mt * b_nv_frame_mt.z();

    const Eigen::Matrix3cd h = model.d_mhz * (sz * sz) +
                               model.e_mhz * (sx * sx - sy * sy) +
                               gx * sx + gy * sy + gz * sz;

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3cd> solver(h);
    const Eigen::Vector3d evals = solver.eigenvalues();  // ascending

    // The ms=0-like level is the one with the largest |<0|psi>| overlap.
    int zero_like = 0;
    double best_overlap = -1.0;
    for (int i = 0; i < 3; ++i) {
        const double overlap = std::abs(solver.eigenvectors()(1, i));
        if (overlap > best_overlap) {
            best_overlap = overlap;
            zero_like = i;
        }
    }
    std::array<double, 2> nu{};
    int k = 0;
    for (int i = 0; i < 3; ++i)
        if (i != zero_like) nu[k++] = evals(i) - evals(zero_like);
    if (nu[0] > nu[1]) std::swap(nu[0], nu[1]);
    return {nu[0], nu[1]};
}

std::array<double, 3> hyperfine_triplet(double nu_center_mhz, const NvModel& model) {
    return {nu_center_mhz - model.a_hf_mhz, nu_center_mhz, nu_center_mhz + model.a_hf_mhz};
}

}  // namespace nvmag
