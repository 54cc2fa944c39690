#include "nvmag/vector_field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace nvmag {

double ReconstructionResult::b_norm_sigma_mt() const {
    const Eigen::Vector3d v = b.vec();
    const double norm = v.norm();
    if (norm == 0.0) return std::sqrt(covariance.diagonal().maxCoeff());
    const Eigen::Vector3d u = v / norm;
    const double var = u.dot(covariance * u);
    return var > 0.0 ? std::sqrt(var) : 0.0;
}

ProjectionSet project_field(const NvModel& model, const FieldVector& b) {
    ProjectionSet out;
    for (int i = 0; i < 4; ++i) {
        out.b_proj_mt[i] = std::abs(model.axes[i].dot(b.vec()));
        out.sigma_mt[i] = 0.0;
    }
    return out;
}

ReconstructionResult reconstruct_field(const NvModel& model, const ProjectionSet& proj) {
    std::vector<int> active;
    for (int i = 0; i < 4; ++i) {
        if (!std::isfinite(proj.b_proj_mt[i])) continue;
        if (proj.b_proj_mt[i] < 0.0)
            throw std::invalid_argument("reconstruct_field: projections must be >= 0");
        active.push_back(i);
    }
    if (active.size() < 3)
        throw DegenerateGeometryError("reconstruct_field: need at least 3 finite projections");

    bool all_weighted = true;
    std::array<double, 4> weight{};
    for (int i : active) {
        const double s = proj.sigma_mt[i];
        weight[i] = s > 0.0 ? 1.0 / (s * s) : 1.0;
        if (!(s > 0.0)) all_weighted = false;
    }

    Eigen::Matrix3d normal = Eigen::Matrix3d::Zero();
    for (int i : active) normal += weight[i] * model.axes[i] * model.axes[i].transpose();
    const Eigen::FullPivLU<Eigen::Matrix3d> lu(normal);
    if (!lu.isInvertible())
        throw DegenerateGeometryError("reconstruct_field: fewer than 3 independent weighted axes");
    const Eigen::Matrix3d normal_inv = lu.inverse();

    struct Candidate {
        std::array<int, 4> signs;
        Eigen::Vector3d b;
        double residual;
    };
    std::vector<Candidate> candidates;

    // 8 sign patterns with the first active sign pinned to +1 (global sign is
    // handled by canonicalization afterwards).
    for (int mask = 0; mask < 8; ++mask) {
        std::array<int, 4> signs{1, 1, 1, 1};
        for (std::size_t k = 1; k < active.size(); ++k)
            signs[active[k]] = (mask >> (k - 1)) & 1 ? -1 : 1;

        Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
        for (int i : active) rhs += weight[i] * signs[i] * proj.b_proj_mt[i] * model.axes[i];
        const Eigen::Vector3d b = normal_inv * rhs;

        double misfit_sq = 0.0;
        for (int i : active) {
            const double d = signs[i] * proj.b_proj_mt[i] - model.axes[i].dot(b);
            misfit_sq += d * d;
        }
        candidates.push_back({signs, b, std::sqrt(misfit_sq / active.size())});
    }

    const double best =
        std::min_element(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
            return a.residual < b.residual;
        })->residual;

    std::vector<Candidate> tied;
    for (auto& c : candidates)
        if (c.residual - best <= 1e-12) tied.push_back(c);

    // Canonicalize each tied candidate, then let the lexicographically
    // smallest sign vector (+1 before -1) win deterministically.
    auto canonicalize = [](Candidate& c) {
        for (int j = 0; j < 3; ++j) {
            if (std::abs(c.b(j)) > 1e-15) {
                if (c.b(j) < 0.0) {
                    c.b = -c.b;
                    for (int& s : c.signs) s = -s;
                }
                break;
            }
        }
    };
    for (auto& c : tied) canonicalize(c);
    // +1 sorts before -1.
    std::sort(tied.begin(), tied.end(), [](const Candidate& a, const Candidate& b) {
        for (int i = 0; i < 4; ++i) {
            if (a.signs[i] != b.signs[i]) return a.signs[i] > b.signs[i];
        }
        return false;
    });
    // With fewer than 4 active axes the unused mask bits duplicate patterns.
    tied.erase(std::unique(tied.begin(), tied.end(),
                           [](const Candidate& a, const Candidate& b) { return a.signs == b.signs; }),
               tied.end());

    ReconstructionResult result;
    result.b = FieldVector::from_vec(tied.front().b);
    result.signs = tied.front().signs;
    result.residual_mt = tied.front().residual;
    if (tied.size() > 1) {
        std::ostringstream note;
        note << tied.size() << " sign patterns tie at residual " << best
             << " mT; lexicographically smallest sign vector selected";
        result.ambiguity_note = note.str();
        for (const auto& c : tied) result.tied_patterns.push_back(c.signs);
    }
    if (all_weighted) result.covariance = normal_inv;
    return result;
}

ProjectionSet projections_from_odmr(const NvModel& model, const PeakSet& peaks,
                                    double pairing_floor_mhz) {
    const std::size_t n = peaks.size();
    if (n == 0 || n % 2 != 0 || n > 8)
        throw std::invalid_argument("projections_from_odmr: need 2k centers with k <= 4");

    double max_sigma = 0.0;
    for (const auto& p : peaks) max_sigma = std::max(max_sigma, p.center_sigma_mhz);
    const double tolerance = 4.0 * std::max(max_sigma, pairing_floor_mhz);

    // Greedy matching: repeatedly take the remaining pair with the smallest
    // asymmetry about D.
    struct PairCandidate {
        double asymmetry;
        std::size_t i, j;
    };
    std::vector<PairCandidate> pool;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            pool.push_back({std::abs(peaks[i].center_mhz + peaks[j].center_mhz - 2.0 * model.d_mhz),
                            i, j});
    std::sort(pool.begin(), pool.end(),
              [](const PairCandidate& a, const PairCandidate& b) { return a.asymmetry < b.asymmetry; });

    std::vector<bool> used(n, false);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    double worst_asymmetry = 0.0;
    for (const auto& cand : pool) {
        if (used[cand.i] || used[cand.j]) continue;
        used[cand.i] = used[cand.j] = true;
        pairs.push_back({cand.i, cand.j});
        worst_asymmetry = std::max(worst_asymmetry, cand.asymmetry);
    }

    if (worst_asymmetry >= tolerance) {
        std::ostringstream msg;
        msg << "projections_from_odmr: pairing failed (tolerance " << tolerance << " MHz); pairs:";
        for (const auto& [i, j] : pairs)
            msg << " (" << peaks[i].center_mhz << ", " << peaks[j].center_mhz << " -> "
                << std::abs(peaks[i].center_mhz + peaks[j].center_mhz - 2.0 * model.d_mhz)
                << " MHz)";
        throw PairingFailedError(msg.str());
    }

    struct Projection {
        double b, sigma;
    };
    std::vector<Projection> projections;
    for (const auto& [i, j] : pairs) {
        const double nu_lo = std::min(peaks[i].center_mhz, peaks[j].center_mhz);
        const double nu_hi = std::max(peaks[i].center_mhz, peaks[j].center_mhz);
        const auto inverted = invert_projection(model, nu_hi, nu_lo);
        const double sigma_split = 0.5 * std::hypot(peaks[i].center_sigma_mhz,
                                                    peaks[j].center_sigma_mhz);
        double sigma_b;
        if (inverted.splitting_below_e || inverted.b_mt == 0.0) {
            sigma_b = sigma_split / model.gamma_mhz_per_mt;
        } else {
            // b = sqrt(s^2 - E^2)/gamma  =>  db/ds = s / (gamma^2 * b)
            const double s = 0.5 * (nu_hi - nu_lo);
            const double db_ds = s / (model.gamma_mhz_per_mt * model.gamma_mhz_per_mt *
                                      inverted.b_mt);
            sigma_b = db_ds * sigma_split;
        }
        projections.push_back({inverted.b_mt, sigma_b});
    }
    std::sort(projections.begin(), projections.end(),
              [](const Projection& a, const Projection& b) { return a.b > b.b; });

    ProjectionSet out;
    out.b_proj_mt.fill(std::numeric_limits<double>::quiet_NaN());
    out.sigma_mt.fill(std::numeric_limits<double>::quiet_NaN());
    for (std::size_t k = 0; k < projections.size(); ++k) {
        out.b_proj_mt[k] = projections[k].b;
        out.sigma_mt[k] = projections[k].sigma;
    }
    return out;
}

}  // namespace nvmag
