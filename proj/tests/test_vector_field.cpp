#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "nvmag/spectra.hpp"
#include "nvmag/vector_field.hpp"

using namespace nvmag;

namespace {

std::array<double, 4> sorted_desc(std::array<double, 4> v) {
    std::sort(v.begin(), v.end(), std::greater<double>());
    return v;
}

}  // namespace

TEST_CASE("project_field: <100> field projects equally on all four axes") {
    const NvModel model;
    const double b0 = 3.0;
    const auto proj = project_field(model, {0.0, 0.0, b0});
    for (int i = 0; i < 4; ++i)
        CHECK(proj.b_proj_mt[i] == doctest::Approx(b0 / std::sqrt(3.0)).epsilon(1e-14));
    CHECK(proj.resolved_count() == 4);
}

TEST_CASE("project_field: field along axis 1 gives b0 and three b0/3") {
    const NvModel model;
    const double b0 = 2.0;
    const auto proj = project_field(model, FieldVector::from_vec(b0 * model.axes[0]));
    CHECK(proj.b_proj_mt[0] == doctest::Approx(b0).epsilon(1e-14));
    for (int i = 1; i < 4; ++i)
        CHECK(proj.b_proj_mt[i] == doctest::Approx(b0 / 3.0).epsilon(1e-13));
}

TEST_CASE("project_field: zero field projects to zeros") {
    const NvModel model;
    const auto proj = project_field(model, {0.0, 0.0, 0.0});
    for (int i = 0; i < 4; ++i) CHECK(proj.b_proj_mt[i] == 0.0);
}

TEST_CASE("reconstruct_field: exact round-trip of a generic field") {
    const NvModel model;
    const FieldVector b{1.7, -0.9, 2.3};
    const auto result = reconstruct_field(model, project_field(model, b));
    // canonical representative is +/-b with first nonzero component positive
    const Eigen::Vector3d expected = b.vec().x() > 0 ? b.vec() : Eigen::Vector3d(-b.vec());
    CHECK((result.b.vec() - expected).norm() < 1e-12);
    CHECK(result.residual_mt < 1e-12);
    CHECK(result.ambiguity_note.empty());
}

TEST_CASE("reconstruct_field: all-equal projections tie three ways at <100>") {
    const NvModel model;
    const double b0 = 3.0;
    const auto result = reconstruct_field(model, project_field(model, {0.0, 0.0, b0}));
    CHECK(result.b.norm() == doctest::Approx(b0).epsilon(1e-12));
    CHECK_FALSE(result.ambiguity_note.empty());
    CHECK(result.tied_patterns.size() == 3);
}

TEST_CASE("reconstruct_field: zero projections give zero field without ambiguity flagging a direction") {
    const NvModel model;
    ProjectionSet proj;  // all zeros
    const auto result = reconstruct_field(model, proj);
    CHECK(result.b.norm() < 1e-14);
    CHECK(result.residual_mt < 1e-14);
}

TEST_CASE("reconstruct_field: fewer than three finite projections is degenerate") {
    const NvModel model;
    ProjectionSet proj;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    proj.b_proj_mt = {1.0, 1.0, nan, nan};
    CHECK_THROWS_AS(reconstruct_field(model, proj), DegenerateGeometryError);
}

TEST_CASE("reconstruct_field: three finite projections fit exactly but stay sign-ambiguous") {
    // Three independent axes make every sign pattern an exact 3x3 solution, so
    // the magnitudes are reproduced while the direction ties four ways.
    const NvModel model;
    const FieldVector b{1.2, 0.4, -2.1};
    auto proj = project_field(model, b);
    proj.b_proj_mt[3] = std::numeric_limits<double>::quiet_NaN();
    const auto result = reconstruct_field(model, proj);
    CHECK(result.residual_mt < 1e-12);
    CHECK(result.tied_patterns.size() == 4);
    CHECK_FALSE(result.ambiguity_note.empty());
    for (int i = 0; i < 3; ++i)
        CHECK(std::abs(model.axes[i].dot(result.b.vec())) ==
              doctest::Approx(proj.b_proj_mt[i]).epsilon(1e-12));
}

TEST_CASE("reconstruct_field: covariance fills in when every sigma is positive") {
    const NvModel model;
    const FieldVector b{1.7, -0.9, 2.3};
    auto proj = project_field(model, b);
    proj.sigma_mt = {0.01, 0.01, 0.01, 0.01};
    const auto result = reconstruct_field(model, proj);
    CHECK(result.covariance.trace() > 0.0);
    CHECK(result.b_norm_sigma_mt() > 0.0);
    // isotropic sigma on a tetrahedral frame: per-component variance is
    // sigma^2 * 3/4 (N^T N = 4/3 I)
    for (int i = 0; i < 3; ++i)
        CHECK(result.covariance(i, i) == doctest::Approx(0.01 * 0.01 * 0.75).epsilon(1e-9));
}

TEST_CASE("property: reconstruction is invariant under the sign of the true field") {
    const NvModel model;
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> comp(-5.0, 5.0);
    for (int i = 0; i < 200; ++i) {
        const FieldVector b{comp(rng), comp(rng), comp(rng)};
        const FieldVector nb{-b.bx_mt, -b.by_mt, -b.bz_mt};
        const auto r1 = reconstruct_field(model, project_field(model, b));
        const auto r2 = reconstruct_field(model, project_field(model, nb));
        CHECK((r1.b.vec() - r2.b.vec()).norm() < 1e-10);
        CHECK(std::abs(r1.b.norm() - b.norm()) < 1e-10);
    }
}

TEST_CASE("property: projection magnitudes are invariant under diamond cube rotations") {
    // 90-degree rotation about z maps the <111> axis family onto itself, so
    // the multiset of projections must be preserved.
    const NvModel model;
    std::mt19937_64 rng(32);
    std::uniform_real_distribution<double> comp(-5.0, 5.0);
    for (int i = 0; i < 100; ++i) {
        const Eigen::Vector3d b(comp(rng), comp(rng), comp(rng));
        const Eigen::Vector3d rb(-b.y(), b.x(), b.z());
        auto p1 = sorted_desc(project_field(model, FieldVector::from_vec(b)).b_proj_mt);
        auto p2 = sorted_desc(project_field(model, FieldVector::from_vec(rb)).b_proj_mt);
        for (int k = 0; k < 4; ++k) CHECK(p1[k] == doctest::Approx(p2[k]).epsilon(1e-12));
    }
}

TEST_CASE("projections_from_odmr: eight exact centers round-trip the projections") {
    const NvModel model;
    const FieldVector b{1.3, 2.9, -4.1};
    const auto centers = dip_centers_from_field(model, b);
    PeakSet peaks;
    for (double c : centers) peaks.push_back({c, 6.0, 0.03, 0.0, 0.0, 0.0});
    const auto proj = projections_from_odmr(model, peaks);
    const auto expected = sorted_desc(project_field(model, b).b_proj_mt);
    const auto got = proj.b_proj_mt;  // already sorted descending
    for (int i = 0; i < 4; ++i) CHECK(got[i] == doctest::Approx(expected[i]).epsilon(1e-10));
    CHECK(proj.resolved_count() == 4);

    const auto recon = reconstruct_field(model, proj);
    CHECK(recon.b.norm() == doctest::Approx(b.norm()).epsilon(1e-9));
}

TEST_CASE("projections_from_odmr: four centers resolve two projections, rest NaN") {
    const NvModel model;
    const auto [lo1, hi1] = transition_frequencies(model, 2.0);
    const auto [lo2, hi2] = transition_frequencies(model, 4.5);
    PeakSet peaks;
    for (double c : {lo1, hi1, lo2, hi2}) peaks.push_back({c, 6.0, 0.03, 0.0, 0.0, 0.0});
    const auto proj = projections_from_odmr(model, peaks);
    CHECK(proj.resolved_count() == 2);
    CHECK(proj.b_proj_mt[0] == doctest::Approx(4.5).epsilon(1e-10));
    CHECK(proj.b_proj_mt[1] == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(std::isnan(proj.b_proj_mt[2]));
    CHECK(std::isnan(proj.b_proj_mt[3]));
}

TEST_CASE("projections_from_odmr: grossly asymmetric pair fails with a diagnostic") {
    const NvModel model;
    // pair asymmetry of 10 MHz against a 0.5 MHz floor (threshold 2 MHz)
    PeakSet peaks{{2800.0, 6.0, 0.03, 0.0, 0.0, 0.0}, {2950.0, 6.0, 0.03, 0.0, 0.0, 0.0}};
    CHECK_THROWS_AS(projections_from_odmr(model, peaks), PairingFailedError);
    try {
        projections_from_odmr(model, peaks);
    } catch (const PairingFailedError& e) {
        CHECK(std::string(e.what()).find("pairing failed") != std::string::npos);
    }
}

TEST_CASE("projections_from_odmr: center sigmas propagate to projection sigmas") {
    const NvModel model;
    const double b_true = 3.0;
    const auto [lo, hi] = transition_frequencies(model, b_true);
    const double sc = 0.05;  // MHz on each center
    PeakSet peaks{{lo, 6.0, 0.03, sc, 0.0, 0.0}, {hi, 6.0, 0.03, sc, 0.0, 0.0}};
    const auto proj = projections_from_odmr(model, peaks);
    const double s = (hi - lo) / 2.0;
    const double sigma_s = std::sqrt(2.0) * sc / 2.0;
    const double expected =
        s / (model.gamma_mhz_per_mt * model.gamma_mhz_per_mt * b_true) * sigma_s;
    CHECK(proj.b_proj_mt[0] == doctest::Approx(b_true).epsilon(1e-10));
    CHECK(proj.sigma_mt[0] == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("projections_from_odmr rejects an odd number of centers") {
    const NvModel model;
    PeakSet peaks{{2867.0, 6.0, 0.03, 0.0, 0.0, 0.0},
                  {2870.0, 6.0, 0.03, 0.0, 0.0, 0.0},
                  {2873.0, 6.0, 0.03, 0.0, 0.0, 0.0}};
    CHECK_THROWS_AS(projections_from_odmr(model, peaks), std::invalid_argument);
}
