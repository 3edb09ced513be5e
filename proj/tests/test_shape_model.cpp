#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <myoshape/geometry.hpp>
#include <myoshape/shape_model.hpp>
#include <myoshape/synth.hpp>

using namespace myoshape;
using shape_model::augment;
using shape_model::build_model;
using shape_model::explained_variance;
using shape_model::project;
using shape_model::reconstruct;

namespace {

LandmarkSet make_shape(std::initializer_list<Point> pts) {
    LandmarkSet p;
    p.pts = pts;
    p.n_endo = static_cast<int>(p.pts.size()) / 2;
    return p;
}

std::vector<LandmarkSet> normalized_population(std::uint64_t seed, int n) {
    synth::SynthConfig cfg;
    cfg.n_cases = n;
    cfg.seed = seed;
    std::vector<LandmarkSet> shapes;
    for (const auto& c : synth::generate_population(cfg))
        shapes.push_back(geometry::pose_normalize(c.landmarks, c.pose));
    return shapes;
}

}  // namespace

TEST_CASE("two-shape PCA has the closed-form eigenpair") {
    const LandmarkSet s1 = make_shape({{0, 0}, {2, 0}, {0, 2}, {2, 2}});
    const LandmarkSet s2 = make_shape({{1, 0}, {3, 0}, {1, 2}, {3, 2}});
    const ShapeModel m = build_model({s1, s2}, 1.0);

    const Eigen::VectorXd v1 = landmarks_to_vector(s1);
    const Eigen::VectorXd v2 = landmarks_to_vector(s2);
    CHECK((m.mean - 0.5 * (v1 + v2)).norm() < 1e-12);

    // Exactly one nonzero eigenvalue = |s1-s2|^2 / 2, eigenvector along the
    // difference.
    const Eigen::VectorXd d = v1 - v2;
    CHECK(m.eigenvalues[0] == doctest::Approx(d.squaredNorm() / 2).epsilon(1e-12));
    for (int j = 1; j < m.n_modes(); ++j)
        CHECK(std::abs(m.eigenvalues[j]) < 1e-12);
    const double align = std::abs(m.eigenvectors.col(0).dot(d.normalized()));
    CHECK(align == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("identical shapes give zero variance and the shape as mean") {
    const LandmarkSet s = make_shape({{1, 1}, {4, 1}, {1, 5}, {4, 5}});
    std::vector<LandmarkSet> shapes(10, s);
    const ShapeModel m = build_model(shapes, 1.0);
    CHECK((m.mean - landmarks_to_vector(s)).norm() < 1e-12);
    for (int j = 0; j < m.n_modes(); ++j)
        CHECK(std::abs(m.eigenvalues[j]) < 1e-12);
    CHECK_THROWS_AS(explained_variance(m, m.n_modes()), UndefinedVarianceError);
}

TEST_CASE("build_model input validation") {
    const LandmarkSet s = make_shape({{0, 0}, {1, 0}, {0, 1}, {1, 1}});
    CHECK_THROWS_AS(build_model({s}, 1.0), InvalidInputError);
    const LandmarkSet t =
        make_shape({{0, 0}, {1, 0}, {0, 1}, {1, 1}, {2, 2}, {3, 3}});
    CHECK_THROWS_AS(build_model({s, t}, 1.0), InvalidInputError);
}

TEST_CASE("training coefficients have unit variance and reconstruct exactly") {
    const auto shapes = normalized_population(99, 200);
    const ShapeModel m = build_model(shapes, 2.0);

    const Eigen::MatrixXd gram = m.eigenvectors.transpose() * m.eigenvectors;
    CHECK((gram - Eigen::MatrixXd::Identity(m.n_modes(), m.n_modes()))
              .cwiseAbs()
              .maxCoeff() < 1e-9);
    for (int j = 1; j < m.n_modes(); ++j)
        CHECK(m.eigenvalues[j] <= m.eigenvalues[j - 1] + 1e-15);

    int rank = 0;
    while (rank < m.n_modes() && m.eigenvalues[rank] > 1e-10 * m.eigenvalues[0])
        ++rank;

    // Per-mode sample variance of the training coefficients is 1 under the
    // sqrt(lambda) standardization; oracle is the direct variance formula.
    const int n = static_cast<int>(shapes.size());
    for (int mode = 0; mode < rank; ++mode) {
        double sum = 0.0, sum2 = 0.0;
        for (const auto& s : shapes) {
            const double c = project(m, s, mode + 1)[mode];
            sum += c;
            sum2 += c * c;
        }
        const double var = (sum2 - sum * sum / n) / (n - 1);
        CHECK(std::abs(var - 1.0) < 1e-6);
    }

    for (int i = 0; i < n; i += 17) {
        const ShapeCoeffs b = project(m, shapes[i], rank);
        const LandmarkSet rec = reconstruct(m, b);
        const Eigen::VectorXd diff =
            landmarks_to_vector(rec) - landmarks_to_vector(shapes[i]);
        CHECK(diff.cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("reconstruct b=0 gives the mean and b=e1 the +1 SD shape") {
    const auto shapes = normalized_population(5, 60);
    const ShapeModel m = build_model(shapes, 2.0);

    const LandmarkSet mean_shape = reconstruct(m, ShapeCoeffs::Zero(0));
    CHECK((landmarks_to_vector(mean_shape) - m.mean).norm() < 1e-12);

    ShapeCoeffs e1 = ShapeCoeffs::Zero(3);
    e1[0] = 1.0;
    const LandmarkSet plus_sd = reconstruct(m, e1);
    const Eigen::VectorXd want =
        m.mean + std::sqrt(m.eigenvalues[0]) * m.eigenvectors.col(0);
    CHECK((landmarks_to_vector(plus_sd) - want).norm() < 1e-12);

    ShapeCoeffs too_many = ShapeCoeffs::Zero(m.n_modes() + 1);
    CHECK_THROWS_AS(reconstruct(m, too_many), InvalidInputError);
}

TEST_CASE("project is a left inverse and truncation residual decreases") {
    const auto shapes = normalized_population(31, 120);
    const ShapeModel m = build_model(shapes, 2.0);

    CHECK(project(m, reconstruct(m, ShapeCoeffs::Zero(4)), 4).norm() < 1e-12);

    ShapeCoeffs b0(5);
    b0 << 0.7, -1.1, 0.3, 1.9, -0.2;
    const ShapeCoeffs back = project(m, reconstruct(m, b0), 5);
    CHECK((back - b0).cwiseAbs().maxCoeff() < 1e-9);

    // Monotone residual in M (PCA optimality).
    const LandmarkSet& s = shapes[7];
    double prev = std::numeric_limits<double>::infinity();
    for (int mm = 1; mm <= 16; ++mm) {
        const LandmarkSet rec = reconstruct(m, project(m, s, mm));
        const double resid =
            (landmarks_to_vector(rec) - landmarks_to_vector(s)).norm();
        CHECK(resid <= prev + 1e-12);
        prev = resid;
    }

    const LandmarkSet s1 = make_shape({{0, 0}, {2, 0}, {0, 2}, {2, 2}});
    const LandmarkSet s2 = make_shape({{1, 0}, {3, 0}, {1, 2}, {3, 2}});
    const ShapeModel tiny = build_model({s1, s2}, 1.0);
    CHECK_THROWS_AS(project(tiny, s1, 2), RankError);
}

TEST_CASE("explained variance endpoints and monotonicity") {
    const auto shapes = normalized_population(13, 150);
    const ShapeModel m = build_model(shapes, 2.0);
    CHECK(explained_variance(m, 0) == doctest::Approx(0.0));
    CHECK(explained_variance(m, m.n_modes()) == doctest::Approx(1.0));
    double prev = 0.0;
    for (int mm = 0; mm <= m.n_modes(); mm += 6) {
        const double v = explained_variance(m, mm);
        CHECK(v >= prev - 1e-15);
        prev = v;
    }
    // The generator uses 12 harmonic degrees of freedom plus small jitter.
    CHECK(explained_variance(m, 12) >= 0.99);
}

TEST_CASE("augment determinism, bounds and zero ranges") {
    const auto shapes = normalized_population(3, 40);
    const ShapeModel m = build_model(shapes, 2.0);
    ShapeCoeffs b = ShapeCoeffs::Zero(12);
    const Pose pose{0.3, {64, 64}};

    shape_model::AugmentRanges zero{0.0, 0.0, 0.0};
    Rng r0(5);
    const auto [b_same, pose_same] = augment(m, b, pose, r0, zero);
    CHECK((b_same - b).norm() == 0.0);
    CHECK(pose_same.theta == pose.theta);
    CHECK(pose_same.center.x == pose.center.x);

    shape_model::AugmentRanges def{};
    Rng r1(17), r2(17);
    const auto [b1, p1] = augment(m, b, pose, r1, def);
    const auto [b2, p2] = augment(m, b, pose, r2, def);
    CHECK((b1 - b2).norm() == 0.0);
    CHECK(p1.theta == p2.theta);
    CHECK(p1.center.x == p2.center.x);
    CHECK(p1.center.y == p2.center.y);

    // Statistical check on the coefficient offsets.
    Rng r3(23);
    double acc = 0.0;
    double max_abs = 0.0;
    const int draws = 100000;
    for (int k = 0; k < draws; ++k) {
        const auto [bk, pk] = augment(m, b, pose, r3, def);
        acc += bk[0];
        max_abs = std::max(max_abs, bk.cwiseAbs().maxCoeff());
        CHECK(std::abs(pk.center.x - pose.center.x) <= 40.0 / m.pixel_size_mm);
    }
    CHECK(std::abs(acc / draws) < 0.01);
    CHECK(max_abs <= 1.0);
}
