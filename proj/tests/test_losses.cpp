#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <myoshape/geometry.hpp>
#include <myoshape/gradcheck.hpp>
#include <myoshape/losses.hpp>
#include <myoshape/raster.hpp>
#include <myoshape/rng.hpp>
#include <myoshape/synth.hpp>

using namespace myoshape;
using namespace myoshape::losses;

namespace {

ShapeModel test_model(std::uint64_t seed = 12, int n = 100) {
    synth::SynthConfig cfg;
    cfg.n_cases = n;
    cfg.seed = seed;
    std::vector<LandmarkSet> shapes;
    for (const auto& c : synth::generate_population(cfg))
        shapes.push_back(geometry::pose_normalize(c.landmarks, c.pose));
    return shape_model::build_model(shapes, cfg.grid.pixel_size_mm);
}

ScalarGrid raster_of(const LandmarkSet& p, const GridSpec& spec) {
    return raster::distance_map(geometry::spline_contour(p.endo_ring()),
                                geometry::spline_contour(p.epi_ring()), spec);
}

}  // namespace

TEST_CASE("loss_b values and mismatch error") {
    Eigen::VectorXd a(2), b(2);
    a << 1, 0;
    b << 0, 0;
    CHECK(loss_b(a, a) == doctest::Approx(0.0));
    CHECK(loss_b(a, b) == doctest::Approx(0.5));
    Eigen::VectorXd c(3);
    CHECK_THROWS_AS(loss_b(a, c), InvalidInputError);
}

TEST_CASE("loss_pose values") {
    const Pose p{0.4, {10, 20}};
    CHECK(loss_pose(p, p, 1.0) == doctest::Approx(-1.0));
    const Pose q{0.4 + M_PI, {10, 20}};
    CHECK(loss_pose(p, q, 1.0) == doctest::Approx(1.0));
    const Pose r{0.4, {13, 24}};
    CHECK(loss_pose(p, r, 2.0) == doctest::Approx(-1.0 + 2.0 * 0.5 * 25.0));
}

TEST_CASE("loss_landmarks squared-norm convention") {
    LandmarkSet p;
    p.n_endo = 18;
    p.pts.assign(36, Point{5, 5});
    LandmarkSet q = p;
    CHECK(loss_landmarks(p, q) == doctest::Approx(0.0));
    q.pts[7] = {5 + 3, 5 + 4};
    CHECK(loss_landmarks(p, q) == doctest::Approx(25.0 / 36.0));
    LandmarkSet shorter;
    shorter.n_endo = 1;
    shorter.pts = {{0, 0}, {1, 1}};
    CHECK_THROWS_AS(loss_landmarks(p, shorter), InvalidInputError);
}

TEST_CASE("soft dice endpoints and empty convention") {
    GridSpec spec{4, 4, 2.0};
    ScalarGrid a(spec, GridRole::SoftMask);
    a.at(1, 1) = a.at(2, 1) = 0.8;
    // identical masks: loss = 1 - sum(S^2)/sum(S); uniform 0.8 support.
    CHECK(soft_dice(a, a) == doctest::Approx(1.0 - 0.8));

    ScalarGrid binary = a;
    binary.at(1, 1) = binary.at(2, 1) = 1.0;
    CHECK(soft_dice(binary, binary) == doctest::Approx(0.0));

    ScalarGrid disjoint(spec, GridRole::SoftMask);
    disjoint.at(3, 3) = 1.0;
    ScalarGrid other(spec, GridRole::SoftMask);
    other.at(0, 0) = 1.0;
    CHECK(soft_dice(disjoint, other) == doctest::Approx(1.0));

    ScalarGrid zero(spec, GridRole::SoftMask);
    std::vector<double> ga, gb;
    CHECK(soft_dice(zero, zero, &ga, &gb) == doctest::Approx(1.0));
    for (double g : ga) CHECK(g == 0.0);

    ScalarGrid bad(spec, GridRole::SoftMask);
    bad.at(0, 0) = 1.5;
    CHECK_THROWS_AS(soft_dice(bad, zero), InvalidInputError);
}

TEST_CASE("loss_D value decomposition") {
    GridSpec spec{8, 8, 2.0};
    ScalarGrid dt(spec, GridRole::DistanceMap);
    Rng rng(2);
    for (auto& v : dt.values) v = rng.uniform(-3, 3);
    // Identical maps: the MSE term vanishes and only the sigmoid
    // self-overlap of the soft masks remains.
    const double self_dice =
        soft_dice(raster::soft_mask(dt, 5.0), raster::soft_mask(dt, 5.0));
    CHECK(loss_d(dt, dt, 0.1, 5.0) == doctest::Approx(self_dice).epsilon(1e-12));
    // With sharp binarization the self-overlap is negligible.
    CHECK(loss_d(dt, dt, 0.1, 200.0) < 0.01);

    ScalarGrid dp = dt;
    for (auto& v : dp.values) v += 10.0;
    // MSE term alone contributes mu_D * 100 = 10; the dice part is in [0,1].
    const double v = loss_d(dt, dp, 0.1, 5.0);
    CHECK(v >= 10.0);
    CHECK(v - 10.0 <= 1.0);

    ScalarGrid small(GridSpec{4, 4, 2.0}, GridRole::DistanceMap);
    CHECK_THROWS_AS(loss_d(dt, small, 0.1, 5.0), InvalidInputError);
}

TEST_CASE("loss_cc constant-map value and zero-level landmarks") {
    GridSpec spec{32, 32, 2.0};
    ScalarGrid flat(spec, GridRole::DistanceMap, 3.0);
    LandmarkSet p;
    p.n_endo = 18;
    for (int i = 0; i < 36; ++i)
        p.pts.push_back({15.5 + 5 * std::cos(i / 36.0 * 2 * M_PI),
                         15.5 + 5 * std::sin(i / 36.0 * 2 * M_PI)});
    CHECK(loss_cc(flat, p) == doctest::Approx(9.0));

    // Landmarks sit on the zero level set of their own rasterized map.
    synth::SynthConfig cfg;
    cfg.n_cases = 5;
    cfg.seed = 77;
    for (const auto& c : synth::generate_population(cfg)) {
        const ScalarGrid d = raster_of(c.landmarks, cfg.grid);
        CHECK(loss_cc(d, c.landmarks) <= 0.05);
    }
}

TEST_CASE("loss_co self-consistency, inverted map, sigmoid floor") {
    const ShapeModel model = test_model(21, 120);
    const GridSpec spec{128, 128, 2.0};
    const LandmarkSet mean = vector_to_landmarks(model.mean, model.n_endo);

    const Pose pose{0.5, {60, 70}};
    const LandmarkSet p_p = geometry::pose_denormalize(mean, pose);
    const ScalarGrid d_p = raster_of(p_p, spec);

    // Identity-geometry case: at sharp binarization only warp/raster error
    // remains; at alpha = 5 the sigmoid transition band alone contributes
    // about perimeter/(alpha * area) ~ 0.08, a floor independent of warp
    // quality.
    CHECK(loss_co(d_p, p_p, model, pose.center, 40.0) <= 0.02);
    const double at5 = loss_co(d_p, p_p, model, pose.center, 5.0);
    CHECK(at5 >= 0.05);
    CHECK(at5 <= 0.12);

    ScalarGrid inverted = d_p;
    for (auto& v : inverted.values) v = -v;
    CHECK(loss_co(inverted, p_p, model, pose.center, 5.0) >= 0.9);
}

TEST_CASE("consistency losses are invariant under ring relabeling") {
    const ShapeModel model = test_model(31, 80);
    const GridSpec spec{128, 128, 2.0};
    const Pose pose{0.3, {64, 64}};
    ShapeCoeffs b(8);
    b << 1.0, -0.5, 0.3, 0.9, -1.2, 0.1, 0.4, -0.3;
    const LandmarkSet p_p =
        geometry::pose_denormalize(shape_model::reconstruct(model, b), pose);
    const ScalarGrid d_p = raster_of(p_p, spec);

    // Cyclic shift within both rings plus the matching row permutation of
    // the model mean and eigenvectors.
    const int shift = 5;
    const int n = model.n_endo;
    std::vector<int> perm(2 * n);
    for (int i = 0; i < n; ++i) {
        perm[i] = (i + shift) % n;
        perm[n + i] = n + (i + shift) % n;
    }
    LandmarkSet p_shift;
    p_shift.n_endo = n;
    p_shift.pts.resize(2 * n);
    for (int i = 0; i < 2 * n; ++i) p_shift.pts[i] = p_p.pts[perm[i]];

    ShapeModel model_shift = model;
    for (int i = 0; i < 2 * n; ++i) {
        model_shift.mean[2 * i] = model.mean[2 * perm[i]];
        model_shift.mean[2 * i + 1] = model.mean[2 * perm[i] + 1];
        for (int m = 0; m < model.n_modes(); ++m) {
            model_shift.eigenvectors(2 * i, m) = model.eigenvectors(2 * perm[i], m);
            model_shift.eigenvectors(2 * i + 1, m) =
                model.eigenvectors(2 * perm[i] + 1, m);
        }
    }

    CHECK(loss_cc(d_p, p_shift) == doctest::Approx(loss_cc(d_p, p_p)).epsilon(1e-12));
    const double co_orig = loss_co(d_p, p_p, model, pose.center, 5.0);
    const double co_shift = loss_co(d_p, p_shift, model_shift, pose.center, 5.0);
    CHECK(co_shift == doctest::Approx(co_orig).epsilon(1e-9));
}

TEST_CASE("total_loss: default weights, weighted-sum identity, gating") {
    const ShapeModel model = test_model(41, 80);
    const GridSpec spec{64, 64, 2.0};

    LossWeights w;  // defaults
    CHECK(w.gamma_b == 1.0);
    CHECK(w.gamma_phi == 1.0);
    CHECK(w.gamma_p == 1.0);
    CHECK(w.gamma_D == 100.0);
    CHECK(w.gamma_cc == 1.0);
    CHECK(w.gamma_co == 10.0);
    CHECK(w.mu_phi == 1.0);
    CHECK(w.mu_D == 0.1);
    CHECK(w.alpha == 5.0);

    LossWeights zero;
    zero.gamma_b = zero.gamma_phi = zero.gamma_p = 0.0;
    zero.gamma_D = zero.gamma_cc = zero.gamma_co = 0.0;
    const LossReport empty = total_loss({}, zero);
    CHECK(empty.total == 0.0);
    CHECK(empty.terms.empty());
    CHECK(empty.grads.b.size() == 0);
    CHECK(empty.grads.d.empty());

    // A consistent full evaluation; shrink the model into the small grid.
    ShapeModel small = model;
    small.mean *= 0.45;
    ShapeCoeffs b_t(6), b_p(6);
    b_t << 0.5, -0.5, 0.2, 0.0, 0.4, -0.1;
    b_p << 0.1, 0.3, -0.2, 0.2, 0.0, 0.3;
    const Pose pose_t{0.2, {31.5, 31.5}};
    const Pose pose_p{0.35, {33.0, 30.0}};
    const LandmarkSet p_t =
        geometry::pose_denormalize(shape_model::reconstruct(small, b_t), pose_t);
    const LandmarkSet p_p =
        geometry::pose_denormalize(shape_model::reconstruct(small, b_p), pose_p);
    const ScalarGrid d_t = raster_of(p_t, spec);
    const ScalarGrid d_p = raster_of(p_p, spec);

    TotalLossInputs in;
    in.model = &small;
    in.b_t = &b_t;
    in.b_p = &b_p;
    in.pose_t = &pose_t;
    in.pose_p = &pose_p;
    in.p_t = &p_t;
    in.d_t = &d_t;
    in.d_p = &d_p;
    in.want_gradients = false;
    const LossReport rep = total_loss(in, w);

    REQUIRE(rep.terms.size() == 6);
    const double recomputed = w.gamma_b * rep.terms.at("L_b") +
                              w.gamma_phi * rep.terms.at("L_phi") +
                              w.gamma_p * rep.terms.at("L_p") +
                              w.gamma_D * rep.terms.at("L_D") +
                              w.gamma_cc * rep.terms.at("L_Cc") +
                              w.gamma_co * rep.terms.at("L_Co");
    CHECK(std::abs(rep.total - recomputed) < 1e-10);

    LossWeights no_d = w;
    no_d.gamma_D = 0.0;
    const LossReport rep2 = total_loss(in, no_d);
    CHECK(rep2.terms.count("L_D") == 0);
    CHECK(std::abs(rep2.total - (rep.total - w.gamma_D * rep.terms.at("L_D"))) <
          1e-10);

    TotalLossInputs missing = in;
    missing.d_t = nullptr;
    CHECK_THROWS_AS(total_loss(missing, w), ConfigurationError);

    // Gradients flow to every block when all terms are enabled.
    TotalLossInputs graded = in;
    graded.want_gradients = true;
    const LossReport with_grads = total_loss(graded, w);
    CHECK(with_grads.grads.b.size() == 6);
    CHECK(with_grads.grads.d.size() == d_p.values.size());
    CHECK(with_grads.grads.has_pose);
}

TEST_CASE("loss value ranges on random configurations") {
    GridSpec spec{16, 16, 2.0};
    Rng rng(9);
    for (int k = 0; k < 10; ++k) {
        Eigen::VectorXd a(5), b(5);
        for (int i = 0; i < 5; ++i) {
            a[i] = rng.uniform(-3, 3);
            b[i] = rng.uniform(-3, 3);
        }
        CHECK(loss_b(a, b) >= 0.0);
        const Pose pt{rng.uniform(-3, 3), {rng.uniform(0, 15), rng.uniform(0, 15)}};
        const Pose pp{rng.uniform(-3, 3), {rng.uniform(0, 15), rng.uniform(0, 15)}};
        CHECK(loss_pose(pt, pp, 1.0) >= -1.0);
        ScalarGrid sa(spec, GridRole::SoftMask);
        ScalarGrid sb(spec, GridRole::SoftMask);
        for (auto& v : sa.values) v = rng.uniform(0, 1);
        for (auto& v : sb.values) v = rng.uniform(0, 1);
        const double sd = soft_dice(sa, sb);
        CHECK(sd >= 0.0);
        CHECK(sd <= 1.0);
    }
}

TEST_CASE("gradient suite: analytic vs central finite differences") {
    const auto rows = gradcheck::run(7, 4);
    for (const auto& r : rows) {
        INFO(r.term << "/" << r.param_block << " rel err " << r.max_rel_err);
        CHECK(r.max_rel_err <= 1e-4);
    }
    CHECK(gradcheck::all_pass(rows));
    const auto has = [&](const char* t, const char* blk) {
        for (const auto& r : rows)
            if (r.term == t && r.param_block == blk) return true;
        return false;
    };
    CHECK(has("loss_b", "b"));
    CHECK(has("loss_pose", "theta"));
    CHECK(has("loss_pose", "center"));
    CHECK(has("loss_landmarks", "b"));
    CHECK(has("loss_landmarks", "theta"));
    CHECK(has("loss_landmarks", "center"));
    CHECK(has("soft_dice", "S_b"));
    CHECK(has("loss_D", "D"));
    CHECK(has("loss_cc", "b"));
    CHECK(has("loss_cc", "theta"));
    CHECK(has("loss_cc", "center"));
    CHECK(has("loss_cc", "D"));
    CHECK(has("loss_co", "D"));
}
