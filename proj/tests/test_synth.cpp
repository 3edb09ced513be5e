#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <myoshape/geometry.hpp>
#include <myoshape/losses.hpp>
#include <myoshape/metrics.hpp>
#include <myoshape/synth.hpp>

using namespace myoshape;
using namespace myoshape::synth;

TEST_CASE("zero amplitudes and zero noise give concentric circles") {
    SynthConfig cfg;
    cfg.n_cases = 10;
    cfg.endo_amp_mm = {};
    cfg.epi_amp_mm = {};
    cfg.noise_sd_mm = 0.0;
    cfg.seed = 5;
    const auto pop = generate_population(cfg);
    REQUIRE(pop.size() == 10);
    for (const auto& c : pop) {
        const LandmarkSet s = geometry::pose_normalize(c.landmarks, c.pose);
        for (int i = 0; i < cfg.n_endo; ++i) {
            CHECK(std::abs(s.pts[i].norm() - 10.0) < 1e-9);               // 20 mm
            CHECK(std::abs(s.pts[cfg.n_endo + i].norm() - 15.0) < 1e-9);  // 30 mm
        }
    }
}

TEST_CASE("same seed reproduces the population bit-exactly") {
    SynthConfig cfg;
    cfg.n_cases = 30;
    cfg.seed = 99;
    const auto a = generate_population(cfg);
    const auto b = generate_population(cfg);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].pose.theta == b[i].pose.theta);
        CHECK(a[i].pose.center.x == b[i].pose.center.x);
        for (int j = 0; j < a[i].landmarks.size(); ++j) {
            CHECK(a[i].landmarks.pts[j].x == b[i].landmarks.pts[j].x);
            CHECK(a[i].landmarks.pts[j].y == b[i].landmarks.pts[j].y);
        }
    }
    SynthConfig other = cfg;
    other.seed = 100;
    const auto c = generate_population(other);
    bool any_diff = false;
    for (size_t i = 0; i < a.size() && !any_diff; ++i)
        any_diff = a[i].pose.theta != c[i].pose.theta;
    CHECK(any_diff);
}

TEST_CASE("endo stays strictly inside epi with the configured margin") {
    SynthConfig cfg;
    cfg.n_cases = 100;
    cfg.seed = 31;
    const auto pop = generate_population(cfg);
    for (const auto& c : pop) {
        const LandmarkSet s = geometry::pose_normalize(c.landmarks, c.pose);
        for (int i = 0; i < cfg.n_endo; ++i) {
            const double margin_px =
                s.pts[cfg.n_endo + i].norm() - s.pts[i].norm();
            CHECK(margin_px * cfg.grid.pixel_size_mm >= cfg.min_margin_mm - 1e-9);
        }
    }
}

TEST_CASE("population supports a 12-mode model at 99 percent variance") {
    SynthConfig cfg;
    cfg.n_cases = 200;
    cfg.seed = 2024;
    const auto pop = generate_population(cfg);
    std::vector<LandmarkSet> shapes;
    for (const auto& c : pop)
        shapes.push_back(geometry::pose_normalize(c.landmarks, c.pose));
    const ShapeModel model = shape_model::build_model(shapes, 2.0);
    CHECK(shape_model::explained_variance(model, 12) >= 0.99);
}

TEST_CASE("infeasible configuration errors out") {
    SynthConfig cfg;
    cfg.n_cases = 3;
    cfg.endo_radius_mm = 20.0;
    cfg.epi_radius_mm = 21.0;
    cfg.min_margin_mm = 5.0;  // cannot be met
    cfg.seed = 7;
    CHECK_THROWS_AS(generate_population(cfg), InfeasibleConfigError);

    SynthConfig bad;
    bad.epi_radius_mm = bad.endo_radius_mm;
    CHECK_THROWS_AS(generate_population(bad), InvalidInputError);
}

TEST_CASE("case bundles are self-consistent") {
    SynthConfig cfg;
    cfg.n_cases = 60;
    cfg.seed = 808;
    const auto pop = generate_population(cfg);
    std::vector<LandmarkSet> shapes;
    for (const auto& c : pop)
        shapes.push_back(geometry::pose_normalize(c.landmarks, c.pose));
    const ShapeModel model = shape_model::build_model(shapes, 2.0);

    for (int i = 0; i < 5; ++i) {
        const CaseBundle bundle = make_case_bundle(pop[i], model, cfg.grid, 12);
        // Landmarks lie on the zero level set of their own distance map.
        CHECK(losses::loss_cc(bundle.distance, bundle.landmarks) <= 0.05);
        // mask == binarize(distance) by construction.
        const BinaryMask via = raster::binarize(bundle.distance);
        CHECK(metrics::dsc(bundle.mask, via) == 1.0);
        // Topology is clean.
        CHECK(metrics::classify_shape(bundle.mask).empty());
        // b reproduces the landmarks up to the truncation residual.
        const double dpb = metrics::shape_landmark_error(model, bundle.b,
                                                         bundle.pose,
                                                         bundle.landmarks);
        CHECK(dpb < 0.25);
    }
}
