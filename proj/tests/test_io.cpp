#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <myoshape/geometry.hpp>
#include <myoshape/io.hpp>
#include <myoshape/rng.hpp>
#include <myoshape/synth.hpp>

using namespace myoshape;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("myoshape_io_" + std::to_string(::getpid()) + "_" +
                std::to_string(reinterpret_cast<uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("landmarks CSV round trip") {
    TempDir tmp;
    Rng rng(1);
    LandmarkSet p;
    p.n_endo = 18;
    for (int i = 0; i < 36; ++i)
        p.pts.push_back({rng.uniform(-30, 30), rng.uniform(-30, 30)});

    const fs::path f = tmp.path / "landmarks.csv";
    io::write_landmarks(f, p);
    const LandmarkSet q = io::read_landmarks(f);
    REQUIRE(q.size() == p.size());
    CHECK(q.n_endo == 18);
    for (int i = 0; i < p.size(); ++i) {
        CHECK(std::abs(q.pts[i].x - p.pts[i].x) < 1e-12);
        CHECK(std::abs(q.pts[i].y - p.pts[i].y) < 1e-12);
    }

    CHECK_THROWS_AS(io::landmarks_from_csv("ring,index,x_px,y_px\nmid,0,1,2\n"),
                    IoError);
    CHECK_THROWS_AS(io::read_landmarks(tmp.path / "missing.csv"), IoError);
}

TEST_CASE("pose JSON round trip") {
    TempDir tmp;
    const Pose pose{-1.234567890123, {17.25, 99.5}};
    const fs::path f = tmp.path / "pose.json";
    io::write_pose(f, pose);
    const Pose q = io::read_pose(f);
    CHECK(std::abs(q.theta - pose.theta) < 1e-12);
    CHECK(std::abs(q.center.x - pose.center.x) < 1e-12);
    CHECK(std::abs(q.center.y - pose.center.y) < 1e-12);
    CHECK_THROWS_AS(io::pose_from_json("{\"theta_rad\": 1}"), IoError);
    CHECK_THROWS_AS(io::pose_from_json("not json"), IoError);
}

TEST_CASE("model JSON round trip preserves the model to 1e-12") {
    TempDir tmp;
    synth::SynthConfig cfg;
    cfg.n_cases = 40;
    cfg.seed = 3;
    std::vector<LandmarkSet> shapes;
    for (const auto& c : synth::generate_population(cfg))
        shapes.push_back(geometry::pose_normalize(c.landmarks, c.pose));
    const ShapeModel m = shape_model::build_model(shapes, 2.0);

    const fs::path f = tmp.path / "model.json";
    io::write_model(f, m);
    const ShapeModel q = io::read_model(f);
    CHECK(q.n_endo == m.n_endo);
    CHECK(q.pixel_size_mm == m.pixel_size_mm);
    CHECK((q.mean - m.mean).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((q.eigenvalues - m.eigenvalues).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((q.eigenvectors - m.eigenvectors).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("weights JSON honors defaults and rejects bad values") {
    const losses::LossWeights defaults;
    const losses::LossWeights w =
        io::weights_from_json("{\"gamma_D\": 50, \"alpha\": 7}");
    CHECK(w.gamma_D == 50.0);
    CHECK(w.alpha == 7.0);
    CHECK(w.gamma_b == defaults.gamma_b);
    CHECK(w.mu_D == defaults.mu_D);
    CHECK_THROWS_AS(io::weights_from_json("{\"alpha\": 0}"), InvalidInputError);

    const losses::LossWeights rt = io::weights_from_json(io::weights_to_json(w));
    CHECK(rt.gamma_D == w.gamma_D);
    CHECK(rt.alpha == w.alpha);
}

TEST_CASE("grid file round trip is float-exact and byte-stable") {
    TempDir tmp;
    GridSpec spec{33, 17, 2.0};
    ScalarGrid g(spec, GridRole::DistanceMap);
    Rng rng(7);
    for (auto& v : g.values) v = rng.uniform(-40, 40);

    const fs::path f1 = tmp.path / "a.sdg";
    io::write_grid(f1, g);
    const ScalarGrid q = io::read_grid(f1);
    CHECK(q.width == g.width);
    CHECK(q.height == g.height);
    CHECK(q.pixel_size_mm == g.pixel_size_mm);
    CHECK(q.role == GridRole::DistanceMap);
    for (size_t i = 0; i < g.values.size(); ++i)
        CHECK(q.values[i] == static_cast<double>(static_cast<float>(g.values[i])));

    // Rewriting a file-sourced grid is byte-identical.
    const fs::path f2 = tmp.path / "b.sdg";
    io::write_grid(f2, q);
    CHECK(slurp(f1) == slurp(f2));

    CHECK_THROWS_AS(io::read_grid(tmp.path / "nope.sdg"), IoError);
    io::atomic_write(tmp.path / "bad.sdg", "SDGRID 2\n1 1 2.0 generic\nxxxx");
    CHECK_THROWS_AS(io::read_grid(tmp.path / "bad.sdg"), IoError);
}

TEST_CASE("mask PGM round trip") {
    TempDir tmp;
    BinaryMask m(21, 13);
    Rng rng(9);
    for (auto& b : m.bits) b = rng.uniform01() < 0.3;
    const fs::path f = tmp.path / "mask.pgm";
    io::write_mask(f, m);
    const BinaryMask q = io::read_mask(f);
    CHECK(q.width == m.width);
    CHECK(q.height == m.height);
    CHECK(q.bits == m.bits);

    const std::string content = slurp(f);
    CHECK(content.rfind("P5\n21 13\n255\n", 0) == 0);
}

TEST_CASE("synth config round trip") {
    synth::SynthConfig cfg;
    cfg.n_cases = 77;
    cfg.seed = 12345;
    cfg.endo_amp_mm = {0.5, 0.4, 0.3, 0.2, 0.1, 0.05};
    const synth::SynthConfig q =
        io::synth_config_from_json(io::synth_config_to_json(cfg));
    CHECK(q.n_cases == 77);
    CHECK(q.seed == 12345);
    CHECK(q.endo_amp_mm == cfg.endo_amp_mm);
    CHECK(q.grid.width == cfg.grid.width);
}

TEST_CASE("fit result JSON round trip") {
    fit::FitResult res;
    res.b = ShapeCoeffs(3);
    res.b << 0.5, -1.25, 0.125;
    res.pose = Pose{0.75, {12.5, 99.0}};
    res.converged = true;
    res.iterations = 2;
    fit::IterRecord r1;
    r1.total = 3.5;
    r1.terms["L_p"] = 3.5;
    fit::IterRecord r2;
    r2.total = 1.25;
    r2.terms["L_p"] = 1.25;
    res.trace = {r1, r2};

    const fit::FitResult q = io::fit_result_from_json(io::fit_result_to_json(res));
    CHECK((q.b - res.b).norm() == 0.0);
    CHECK(q.pose.theta == res.pose.theta);
    CHECK(q.converged);
    CHECK(q.iterations == 2);
    REQUIRE(q.trace.size() == 2);
    CHECK(q.trace[1].terms.at("L_p") == 1.25);
}

TEST_CASE("config hash is stable and key-order independent") {
    const std::string h1 = io::config_hash_hex("{\"a\":1,\"b\":2}");
    const std::string h2 = io::config_hash_hex("{\"a\":1,\"b\":2}");
    const std::string h3 = io::config_hash_hex("{\"a\":1,\"b\":3}");
    CHECK(h1 == h2);
    CHECK(h1 != h3);
    CHECK(h1.size() == 16);
}

TEST_CASE("atomic write leaves no temp file behind") {
    TempDir tmp;
    const fs::path f = tmp.path / "x.txt";
    io::atomic_write(f, "hello");
    CHECK(slurp(f) == "hello");
    CHECK(!fs::exists(tmp.path / "x.txt.tmp"));
}
