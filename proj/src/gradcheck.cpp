#include <myoshape/gradcheck.hpp>

#include <cmath>
#include <functional>
#include <sstream>

#include <myoshape/geometry.hpp>
#include <myoshape/losses.hpp>
#include <myoshape/rng.hpp>
#include <myoshape/synth.hpp>

namespace myoshape::gradcheck {

namespace {

constexpr double kStep = 1e-5;

/// max_i |a_i - f_i| relative to a gradient scale. When `scale` is not
/// given, the block's own largest magnitude is used; blocks whose exact
/// value nearly cancels (e.g. the theta component of a sampling loss) are
/// measured against the full gradient of their loss instead.
double block_rel_err(const std::vector<double>& analytic,
                     const std::vector<double>& fd, double scale = 0.0) {
    double worst = 0.0;
    for (size_t i = 0; i < analytic.size(); ++i) {
        scale = std::max({scale, std::abs(analytic[i]), std::abs(fd[i])});
        worst = std::max(worst, std::abs(analytic[i] - fd[i]));
    }
    return worst / std::max(scale, 1e-12);
}

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

using ScalarFn = std::function<double(double)>;

double central_fd(const ScalarFn& f, double x) {
    return (f(x + kStep) - f(x - kStep)) / (2.0 * kStep);
}

ScalarGrid random_distance_map(Rng& rng, int size, double radius) {
    // A perturbed radial field looks like a distance map and keeps the
    // gradients well-scaled.
    GridSpec spec{size, size, 2.0};
    ScalarGrid d(spec, GridRole::DistanceMap);
    const Point c = spec.center();
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const double r = (Point{static_cast<double>(x), static_cast<double>(y)} - c).norm();
            d.at(x, y) = r - radius + rng.uniform(-0.3, 0.3);
        }
    return d;
}

ScalarGrid random_soft_grid(Rng& rng, int size) {
    GridSpec spec{size, size, 2.0};
    ScalarGrid g(spec, GridRole::SoftMask);
    for (auto& v : g.values) v = rng.uniform(0.05, 0.95);
    return g;
}

ShapeModel fixture_model(std::uint64_t seed) {
    synth::SynthConfig cfg;
    cfg.n_cases = 80;
    cfg.seed = seed;
    const auto pop = synth::generate_population(cfg);
    std::vector<LandmarkSet> shapes;
    shapes.reserve(pop.size());
    for (const auto& c : pop)
        shapes.push_back(geometry::pose_normalize(c.landmarks, c.pose));
    return shape_model::build_model(shapes, cfg.grid.pixel_size_mm);
}

struct Suite {
    Rng rng;
    ShapeModel model;
    std::vector<Row> rows;

    explicit Suite(std::uint64_t seed)
        : rng(seed), model(fixture_model(Rng::derive_seed(seed, 77))) {}

    void record(const std::string& term, const std::string& block, double err) {
        for (auto& row : rows)
            if (row.term == term && row.param_block == block) {
                row.max_rel_err = std::max(row.max_rel_err, err);
                return;
            }
        rows.push_back({term, block, err});
    }

    ShapeCoeffs random_coeffs(int m, double range) {
        ShapeCoeffs b(m);
        for (int i = 0; i < m; ++i) b[i] = rng.uniform(-range, range);
        return b;
    }

    Pose random_pose(const GridSpec& spec, double c_spread) {
        const Point c = spec.center();
        return Pose{rng.uniform(-M_PI / 2, M_PI / 2),
                    {c.x + rng.uniform(-c_spread, c_spread),
                     c.y + rng.uniform(-c_spread, c_spread)}};
    }

    void check_loss_b() {
        const int m = 12;
        const ShapeCoeffs bt = random_coeffs(m, 2.0);
        const ShapeCoeffs bp = random_coeffs(m, 2.0);
        Eigen::VectorXd g;
        losses::loss_b(bt, bp, &g);
        std::vector<double> an(g.data(), g.data() + g.size()), fd(m);
        for (int i = 0; i < m; ++i) {
            fd[i] = central_fd(
                [&](double x) {
                    ShapeCoeffs b = bp;
                    b[i] = x;
                    return losses::loss_b(bt, b);
                },
                bp[i]);
        }
        record("loss_b", "b", block_rel_err(an, fd));
    }

    void check_loss_pose() {
        const Pose pt = random_pose({128, 128, 2.0}, 20.0);
        const Pose pp = random_pose({128, 128, 2.0}, 20.0);
        const double mu = rng.uniform(0.2, 2.0);
        double gt = 0.0;
        Point gc;
        losses::loss_pose(pt, pp, mu, &gt, &gc);
        const double fd_t = central_fd(
            [&](double x) { return losses::loss_pose(pt, {x, pp.center}, mu); },
            pp.theta);
        record("loss_pose", "theta", block_rel_err({gt}, {fd_t}));
        std::vector<double> an{gc.x, gc.y}, fd(2);
        fd[0] = central_fd(
            [&](double x) {
                return losses::loss_pose(pt, {pp.theta, {x, pp.center.y}}, mu);
            },
            pp.center.x);
        fd[1] = central_fd(
            [&](double y) {
                return losses::loss_pose(pt, {pp.theta, {pp.center.x, y}}, mu);
            },
            pp.center.y);
        record("loss_pose", "center", block_rel_err(an, fd));
    }

    // Shared FD scaffold for losses of the form f(p(b, theta, c)). Per-block
    // errors are measured against the full (b, theta, c) gradient scale.
    void check_chain(const std::string& term, int m,
                     const std::function<double(const ShapeCoeffs&, const Pose&)>& f,
                     const ShapeCoeffs& b, const Pose& pose,
                     const Eigen::VectorXd& gb, double gt, const Point& gc) {
        std::vector<double> an_b(gb.data(), gb.data() + gb.size()), fd_b(m);
        for (int i = 0; i < m; ++i)
            fd_b[i] = central_fd(
                [&](double x) {
                    ShapeCoeffs bb = b;
                    bb[i] = x;
                    return f(bb, pose);
                },
                b[i]);

        const double fd_t = central_fd(
            [&](double x) { return f(b, {x, pose.center}); }, pose.theta);

        std::vector<double> an_c{gc.x, gc.y}, fd_c(2);
        fd_c[0] = central_fd(
            [&](double x) { return f(b, {pose.theta, {x, pose.center.y}}); },
            pose.center.x);
        fd_c[1] = central_fd(
            [&](double y) { return f(b, {pose.theta, {pose.center.x, y}}); },
            pose.center.y);

        const double scale = std::max(
            {max_abs(an_b), max_abs(fd_b), std::abs(gt), std::abs(fd_t),
             max_abs(an_c), max_abs(fd_c)});
        record(term, "b", block_rel_err(an_b, fd_b, scale));
        record(term, "theta", block_rel_err({gt}, {fd_t}, scale));
        record(term, "center", block_rel_err(an_c, fd_c, scale));
    }

    void check_loss_landmarks() {
        const int m = 8;
        const GridSpec spec{128, 128, 2.0};
        const ShapeCoeffs b_true = random_coeffs(m, 1.5);
        const Pose pose_true = random_pose(spec, 10.0);
        const LandmarkSet p_t = geometry::pose_denormalize(
            shape_model::reconstruct(model, b_true), pose_true);

        const ShapeCoeffs b = random_coeffs(m, 1.5);
        const Pose pose = random_pose(spec, 10.0);
        losses::LandmarkChain chain(model, b, pose);
        std::vector<Point> gp;
        losses::loss_landmarks(p_t, chain.landmarks(), &gp);
        Eigen::VectorXd gb = Eigen::VectorXd::Zero(m);
        double gt = 0.0;
        Point gc;
        chain.pullback(gp, gb, gt, gc);

        check_chain(
            "loss_landmarks", m,
            [&](const ShapeCoeffs& bb, const Pose& pp) {
                losses::LandmarkChain c(model, bb, pp);
                return losses::loss_landmarks(p_t, c.landmarks());
            },
            b, pose, gb, gt, gc);
    }

    void check_soft_dice() {
        ScalarGrid a = random_soft_grid(rng, 8);
        ScalarGrid b = random_soft_grid(rng, 8);
        std::vector<double> ga, gb;
        losses::soft_dice(a, b, &ga, &gb);
        std::vector<double> fd(b.values.size());
        for (size_t i = 0; i < b.values.size(); ++i)
            fd[i] = central_fd(
                [&](double x) {
                    ScalarGrid bb = b;
                    bb.values[i] = x;
                    return losses::soft_dice(a, bb);
                },
                b.values[i]);
        record("soft_dice", "S_b", block_rel_err(gb, fd));
    }

    void check_loss_d() {
        ScalarGrid dt = random_distance_map(rng, 16, 10.0);
        ScalarGrid dp = random_distance_map(rng, 16, 10.0);
        const double mu = 0.1, alpha = 5.0;
        std::vector<double> g;
        losses::loss_d(dt, dp, mu, alpha, &g);
        std::vector<double> fd(dp.values.size());
        for (size_t i = 0; i < dp.values.size(); ++i)
            fd[i] = central_fd(
                [&](double x) {
                    ScalarGrid dd = dp;
                    dd.values[i] = x;
                    return losses::loss_d(dt, dd, mu, alpha);
                },
                dp.values[i]);
        record("loss_D", "D", block_rel_err(g, fd));
    }

    // Central differences step over bilinear cell boundaries if a landmark
    // sits on an integer gridline; draw configurations clear of them.
    static bool clear_of_gridlines(const LandmarkSet& p, double min_dist) {
        for (const auto& q : p.pts) {
            const double fx = std::abs(q.x - std::round(q.x));
            const double fy = std::abs(q.y - std::round(q.y));
            if (fx < min_dist || fy < min_dist) return false;
        }
        return true;
    }

    void check_loss_cc() {
        const int m = 6;
        GridSpec spec{32, 32, 2.0};
        ScalarGrid d = random_distance_map(rng, 32, 8.0);
        // Keep the shape small and interior so landmarks stay in-bounds.
        ShapeModel small = model;
        small.mean *= 0.4;
        ShapeCoeffs b = random_coeffs(m, 0.5);
        Pose pose;
        for (int attempt = 0; attempt < 200; ++attempt) {
            pose = Pose{rng.uniform(-M_PI / 2, M_PI / 2),
                        {spec.center().x + rng.uniform(-2.0, 2.0),
                         spec.center().y + rng.uniform(-2.0, 2.0)}};
            losses::LandmarkChain probe(small, b, pose);
            if (clear_of_gridlines(probe.landmarks(), 1e-3)) break;
            b = random_coeffs(m, 0.5);
        }

        losses::LandmarkChain chain(small, b, pose);
        std::vector<Point> gp;
        std::vector<double> gd;
        losses::loss_cc(d, chain.landmarks(), &gp, &gd);
        Eigen::VectorXd gb = Eigen::VectorXd::Zero(m);
        double gt = 0.0;
        Point gc;
        chain.pullback(gp, gb, gt, gc);

        check_chain(
            "loss_cc", m,
            [&](const ShapeCoeffs& bb, const Pose& pp) {
                losses::LandmarkChain c(small, bb, pp);
                return losses::loss_cc(d, c.landmarks());
            },
            b, pose, gb, gt, gc);

        std::vector<double> fd(d.values.size());
        for (size_t i = 0; i < d.values.size(); ++i)
            fd[i] = central_fd(
                [&](double x) {
                    ScalarGrid dd = d;
                    dd.values[i] = x;
                    return losses::loss_cc(dd, chain.landmarks());
                },
                d.values[i]);
        record("loss_cc", "D", block_rel_err(gd, fd));
    }

    void check_loss_co() {
        GridSpec spec{32, 32, 2.0};
        // Shrink the model into the small grid.
        ShapeModel small = model;
        small.mean *= 0.35;
        small.eigenvectors *= 0.35;
        losses::CoContext ctx(small, spec, 5.0);

        ScalarGrid d = random_distance_map(rng, 32, 6.0);
        const ShapeCoeffs b = random_coeffs(6, 1.0);
        const Pose pose{rng.uniform(-M_PI / 2, M_PI / 2),
                        {spec.center().x + rng.uniform(-1.5, 1.5),
                         spec.center().y + rng.uniform(-1.5, 1.5)}};
        losses::LandmarkChain chain(small, b, pose);

        std::vector<double> gd;
        ctx.eval(d, chain.landmarks(), pose.center, &gd);
        std::vector<double> fd(d.values.size());
        for (size_t i = 0; i < d.values.size(); ++i)
            fd[i] = central_fd(
                [&](double x) {
                    ScalarGrid dd = d;
                    dd.values[i] = x;
                    return ctx.eval(dd, chain.landmarks(), pose.center);
                },
                d.values[i]);
        record("loss_co", "D", block_rel_err(gd, fd));
    }
};

}  // namespace

std::vector<Row> run(std::uint64_t seed, int n_configs) {
    Suite suite(seed);
    for (int c = 0; c < n_configs; ++c) {
        suite.check_loss_b();
        suite.check_loss_pose();
        suite.check_loss_landmarks();
        suite.check_soft_dice();
        suite.check_loss_d();
        suite.check_loss_cc();
        suite.check_loss_co();
    }
    return suite.rows;
}

bool all_pass(const std::vector<Row>& rows, double tol) {
    for (const auto& r : rows)
        if (!(r.max_rel_err <= tol)) return false;
    return !rows.empty();
}

std::string to_csv(const std::vector<Row>& rows) {
    std::ostringstream out;
    out << "term,param_block,max_rel_err\n";
    out.precision(6);
    for (const auto& r : rows)
        out << r.term << ',' << r.param_block << ',' << std::scientific
            << r.max_rel_err << '\n';
    return out.str();
}

}  // namespace myoshape::gradcheck
