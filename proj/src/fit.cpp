#include <myoshape/fit.hpp>

#include <cmath>
#include <functional>

#include <myoshape/geometry.hpp>
#include <myoshape/rng.hpp>

namespace myoshape::fit {

void FitConfig::require_valid() const {
    weights.require_valid();
    if (max_iters <= 0)
        throw InvalidInputError("FitConfig: max_iters must be positive");
    if (!(tol > 0.0))
        throw InvalidInputError("FitConfig: tolerance must be positive");
    if (n_modes < 0)
        throw InvalidInputError("FitConfig: negative mode count");
    if (lr_pose <= 0.0 || lr_b <= 0.0)
        throw InvalidInputError("FitConfig: step sizes must be positive");
}

void optimizer_step(AdamState& state, Eigen::VectorXd& params,
                    const Eigen::VectorXd& grads, const Eigen::VectorXd& lr,
                    double beta1, double beta2, double eps) {
    if (params.size() != grads.size() || params.size() != lr.size())
        throw InvalidInputError("optimizer_step: shape mismatch");
    if (!grads.allFinite())
        throw DivergenceError("optimizer_step: non-finite gradient", {});
    if (state.m.size() != params.size()) {
        state.m = Eigen::VectorXd::Zero(params.size());
        state.v = Eigen::VectorXd::Zero(params.size());
        state.step_count = 0;
    }
    state.step_count += 1;
    state.m = beta1 * state.m + (1.0 - beta1) * grads;
    state.v = beta2 * state.v + (1.0 - beta2) * grads.cwiseProduct(grads);
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step_count));
    for (Eigen::Index i = 0; i < params.size(); ++i) {
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params[i] -= lr[i] * mhat / (std::sqrt(vhat) + eps);
    }
}

double procrustes_theta(const ShapeModel& model, const LandmarkSet& p,
                        const Point& c) {
    const LandmarkSet mean = vector_to_landmarks(model.mean, model.n_endo);
    double a = 0.0, b = 0.0;
    for (int i = 0; i < p.size() && i < mean.size(); ++i) {
        const Point q = p.pts[i] - c;
        const Point& s = mean.pts[i];
        a += s.x * q.x + s.y * q.y;
        b += s.x * q.y - s.y * q.x;
    }
    if (a == 0.0 && b == 0.0) return 0.0;
    return std::atan2(b, a);
}

namespace {

struct Objective {
    // Returns total loss; fills per-term values and the gradient over
    // params = [b(0..M-1), theta, cx, cy].
    std::function<double(const Eigen::VectorXd&, std::map<std::string, double>&,
                         Eigen::VectorXd&)>
        eval;
};

FitResult run_loop(const FitConfig& cfg, Eigen::VectorXd params,
                   const Objective& obj) {
    const int m = cfg.n_modes;
    Eigen::VectorXd lr(m + 3);
    lr.head(m).setConstant(cfg.lr_b);
    lr.tail(3).setConstant(cfg.lr_pose);

    FitResult res;
    res.trace.reserve(cfg.max_iters);
    AdamState state;
    double prev_total = std::numeric_limits<double>::quiet_NaN();
    int calm = 0;

    for (int it = 0; it < cfg.max_iters; ++it) {
        if (!params.allFinite()) {
            res.b = params.head(m);
            res.pose = Pose{0.0, {0.0, 0.0}};
            throw DivergenceError("fit: non-finite parameters at iteration " +
                                      std::to_string(it),
                                  std::move(res));
        }
        IterRecord rec;
        Eigen::VectorXd grad = Eigen::VectorXd::Zero(m + 3);
        rec.total = obj.eval(params, rec.terms, grad);
        res.trace.push_back(rec);
        res.iterations = it + 1;

        if (!std::isfinite(rec.total)) {
            res.b = params.head(m);
            res.pose = Pose{wrap_angle(params[m]), {params[m + 1], params[m + 2]}};
            throw DivergenceError("fit: non-finite loss at iteration " +
                                      std::to_string(it),
                                  std::move(res));
        }
        if (!cfg.optimize_theta) grad[m] = 0.0;

        // Already at a stationary point (e.g. initialized at the optimum).
        if (grad.cwiseAbs().maxCoeff() <= 1e-13) {
            res.converged = true;
            break;
        }

        try {
            optimizer_step(state, params, grad, lr, cfg.beta1, cfg.beta2, cfg.eps);
        } catch (const DivergenceError&) {
            res.b = params.head(m);
            res.pose = Pose{wrap_angle(params[m]), {params[m + 1], params[m + 2]}};
            throw DivergenceError("fit: non-finite gradient at iteration " +
                                      std::to_string(it),
                                  std::move(res));
        }
        params[m] = wrap_angle(params[m]);

        if (std::isfinite(prev_total) && std::abs(rec.total - prev_total) < cfg.tol) {
            if (++calm >= cfg.tol_patience) {
                res.converged = true;
                break;
            }
        } else {
            calm = 0;
        }
        prev_total = rec.total;
    }

    res.b = params.head(m);
    res.pose = Pose{wrap_angle(params[m]), {params[m + 1], params[m + 2]}};
    return res;
}

Eigen::VectorXd initial_params(const FitConfig& cfg, const Point& center_guess,
                               double theta_guess) {
    const int m = cfg.n_modes;
    Eigen::VectorXd params = Eigen::VectorXd::Zero(m + 3);
    switch (cfg.init) {
        case InitPolicy::MeanShape:
            params[m] = theta_guess;
            params[m + 1] = center_guess.x;
            params[m + 2] = center_guess.y;
            break;
        case InitPolicy::Provided: {
            cfg.init_pose.require_valid("fit init");
            const Eigen::Index k = std::min<Eigen::Index>(cfg.init_b.size(), m);
            params.head(k) = cfg.init_b.head(k);
            params[m] = cfg.init_pose.theta;
            params[m + 1] = cfg.init_pose.center.x;
            params[m + 2] = cfg.init_pose.center.y;
            break;
        }
        case InitPolicy::RandomWithinModel: {
            Rng rng(cfg.seed);
            for (int j = 0; j < m; ++j) params[j] = rng.uniform(-1.0, 1.0);
            params[m] = theta_guess;
            params[m + 1] = center_guess.x;
            params[m + 2] = center_guess.y;
            break;
        }
    }
    return params;
}

}  // namespace

FitResult fit_to_landmarks(const LandmarkSet& p_t, const ShapeModel& model,
                           const FitConfig& cfg) {
    cfg.require_valid();
    p_t.require_valid("fit_to_landmarks");
    if (2 * p_t.size() != model.dim())
        throw InvalidInputError("fit_to_landmarks: landmark count mismatch");
    const int m = std::min(cfg.n_modes, model.n_modes());
    FitConfig local = cfg;
    local.n_modes = m;

    const Point c0 = p_t.centroid();
    const double theta0 = procrustes_theta(model, p_t, c0);
    Eigen::VectorXd params = initial_params(local, c0, theta0);

    Objective obj;
    obj.eval = [&](const Eigen::VectorXd& x, std::map<std::string, double>& terms,
                   Eigen::VectorXd& grad) {
        const ShapeCoeffs b = x.head(m);
        const Pose pose{x[m], {x[m + 1], x[m + 2]}};
        losses::LandmarkChain chain(model, b, pose);
        std::vector<Point> gp;
        const double v = losses::loss_landmarks(p_t, chain.landmarks(), &gp);
        terms["L_p"] = v;
        Eigen::VectorXd gb = Eigen::VectorXd::Zero(m);
        double gt = 0.0;
        Point gc;
        chain.pullback(gp, gb, gt, gc);
        grad.head(m) = gb;
        grad[m] = gt;
        grad[m + 1] = gc.x;
        grad[m + 2] = gc.y;
        return v;
    };

    return run_loop(local, params, obj);
}

FitResult fit_to_distance_map(const ScalarGrid& d_t, const ShapeModel& model,
                              const FitConfig& cfg) {
    cfg.require_valid();
    if (d_t.role != GridRole::DistanceMap)
        throw InvalidInputError("fit_to_distance_map: target must be a distance map");
    const auto& w = cfg.weights;
    if (w.gamma_cc <= 0.0 && w.gamma_co <= 0.0 && w.gamma_phi <= 0.0)
        throw ConfigurationError(
            "fit_to_distance_map: no consistency loss or prior enabled");

    const int m = std::min(cfg.n_modes, model.n_modes());
    FitConfig local = cfg;
    local.n_modes = m;

    // Default center init: centroid of the binarized foreground.
    const BinaryMask fg = raster::binarize(d_t);
    Point c0 = d_t.spec().center();
    if (fg.count() > 0) {
        double sx = 0.0, sy = 0.0;
        for (int y = 0; y < fg.height; ++y)
            for (int x = 0; x < fg.width; ++x)
                if (fg.at(x, y)) {
                    sx += x;
                    sy += y;
                }
        c0 = {sx / fg.count(), sy / fg.count()};
    }
    const double theta0 = cfg.pose_prior ? cfg.pose_prior->theta : 0.0;
    Eigen::VectorXd params = initial_params(local, c0, theta0);

    std::optional<losses::CoContext> co;
    if (w.gamma_co > 0.0) co.emplace(model, d_t.spec(), w.alpha);

    Objective obj;
    obj.eval = [&](const Eigen::VectorXd& x, std::map<std::string, double>& terms,
                   Eigen::VectorXd& grad) {
        const ShapeCoeffs b = x.head(m);
        const Pose pose{x[m], {x[m + 1], x[m + 2]}};
        losses::LandmarkChain chain(model, b, pose);
        Eigen::VectorXd gb = Eigen::VectorXd::Zero(m);
        double gt = 0.0;
        Point gc;
        double total = 0.0;

        if (w.gamma_cc > 0.0) {
            std::vector<Point> gp;
            const double v = losses::loss_cc(d_t, chain.landmarks(), &gp, nullptr);
            terms["L_Cc"] = v;
            total += w.gamma_cc * v;
            chain.pullback(gp, gb, gt, gc, w.gamma_cc);
        }
        if (w.gamma_co > 0.0) {
            const double v = co->eval(d_t, chain.landmarks(), pose.center, nullptr);
            terms["L_Co"] = v;
            total += w.gamma_co * v;
            Eigen::VectorXd gb_co;
            double gt_co = 0.0;
            Point gc_co;
            losses::loss_co_grad_bphi(*co, d_t, model, b, pose, cfg.co_fd_step,
                                      gb_co, gt_co, gc_co);
            gb += w.gamma_co * gb_co;
            gt += w.gamma_co * gt_co;
            gc = gc + gc_co * w.gamma_co;
        }
        if (w.gamma_phi > 0.0 && cfg.pose_prior) {
            double gt_phi = 0.0;
            Point gc_phi;
            const double v =
                losses::loss_pose(*cfg.pose_prior, pose, w.mu_phi, &gt_phi, &gc_phi);
            terms["L_phi"] = v;
            total += w.gamma_phi * v;
            gt += w.gamma_phi * gt_phi;
            gc = gc + gc_phi * w.gamma_phi;
        }

        grad.head(m) = gb;
        grad[m] = gt;
        grad[m + 1] = gc.x;
        grad[m + 2] = gc.y;
        return total;
    };

    return run_loop(local, params, obj);
}

}  // namespace myoshape::fit
