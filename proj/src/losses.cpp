#include <myoshape/losses.hpp>

#include <cmath>

#include <myoshape/geometry.hpp>

namespace myoshape::losses {

void LossWeights::require_valid() const {
    const double all[] = {gamma_b, gamma_phi, gamma_p, gamma_D,
                          gamma_cc, gamma_co, mu_phi, mu_D};
    for (double g : all)
        if (!(g >= 0.0))
            throw InvalidInputError("LossWeights: negative or non-finite weight");
    if (!(alpha > 0.0))
        throw InvalidInputError("LossWeights: alpha must be positive");
}

// ---------------------------------------------------------------------------
// Landmark chain
// ---------------------------------------------------------------------------

LandmarkChain::LandmarkChain(const ShapeModel& model, const ShapeCoeffs& b,
                             const Pose& pose)
    : model_(&model), cos_t_(std::cos(pose.theta)), sin_t_(std::sin(pose.theta)),
      n_modes_(b.size()) {
    normalized_ = shape_model::reconstruct(model, b);
    landmarks_ = geometry::pose_denormalize(normalized_, pose);
}

void LandmarkChain::pullback(const std::vector<Point>& g, Eigen::VectorXd& grad_b,
                             double& grad_theta, Point& grad_center,
                             double scale) const {
    const int n = landmarks_.size();
    if (static_cast<int>(g.size()) != n)
        throw InvalidInputError("LandmarkChain::pullback: gradient length mismatch");
    if (grad_b.size() == 0) grad_b = Eigen::VectorXd::Zero(n_modes_);
    if (grad_b.size() != n_modes_)
        throw InvalidInputError("LandmarkChain::pullback: coefficient block mismatch");

    // p_i = R^T(theta) s_i + c, so dp/dc = I and dp/dtheta = dR^T/dtheta s_i.
    for (int i = 0; i < n; ++i) {
        grad_center.x += scale * g[i].x;
        grad_center.y += scale * g[i].y;
        const Point& s = normalized_.pts[i];
        const double dpx = -sin_t_ * s.x - cos_t_ * s.y;
        const double dpy = cos_t_ * s.x - sin_t_ * s.y;
        grad_theta += scale * (g[i].x * dpx + g[i].y * dpy);
    }
    // dp_i/db_m = sqrt(lambda_m) R^T v_m,i; <g, R^T v> = <R g, v>.
    Eigen::VectorXd rotated(2 * n);
    for (int i = 0; i < n; ++i) {
        rotated[2 * i] = cos_t_ * g[i].x + sin_t_ * g[i].y;
        rotated[2 * i + 1] = -sin_t_ * g[i].x + cos_t_ * g[i].y;
    }
    for (Eigen::Index m = 0; m < n_modes_; ++m)
        grad_b[m] += scale * std::sqrt(model_->eigenvalues[m]) *
                     model_->eigenvectors.col(m).dot(rotated);
}

// ---------------------------------------------------------------------------
// Similarity losses
// ---------------------------------------------------------------------------

double loss_b(const Eigen::VectorXd& b_t, const Eigen::VectorXd& b_p,
              Eigen::VectorXd* grad_bp) {
    if (b_t.size() != b_p.size())
        throw InvalidInputError("loss_b: coefficient length mismatch");
    const double m = static_cast<double>(b_t.size());
    const Eigen::VectorXd diff = b_t - b_p;
    if (grad_bp) *grad_bp = (2.0 / m) * (b_p - b_t);
    return diff.squaredNorm() / m;
}

double loss_pose(const Pose& pose_t, const Pose& pose_p, double mu_phi,
                 double* grad_theta, Point* grad_center) {
    pose_t.require_valid("loss_pose");
    pose_p.require_valid("loss_pose");
    const double dt = pose_t.theta - pose_p.theta;
    const Point dc = pose_t.center - pose_p.center;
    if (grad_theta) *grad_theta = -std::sin(dt);
    if (grad_center) *grad_center = {mu_phi * -dc.x, mu_phi * -dc.y};
    return -std::cos(dt) + mu_phi * 0.5 * dc.squaredNorm();
}

double loss_landmarks(const LandmarkSet& p_t, const LandmarkSet& p_p,
                      std::vector<Point>* grad_pp) {
    if (p_t.size() != p_p.size())
        throw InvalidInputError("loss_landmarks: landmark count mismatch");
    const double n = static_cast<double>(p_t.size());
    double acc = 0.0;
    if (grad_pp) grad_pp->assign(p_t.size(), Point{});
    for (int i = 0; i < p_t.size(); ++i) {
        const Point d = p_t.pts[i] - p_p.pts[i];
        acc += d.squaredNorm();
        if (grad_pp) (*grad_pp)[i] = {-2.0 / n * d.x, -2.0 / n * d.y};
    }
    return acc / n;
}

double soft_dice(const ScalarGrid& a, const ScalarGrid& b,
                 std::vector<double>* grad_a, std::vector<double>* grad_b) {
    if (!a.same_dims(b))
        throw InvalidInputError("soft_dice: grid dimension mismatch");
    for (const auto* g : {&a, &b})
        for (double v : g->values)
            if (v < -1e-9 || v > 1.0 + 1e-9)
                throw InvalidInputError("soft_dice: values outside [0,1]");

    double inter = 0.0, total = 0.0;
    for (size_t i = 0; i < a.values.size(); ++i) {
        inter += a.values[i] * b.values[i];
        total += a.values[i] + b.values[i];
    }
    if (total == 0.0) {
        if (grad_a) grad_a->assign(a.values.size(), 0.0);
        if (grad_b) grad_b->assign(b.values.size(), 0.0);
        return 1.0;  // both-empty convention
    }
    const double loss = 1.0 - 2.0 * inter / total;
    if (grad_a || grad_b) {
        const double t2 = total * total;
        if (grad_a) grad_a->resize(a.values.size());
        if (grad_b) grad_b->resize(b.values.size());
        for (size_t i = 0; i < a.values.size(); ++i) {
            if (grad_a) (*grad_a)[i] = -2.0 * (b.values[i] * total - inter) / t2;
            if (grad_b) (*grad_b)[i] = -2.0 * (a.values[i] * total - inter) / t2;
        }
    }
    return loss;
}

double loss_d(const ScalarGrid& d_t, const ScalarGrid& d_p, double mu_d,
              double alpha, std::vector<double>* grad_dp) {
    if (!d_t.same_dims(d_p))
        throw InvalidInputError("loss_d: grid dimension mismatch");
    if (d_t.role != GridRole::DistanceMap || d_p.role != GridRole::DistanceMap)
        throw InvalidInputError("loss_d: inputs must be distance maps");

    const ScalarGrid s_t = raster::soft_mask(d_t, alpha);
    const ScalarGrid s_p = raster::soft_mask(d_p, alpha);
    std::vector<double> dice_grad_sp;
    const double dice =
        soft_dice(s_t, s_p, nullptr, grad_dp ? &dice_grad_sp : nullptr);

    const double x = static_cast<double>(d_t.pixel_count());
    double mse = 0.0;
    for (size_t i = 0; i < d_t.values.size(); ++i) {
        const double diff = d_t.values[i] - d_p.values[i];
        mse += diff * diff;
    }
    mse /= x;

    if (grad_dp) {
        grad_dp->resize(d_p.values.size());
        for (size_t i = 0; i < d_p.values.size(); ++i) {
            const double s = s_p.values[i];
            const double ds_dd = -alpha * s * (1.0 - s);
            (*grad_dp)[i] = dice_grad_sp[i] * ds_dd +
                            mu_d * 2.0 / x * (d_p.values[i] - d_t.values[i]);
        }
    }
    return dice + mu_d * mse;
}

// ---------------------------------------------------------------------------
// Consistency losses
// ---------------------------------------------------------------------------

double loss_cc(const ScalarGrid& d_p, const LandmarkSet& p_p,
               std::vector<Point>* grad_pp, std::vector<double>* grad_dp) {
    if (d_p.role != GridRole::DistanceMap)
        throw InvalidInputError("loss_cc: grid must be a distance map");
    p_p.require_valid("loss_cc");
    const double n = static_cast<double>(p_p.size());
    if (grad_pp) grad_pp->assign(p_p.pts.size(), Point{});
    if (grad_dp) grad_dp->assign(d_p.values.size(), 0.0);

    double acc = 0.0;
    for (int i = 0; i < p_p.size(); ++i) {
        const BilinearSample s = bilinear_sample(d_p, p_p.pts[i]);
        acc += s.value * s.value;
        const double f = 2.0 / n * s.value;
        if (grad_pp) (*grad_pp)[i] = {f * s.ddx, f * s.ddy};
        if (grad_dp)
            for (int k = 0; k < 4; ++k) (*grad_dp)[s.idx[k]] += f * s.w[k];
    }
    return acc / n;
}

CoContext::CoContext(const ShapeModel& model, const GridSpec& spec, double alpha)
    : spec_(spec), alpha_(alpha) {
    if (alpha <= 0.0)
        throw InvalidInputError("CoContext: alpha must be positive");
    mean_shape_ = vector_to_landmarks(model.mean, model.n_endo);
    mean_frame_ = mean_shape_;
    const Point c = spec.center();
    for (auto& p : mean_frame_.pts) p = p + c;

    const Contour endo = geometry::spline_contour(mean_frame_.endo_ring());
    const Contour epi = geometry::spline_contour(mean_frame_.epi_ring());
    s_bar_ = raster::soft_mask(raster::distance_map(endo, epi, spec), alpha);

    TpsSolver solver(mean_frame_.pts, 0.0);
    basis_.resize(spec.pixel_count(), mean_frame_.size() + 3);
    for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x)
            basis_.row(y * spec.width + x) =
                solver.basis_row({static_cast<double>(x), static_cast<double>(y)});
}

double CoContext::eval(const ScalarGrid& d_p, const LandmarkSet& p_p,
                       const Point& c_p, std::vector<double>* grad_dp) const {
    if (d_p.role != GridRole::DistanceMap)
        throw InvalidInputError("loss_co: grid must be a distance map");
    if (p_p.size() != mean_frame_.size())
        throw InvalidInputError("loss_co: landmark count mismatch with model");

    const int n = p_p.size();
    Eigen::MatrixXd dst = Eigen::MatrixXd::Zero(n + 3, 2);
    for (int i = 0; i < n; ++i) {
        dst(i, 0) = p_p.pts[i].x;
        dst(i, 1) = p_p.pts[i].y;
    }
    // Sample positions in d_p space for every mean-frame pixel.
    const Eigen::MatrixXd pos = basis_ * dst;

    const double a = scale_factor(mean_shape_, p_p, c_p);
    const int npix = spec_.pixel_count();

    std::vector<BilinearSample> samples;
    if (grad_dp) samples.resize(npix);

    std::vector<double> warped(npix);
    double inter = 0.0, total = 0.0;
    for (int q = 0; q < npix; ++q) {
        BilinearSample s = bilinear_sample(d_p, {pos(q, 0), pos(q, 1)});
        const double y = raster::soft_value(a * s.value, alpha_);
        warped[q] = y;
        inter += s_bar_.values[q] * y;
        total += s_bar_.values[q] + y;
        if (grad_dp) samples[q] = s;
    }
    const double loss = 1.0 - 2.0 * inter / total;

    if (grad_dp) {
        grad_dp->assign(d_p.values.size(), 0.0);
        const double t2 = total * total;
        for (int q = 0; q < npix; ++q) {
            const double dl_dy = -2.0 * (s_bar_.values[q] * total - inter) / t2;
            const double y = warped[q];
            const double chain = dl_dy * (-alpha_ * y * (1.0 - y)) * a;
            const BilinearSample& s = samples[q];
            for (int k = 0; k < 4; ++k) (*grad_dp)[s.idx[k]] += chain * s.w[k];
        }
    }
    return loss;
}

double loss_co(const ScalarGrid& d_p, const LandmarkSet& p_p,
               const ShapeModel& model, const Point& c_p, double alpha,
               std::vector<double>* grad_dp) {
    CoContext ctx(model, d_p.spec(), alpha);
    return ctx.eval(d_p, p_p, c_p, grad_dp);
}

void loss_co_grad_bphi(const CoContext& ctx, const ScalarGrid& d_p,
                       const ShapeModel& model, const ShapeCoeffs& b,
                       const Pose& pose, double step, Eigen::VectorXd& grad_b,
                       double& grad_theta, Point& grad_center) {
    const auto eval_at = [&](const ShapeCoeffs& bb, const Pose& pp) {
        const LandmarkSet p = geometry::pose_denormalize(
            shape_model::reconstruct(model, bb), pp);
        return ctx.eval(d_p, p, pp.center, nullptr);
    };

    grad_b = Eigen::VectorXd::Zero(b.size());
    for (Eigen::Index m = 0; m < b.size(); ++m) {
        ShapeCoeffs bp = b, bm = b;
        bp[m] += step;
        bm[m] -= step;
        grad_b[m] = (eval_at(bp, pose) - eval_at(bm, pose)) / (2.0 * step);
    }
    {
        Pose pp = pose, pm = pose;
        pp.theta += step;
        pm.theta -= step;
        grad_theta = (eval_at(b, pp) - eval_at(b, pm)) / (2.0 * step);
    }
    for (int axis = 0; axis < 2; ++axis) {
        Pose pp = pose, pm = pose;
        (axis == 0 ? pp.center.x : pp.center.y) += step;
        (axis == 0 ? pm.center.x : pm.center.y) -= step;
        const double g = (eval_at(b, pp) - eval_at(b, pm)) / (2.0 * step);
        (axis == 0 ? grad_center.x : grad_center.y) = g;
    }
}

// ---------------------------------------------------------------------------
// Total loss
// ---------------------------------------------------------------------------

namespace {

void add_scaled(std::vector<double>& acc, const std::vector<double>& g,
                double scale, size_t size) {
    if (acc.empty()) acc.assign(size, 0.0);
    for (size_t i = 0; i < size; ++i) acc[i] += scale * g[i];
}

}  // namespace

LossReport total_loss(const TotalLossInputs& in, const LossWeights& w) {
    w.require_valid();
    LossReport rep;
    const bool want = in.want_gradients;

    const bool need_chain = w.gamma_p > 0.0 || w.gamma_cc > 0.0 || w.gamma_co > 0.0;
    std::optional<LandmarkChain> chain;
    if (need_chain) {
        if (!in.model || !in.b_p || !in.pose_p)
            throw ConfigurationError("total_loss: landmark-dependent term enabled "
                                     "without model/b_p/pose_p");
        chain.emplace(*in.model, *in.b_p, *in.pose_p);
        rep.grads.b = Eigen::VectorXd::Zero(in.b_p->size());
    }

    if (w.gamma_b > 0.0) {
        if (!in.b_t || !in.b_p)
            throw ConfigurationError("total_loss: L_b enabled without b_t/b_p");
        Eigen::VectorXd g;
        const double v = loss_b(*in.b_t, *in.b_p, want ? &g : nullptr);
        rep.terms["L_b"] = v;
        rep.total += w.gamma_b * v;
        if (want) {
            if (rep.grads.b.size() == 0) rep.grads.b = Eigen::VectorXd::Zero(g.size());
            rep.grads.b += w.gamma_b * g;
        }
    }

    if (w.gamma_phi > 0.0) {
        if (!in.pose_t || !in.pose_p)
            throw ConfigurationError("total_loss: L_phi enabled without poses");
        double gt = 0.0;
        Point gc;
        const double v = loss_pose(*in.pose_t, *in.pose_p, w.mu_phi,
                                   want ? &gt : nullptr, want ? &gc : nullptr);
        rep.terms["L_phi"] = v;
        rep.total += w.gamma_phi * v;
        if (want) {
            rep.grads.theta += w.gamma_phi * gt;
            rep.grads.center = rep.grads.center + gc * w.gamma_phi;
            rep.grads.has_pose = true;
        }
    }

    if (w.gamma_p > 0.0) {
        if (!in.p_t)
            throw ConfigurationError("total_loss: L_p enabled without p_t");
        std::vector<Point> g;
        const double v =
            loss_landmarks(*in.p_t, chain->landmarks(), want ? &g : nullptr);
        rep.terms["L_p"] = v;
        rep.total += w.gamma_p * v;
        if (want) {
            chain->pullback(g, rep.grads.b, rep.grads.theta, rep.grads.center,
                            w.gamma_p);
            rep.grads.has_pose = true;
        }
    }

    if (w.gamma_D > 0.0) {
        if (!in.d_t || !in.d_p)
            throw ConfigurationError("total_loss: L_D enabled without D_t/D_p");
        std::vector<double> g;
        const double v =
            loss_d(*in.d_t, *in.d_p, w.mu_D, w.alpha, want ? &g : nullptr);
        rep.terms["L_D"] = v;
        rep.total += w.gamma_D * v;
        if (want) add_scaled(rep.grads.d, g, w.gamma_D, in.d_p->values.size());
    }

    if (w.gamma_cc > 0.0) {
        if (!in.d_p)
            throw ConfigurationError("total_loss: L_Cc enabled without D_p");
        std::vector<Point> gp;
        std::vector<double> gd;
        const double v = loss_cc(*in.d_p, chain->landmarks(),
                                 want ? &gp : nullptr, want ? &gd : nullptr);
        rep.terms["L_Cc"] = v;
        rep.total += w.gamma_cc * v;
        if (want) {
            chain->pullback(gp, rep.grads.b, rep.grads.theta, rep.grads.center,
                            w.gamma_cc);
            rep.grads.has_pose = true;
            add_scaled(rep.grads.d, gd, w.gamma_cc, in.d_p->values.size());
        }
    }

    if (w.gamma_co > 0.0) {
        if (!in.d_p)
            throw ConfigurationError("total_loss: L_Co enabled without D_p");
        std::optional<CoContext> local;
        const CoContext* ctx = in.co_context;
        if (!ctx) {
            local.emplace(*in.model, in.d_p->spec(), w.alpha);
            ctx = &*local;
        }
        std::vector<double> gd;
        const double v = ctx->eval(*in.d_p, chain->landmarks(),
                                   in.pose_p->center, want ? &gd : nullptr);
        rep.terms["L_Co"] = v;
        rep.total += w.gamma_co * v;
        if (want) {
            add_scaled(rep.grads.d, gd, w.gamma_co, in.d_p->values.size());
            Eigen::VectorXd gb;
            double gt = 0.0;
            Point gc;
            loss_co_grad_bphi(*ctx, *in.d_p, *in.model, *in.b_p, *in.pose_p,
                              in.co_fd_step, gb, gt, gc);
            rep.grads.b += w.gamma_co * gb;
            rep.grads.theta += w.gamma_co * gt;
            rep.grads.center = rep.grads.center + gc * w.gamma_co;
            rep.grads.has_pose = true;
        }
    }

    return rep;
}

}  // namespace myoshape::losses
