#include <myoshape/tps.hpp>

#include <cmath>

namespace myoshape {

namespace {

Eigen::MatrixXd tps_system(const std::vector<Point>& src, double lambda) {
    const int n = static_cast<int>(src.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + 3, n + 3);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j)
            a(i, j) = TpsTransform::kernel((src[i] - src[j]).norm());
        a(i, i) += lambda;
        a(i, n) = a(n, i) = 1.0;
        a(i, n + 1) = a(n + 1, i) = src[i].x;
        a(i, n + 2) = a(n + 2, i) = src[i].y;
    }
    return a;
}

void check_src(const std::vector<Point>& src) {
    const int n = static_cast<int>(src.size());
    if (n < 3)
        throw InvalidInputError("tps_fit: need at least 3 control points");
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if ((src[i] - src[j]).norm() < 1e-12)
                throw DegenerateConfigurationError("tps_fit: duplicate source points");
}

}  // namespace

Point TpsTransform::apply(const Point& q) const {
    const int n = static_cast<int>(src_.size());
    double x = affine_(0, 0) + affine_(1, 0) * q.x + affine_(2, 0) * q.y;
    double y = affine_(0, 1) + affine_(1, 1) * q.x + affine_(2, 1) * q.y;
    for (int i = 0; i < n; ++i) {
        const double u = kernel((q - src_[i]).norm());
        x += weights_(i, 0) * u;
        y += weights_(i, 1) * u;
    }
    return {x, y};
}

TpsSolver::TpsSolver(const std::vector<Point>& src, double lambda_tps)
    : src_(src), lambda_(lambda_tps) {
    check_src(src_);
    const Eigen::MatrixXd a = tps_system(src_, lambda_);
    lu_ = Eigen::FullPivLU<Eigen::MatrixXd>(a);
    // Collinear or duplicate sources make the bordered system singular.
    if (!lu_.isInvertible())
        throw DegenerateConfigurationError(
            "tps_fit: singular system (collinear or duplicate sources)");
    inv_ = lu_.inverse();
}

TpsTransform TpsSolver::solve(const std::vector<Point>& dst) const {
    const int n = n_points();
    if (static_cast<int>(dst.size()) != n)
        throw InvalidInputError("tps_fit: src/dst length mismatch");
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n + 3, 2);
    for (int i = 0; i < n; ++i) {
        rhs(i, 0) = dst[i].x;
        rhs(i, 1) = dst[i].y;
    }
    const Eigen::MatrixXd sol = lu_.solve(rhs);
    TpsTransform t;
    t.src_ = src_;
    t.lambda_ = lambda_;
    t.weights_ = sol.topRows(n);
    t.affine_ = sol.bottomRows(3);
    return t;
}

Eigen::RowVectorXd TpsSolver::basis_row(const Point& q) const {
    const int n = n_points();
    Eigen::RowVectorXd row(n + 3);
    for (int i = 0; i < n; ++i)
        row[i] = TpsTransform::kernel((q - src_[i]).norm());
    row[n] = 1.0;
    row[n + 1] = q.x;
    row[n + 2] = q.y;
    return row * inv_;
}

TpsTransform tps_fit(const std::vector<Point>& src,
                     const std::vector<Point>& dst, double lambda_tps) {
    if (src.size() != dst.size())
        throw InvalidInputError("tps_fit: src/dst length mismatch");
    return TpsSolver(src, lambda_tps).solve(dst);
}

ScalarGrid tps_warp_grid(const ScalarGrid& grid, const TpsTransform& t,
                         const GridSpec& out_spec) {
    ScalarGrid out(out_spec, grid.role);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x) {
            const Point q = t.apply({static_cast<double>(x), static_cast<double>(y)});
            out.at(x, y) = bilinear_sample(grid, q).value;
        }
    return out;
}

double scale_factor(const LandmarkSet& mean_shape, const LandmarkSet& p_p,
                    const Point& c_p) {
    if (mean_shape.pts.empty() || p_p.pts.empty())
        throw InvalidInputError("scale_factor: empty landmark set");
    double num = 0.0;
    for (const auto& s : mean_shape.pts) num += s.norm();
    num /= mean_shape.size();
    double den = 0.0;
    for (const auto& p : p_p.pts) den += (p - c_p).norm();
    den /= p_p.size();
    if (den <= 0.0)
        throw DegenerateConfigurationError("scale_factor: zero mean radius");
    return num / den;
}

}  // namespace myoshape
