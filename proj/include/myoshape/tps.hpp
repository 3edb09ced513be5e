#ifndef MYOSHAPE_TPS_HPP
#define MYOSHAPE_TPS_HPP

#include <vector>

#include <Eigen/Dense>

#include <myoshape/raster.hpp>
#include <myoshape/types.hpp>

namespace myoshape {

/// 2D thin-plate spline with kernel U(r) = r^2 log r (U(0) = 0).
/// f(q) = a0 + a1 qx + a2 qy + sum_i w_i U(|q - src_i|), per output
/// coordinate. Weights satisfy sum w = sum w x = sum w y = 0.
class TpsTransform {
public:
    Point apply(const Point& q) const;

    const std::vector<Point>& source() const { return src_; }
    const Eigen::MatrixXd& affine() const { return affine_; }   // 3 x 2
    const Eigen::MatrixXd& weights() const { return weights_; } // n x 2
    double lambda() const { return lambda_; }

    static double kernel(double r) { return r > 0.0 ? r * r * std::log(r) : 0.0; }

private:
    friend class TpsSolver;
    friend TpsTransform tps_fit(const std::vector<Point>&,
                                const std::vector<Point>&, double);
    std::vector<Point> src_;
    Eigen::MatrixXd affine_{3, 2};
    Eigen::MatrixXd weights_;
    double lambda_ = 0.0;
};

/// Fits the TPS mapping src -> dst. With lambda_tps = 0 the transform
/// interpolates every control point.
TpsTransform tps_fit(const std::vector<Point>& src,
                     const std::vector<Point>& dst, double lambda_tps = 0.0);

/// Backward warp: each output pixel samples `grid` bilinearly at t(pixel).
/// Out-of-bounds samples take the boundary-clamped value.
ScalarGrid tps_warp_grid(const ScalarGrid& grid, const TpsTransform& t,
                         const GridSpec& out_spec);

/// a = mean_i |mean_shape_i| / mean_i |p_i - c_p|; the distance-map scale
/// correction applied before soft binarization of a warped map.
double scale_factor(const LandmarkSet& mean_shape, const LandmarkSet& p_p,
                    const Point& c_p);

/// Precomputed solve against a fixed source configuration: the system matrix
/// depends only on src, so repeated fits to new destinations reduce to a
/// factored solve, and per-pixel sampling positions become a dense product
/// with precomputed basis rows.
class TpsSolver {
public:
    TpsSolver(const std::vector<Point>& src, double lambda_tps = 0.0);

    TpsTransform solve(const std::vector<Point>& dst) const;

    /// Basis row [U(q, src_1..n), 1, qx, qy] * A^{-1} for an arbitrary query;
    /// sampling position is then basis . [dst; 0; 0; 0] per coordinate.
    Eigen::RowVectorXd basis_row(const Point& q) const;

    int n_points() const { return static_cast<int>(src_.size()); }

private:
    std::vector<Point> src_;
    double lambda_;
    Eigen::FullPivLU<Eigen::MatrixXd> lu_;
    Eigen::MatrixXd inv_;  // A^{-1}, (n+3) x (n+3)
};

}  // namespace myoshape

#endif  // MYOSHAPE_TPS_HPP
