#ifndef MYOSHAPE_GEOMETRY_HPP
#define MYOSHAPE_GEOMETRY_HPP

#include <vector>

#include <myoshape/types.hpp>

namespace myoshape::geometry {

/// Pose normalization: s = R(theta) * (p - c) with
/// R = [[cos, sin], [-sin, cos]].
LandmarkSet pose_normalize(const LandmarkSet& p, const Pose& pose);
Point pose_normalize_point(const Point& p, const Pose& pose);

/// Exact inverse of pose_normalize: p = R(theta)^T * s + c.
LandmarkSet pose_denormalize(const LandmarkSet& s, const Pose& pose);
Point pose_denormalize_point(const Point& s, const Pose& pose);

/// Orientation of the bisector of the rays lv_center->rv_a and
/// lv_center->rv_b, on the side of the smaller enclosed angle, wrapped to
/// (-pi, pi]. Anti-parallel rays have no preferred side and raise
/// AmbiguityError.
double orientation_from_rv(const Point& lv_center, const Point& rv_a,
                           const Point& rv_b);

/// Closed periodic cubic spline through one landmark ring, chord-length
/// parameterized. Evaluation is exact at the knots.
class PeriodicSpline {
public:
    explicit PeriodicSpline(const std::vector<Point>& ring);

    /// Evaluates at a global parameter t in [0, total_length); wraps outside.
    Point evaluate(double t) const;
    /// Evaluates on segment `seg` at local fraction u in [0, 1].
    Point evaluate_segment(int seg, double u) const;

    double total_length() const { return total_; }
    int n_knots() const { return static_cast<int>(knots_.size()); }

private:
    std::vector<Point> knots_;
    std::vector<double> t_;       // knot parameters, t_[0] = 0
    std::vector<Point> second_;   // second derivatives at knots
    double total_ = 0.0;
};

/// Spline-interpolated closed contour through one ring, resampled to
/// n_points. Samples are distributed per spline segment so every landmark is
/// itself an output vertex.
Contour spline_contour(const std::vector<Point>& ring, int n_points = 360);

/// Intersects rays from `center` at angles theta + 2*pi*i/n with a closed
/// contour. Each ray must cross exactly once (star-shaped with respect to
/// center); otherwise NonStarShapedError.
std::vector<Point> resample_equiangular(const Contour& contour,
                                        const Point& center, double theta,
                                        int n);

/// Even-odd (crossing number) point-in-polygon test on a closed polyline.
bool point_in_polygon(const Point& pt, const std::vector<Point>& poly);

/// Signed shoelace area of a closed polyline (positive for counterclockwise
/// in the x-right/y-up sense).
double polygon_area(const std::vector<Point>& poly);

/// True when no two non-adjacent segments of the closed polyline intersect.
bool polyline_is_simple(const std::vector<Point>& poly);

/// Exact Euclidean distance from a point to a closed polyline.
double distance_to_polyline(const Point& pt, const std::vector<Point>& poly);

}  // namespace myoshape::geometry

#endif  // MYOSHAPE_GEOMETRY_HPP
