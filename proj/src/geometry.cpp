#include <myoshape/geometry.hpp>

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace myoshape::geometry {

Point pose_normalize_point(const Point& p, const Pose& pose) {
    const double c = std::cos(pose.theta), s = std::sin(pose.theta);
    const double dx = p.x - pose.center.x, dy = p.y - pose.center.y;
    return {c * dx + s * dy, -s * dx + c * dy};
}

Point pose_denormalize_point(const Point& s, const Pose& pose) {
    const double c = std::cos(pose.theta), sn = std::sin(pose.theta);
    return {c * s.x - sn * s.y + pose.center.x,
            sn * s.x + c * s.y + pose.center.y};
}

LandmarkSet pose_normalize(const LandmarkSet& p, const Pose& pose) {
    p.require_valid("pose_normalize");
    pose.require_valid("pose_normalize");
    LandmarkSet out;
    out.n_endo = p.n_endo;
    out.pts.reserve(p.pts.size());
    for (const auto& q : p.pts) out.pts.push_back(pose_normalize_point(q, pose));
    return out;
}

LandmarkSet pose_denormalize(const LandmarkSet& s, const Pose& pose) {
    s.require_valid("pose_denormalize");
    pose.require_valid("pose_denormalize");
    LandmarkSet out;
    out.n_endo = s.n_endo;
    out.pts.reserve(s.pts.size());
    for (const auto& q : s.pts) out.pts.push_back(pose_denormalize_point(q, pose));
    return out;
}

double orientation_from_rv(const Point& lv_center, const Point& rv_a,
                           const Point& rv_b) {
    if (!lv_center.finite() || !rv_a.finite() || !rv_b.finite())
        throw InvalidInputError("orientation_from_rv: non-finite input");
    const Point da = rv_a - lv_center;
    const Point db = rv_b - lv_center;
    if (da.norm() == 0.0 || db.norm() == 0.0)
        throw InvalidInputError("orientation_from_rv: zero-length ray");
    const double ta = std::atan2(da.y, da.x);
    const double tb = std::atan2(db.y, db.x);
    // Midpoint on the side of the smaller enclosed angle: half the wrapped
    // difference, |diff| <= pi.
    const double diff = wrap_angle(tb - ta);
    if (std::abs(std::abs(diff) - M_PI) < 1e-12)
        throw AmbiguityError("orientation_from_rv: anti-parallel rays");
    return wrap_angle(ta + 0.5 * diff);
}

// ---------------------------------------------------------------------------
// Periodic cubic spline
// ---------------------------------------------------------------------------

PeriodicSpline::PeriodicSpline(const std::vector<Point>& ring) {
    const int n = static_cast<int>(ring.size());
    if (n < 4)
        throw InvalidInputError("PeriodicSpline: need at least 4 landmarks on a ring");
    for (const auto& p : ring)
        if (!p.finite())
            throw InvalidInputError("PeriodicSpline: non-finite landmark");

    knots_ = ring;
    t_.resize(n + 1);
    t_[0] = 0.0;
    for (int i = 0; i < n; ++i) {
        const Point& a = ring[i];
        const Point& b = ring[(i + 1) % n];
        const double h = (b - a).norm();
        if (h == 0.0)
            throw InvalidInputError("PeriodicSpline: duplicate consecutive landmarks");
        t_[i + 1] = t_[i] + h;
    }
    total_ = t_[n];

    // Periodic C2 conditions give a cyclic tridiagonal system in the second
    // derivatives; n is small so a dense solve is fine.
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, 2);
    for (int i = 0; i < n; ++i) {
        const int im = (i - 1 + n) % n;
        const int ip = (i + 1) % n;
        const double hm = (i == 0) ? (t_[n] - t_[n - 1]) : (t_[i] - t_[i - 1]);
        const double hi = t_[i + 1] - t_[i];
        A(i, im) += hm / 6.0;
        A(i, i) += (hm + hi) / 3.0;
        A(i, ip) += hi / 6.0;
        const Point d1 = (knots_[ip] - knots_[i]) / hi;
        const Point d0 = (knots_[i] - knots_[im]) / hm;
        rhs(i, 0) = d1.x - d0.x;
        rhs(i, 1) = d1.y - d0.y;
    }
    Eigen::MatrixXd m = A.partialPivLu().solve(rhs);
    second_.resize(n);
    for (int i = 0; i < n; ++i) second_[i] = {m(i, 0), m(i, 1)};
}

Point PeriodicSpline::evaluate_segment(int seg, double u) const {
    const int n = static_cast<int>(knots_.size());
    seg = ((seg % n) + n) % n;
    const int nxt = (seg + 1) % n;
    const double h = t_[seg + 1] - t_[seg];
    const double a = 1.0 - u, b = u;
    const double cA = (a * a * a - a) * h * h / 6.0;
    const double cB = (b * b * b - b) * h * h / 6.0;
    return {a * knots_[seg].x + b * knots_[nxt].x + cA * second_[seg].x + cB * second_[nxt].x,
            a * knots_[seg].y + b * knots_[nxt].y + cA * second_[seg].y + cB * second_[nxt].y};
}

Point PeriodicSpline::evaluate(double t) const {
    const int n = static_cast<int>(knots_.size());
    t = std::fmod(t, total_);
    if (t < 0) t += total_;
    int seg = static_cast<int>(std::upper_bound(t_.begin(), t_.end(), t) - t_.begin()) - 1;
    seg = std::clamp(seg, 0, n - 1);
    const double h = t_[seg + 1] - t_[seg];
    return evaluate_segment(seg, (t - t_[seg]) / h);
}

Contour spline_contour(const std::vector<Point>& ring, int n_points) {
    const int n = static_cast<int>(ring.size());
    if (n < 4)
        throw InvalidInputError("spline_contour: need at least 4 landmarks");
    if (n_points < n)
        throw InvalidInputError("spline_contour: point count below landmark count");
    PeriodicSpline sp(ring);

    Contour out;
    out.closed = true;
    out.pts.reserve(n_points);
    // Distribute samples per segment so that each segment starts exactly at
    // its landmark.
    for (int seg = 0; seg < n; ++seg) {
        const int begin = (seg * n_points) / n;
        const int end = ((seg + 1) * n_points) / n;
        const int cnt = end - begin;
        for (int k = 0; k < cnt; ++k)
            out.pts.push_back(sp.evaluate_segment(seg, static_cast<double>(k) / cnt));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Polyline utilities
// ---------------------------------------------------------------------------

bool point_in_polygon(const Point& pt, const std::vector<Point>& poly) {
    const int n = static_cast<int>(poly.size());
    bool inside = false;
    for (int i = 0, j = n - 1; i < n; j = i++) {
        const Point& a = poly[j];
        const Point& b = poly[i];
        if ((b.y > pt.y) != (a.y > pt.y)) {
            const double x_cross = b.x + (pt.y - b.y) * (a.x - b.x) / (a.y - b.y);
            if (pt.x < x_cross) inside = !inside;
        }
    }
    return inside;
}

double polygon_area(const std::vector<Point>& poly) {
    const int n = static_cast<int>(poly.size());
    double acc = 0.0;
    for (int i = 0, j = n - 1; i < n; j = i++)
        acc += poly[j].cross(poly[i]);
    return 0.5 * acc;
}

namespace {

bool segments_intersect(const Point& a, const Point& b, const Point& c,
                        const Point& d) {
    const auto orient = [](const Point& p, const Point& q, const Point& r) {
        return (q - p).cross(r - p);
    };
    const double o1 = orient(a, b, c);
    const double o2 = orient(a, b, d);
    const double o3 = orient(c, d, a);
    const double o4 = orient(c, d, b);
    return ((o1 > 0) != (o2 > 0)) && ((o3 > 0) != (o4 > 0));
}

}  // namespace

bool polyline_is_simple(const std::vector<Point>& poly) {
    const int n = static_cast<int>(poly.size());
    for (int i = 0; i < n; ++i) {
        const Point& a = poly[i];
        const Point& b = poly[(i + 1) % n];
        for (int j = i + 1; j < n; ++j) {
            // Skip adjacent segments (they share a vertex).
            if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
            if (segments_intersect(a, b, poly[j], poly[(j + 1) % n]))
                return false;
        }
    }
    return true;
}

double distance_to_polyline(const Point& pt, const std::vector<Point>& poly) {
    const int n = static_cast<int>(poly.size());
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0, j = n - 1; i < n; j = i++) {
        const Point& a = poly[j];
        const Point& b = poly[i];
        const Point ab = b - a;
        const double len2 = ab.squaredNorm();
        double t = len2 > 0.0 ? (pt - a).dot(ab) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        const Point proj = a + ab * t;
        best = std::min(best, (pt - proj).norm());
    }
    return best;
}

// ---------------------------------------------------------------------------
// Equiangular resampling
// ---------------------------------------------------------------------------

std::vector<Point> resample_equiangular(const Contour& contour,
                                        const Point& center, double theta,
                                        int n) {
    if (contour.size() < 3)
        throw InvalidInputError("resample_equiangular: contour too small");
    if (n < 1)
        throw InvalidInputError("resample_equiangular: nonpositive sample count");

    const auto& poly = contour.pts;
    const int m = static_cast<int>(poly.size());
    std::vector<Point> out;
    out.reserve(n);

    for (int i = 0; i < n; ++i) {
        const double ang = theta + 2.0 * M_PI * i / n;
        const Point dir{std::cos(ang), std::sin(ang)};
        // Collect ray-segment crossings as distances along the ray.
        std::vector<double> hits;
        for (int j = 0; j < m; ++j) {
            const Point& a = poly[j];
            const Point& b = poly[(j + 1) % m];
            const Point ab = b - a;
            const double denom = dir.cross(ab);
            if (denom == 0.0) continue;  // parallel
            const Point ac = a - center;
            const double t = ac.cross(ab) / denom;   // along ray
            const double u = ac.cross(dir) / denom;  // along segment
            // Slightly widened segment range; a hit exactly on a shared
            // vertex is then reported by both segments and merged below.
            if (t > 1e-12 && u >= -1e-9 && u <= 1.0 + 1e-9) hits.push_back(t);
        }
        std::sort(hits.begin(), hits.end());
        // Merge numerically coincident hits (vertex grazes).
        std::vector<double> merged;
        for (double h : hits) {
            if (merged.empty() || h - merged.back() > 1e-9) merged.push_back(h);
        }
        if (merged.size() != 1)
            throw NonStarShapedError(
                "resample_equiangular: ray at angle index " + std::to_string(i) +
                " has " + std::to_string(merged.size()) + " crossings");
        out.push_back(center + dir * merged[0]);
    }
    return out;
}

}  // namespace myoshape::geometry
