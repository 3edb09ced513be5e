#ifndef MYOSHAPE_TYPES_HPP
#define MYOSHAPE_TYPES_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include <myoshape/errors.hpp>

namespace myoshape {

struct Point {
    double x = 0.0;
    double y = 0.0;

    Point() = default;
    Point(double x_, double y_) : x(x_), y(y_) {}

    Point operator+(const Point& o) const { return {x + o.x, y + o.y}; }
    Point operator-(const Point& o) const { return {x - o.x, y - o.y}; }
    Point operator*(double s) const { return {x * s, y * s}; }
    Point operator/(double s) const { return {x / s, y / s}; }

    double dot(const Point& o) const { return x * o.x + y * o.y; }
    /// z-component of the 2D cross product.
    double cross(const Point& o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }
    double squaredNorm() const { return x * x + y * y; }
    bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

inline Point operator*(double s, const Point& p) { return p * s; }

/// Wraps an angle into (-pi, pi]. House convention for every theta in the
/// library.
inline double wrap_angle(double a) {
    constexpr double two_pi = 2.0 * M_PI;
    a = std::fmod(a, two_pi);
    if (a <= -M_PI) a += two_pi;
    if (a > M_PI) a -= two_pi;
    return a;
}

/// Ordered endo+epi landmark rings in pixel units. Indices 0..n_endo-1 are
/// endocardial, n_endo..2*n_endo-1 epicardial, both counterclockwise at
/// uniform angular offsets starting at the reference orientation; endo index
/// i is angularly matched to epi index i.
struct LandmarkSet {
    std::vector<Point> pts;
    int n_endo = 0;

    LandmarkSet() = default;
    LandmarkSet(std::vector<Point> p, int ne) : pts(std::move(p)), n_endo(ne) {}

    int size() const { return static_cast<int>(pts.size()); }
    int n_epi() const { return size() - n_endo; }

    std::vector<Point> endo_ring() const {
        return {pts.begin(), pts.begin() + n_endo};
    }
    std::vector<Point> epi_ring() const {
        return {pts.begin() + n_endo, pts.end()};
    }

    Point centroid() const {
        Point c;
        for (const auto& p : pts) c = c + p;
        return c / static_cast<double>(pts.size());
    }

    bool finite() const {
        for (const auto& p : pts)
            if (!p.finite()) return false;
        return true;
    }

    void require_valid(const char* what) const {
        if (pts.empty() || n_endo <= 0 || n_endo > size())
            throw InvalidInputError(std::string(what) + ": malformed landmark set");
        if (!finite())
            throw InvalidInputError(std::string(what) + ": non-finite landmark coordinates");
    }
};

/// Cardiac pose: anatomical orientation theta in (-pi, pi] and LV center in
/// pixel units.
struct Pose {
    double theta = 0.0;
    Point center;

    Pose() = default;
    Pose(double t, Point c) : theta(t), center(c) {}

    bool finite() const { return std::isfinite(theta) && center.finite(); }

    void require_valid(const char* what) const {
        if (!finite())
            throw InvalidInputError(std::string(what) + ": non-finite pose");
    }
};

/// Closed polyline in pixel units. Points do not repeat the seam vertex; the
/// closing segment pts.back() -> pts.front() is implied by `closed`.
struct Contour {
    std::vector<Point> pts;
    bool closed = true;

    int size() const { return static_cast<int>(pts.size()); }
};

}  // namespace myoshape

#endif  // MYOSHAPE_TYPES_HPP
