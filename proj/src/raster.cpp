#include <myoshape/raster.hpp>

#include <algorithm>
#include <cmath>

#include <myoshape/geometry.hpp>

namespace myoshape {

std::string grid_role_name(GridRole role) {
    switch (role) {
        case GridRole::DistanceMap: return "distance_map";
        case GridRole::SoftMask: return "soft_mask";
        case GridRole::Generic: return "generic";
    }
    return "generic";
}

GridRole grid_role_from_name(const std::string& name) {
    if (name == "distance_map") return GridRole::DistanceMap;
    if (name == "soft_mask") return GridRole::SoftMask;
    if (name == "generic") return GridRole::Generic;
    throw InvalidInputError("unknown grid role: " + name);
}

BilinearSample bilinear_sample(const ScalarGrid& g, const Point& p) {
    BilinearSample s;
    const double xmax = g.width - 1.0;
    const double ymax = g.height - 1.0;
    const bool clamped_x = p.x < 0.0 || p.x > xmax;
    const bool clamped_y = p.y < 0.0 || p.y > ymax;
    const double x = std::clamp(p.x, 0.0, xmax);
    const double y = std::clamp(p.y, 0.0, ymax);

    int ix = static_cast<int>(std::floor(x));
    int iy = static_cast<int>(std::floor(y));
    ix = std::min(ix, g.width - 2);
    iy = std::min(iy, g.height - 2);
    const double fx = x - ix;
    const double fy = y - iy;

    const double v00 = g.at(ix, iy);
    const double v10 = g.at(ix + 1, iy);
    const double v01 = g.at(ix, iy + 1);
    const double v11 = g.at(ix + 1, iy + 1);

    s.value = (1 - fx) * (1 - fy) * v00 + fx * (1 - fy) * v10 +
              (1 - fx) * fy * v01 + fx * fy * v11;
    s.ddx = clamped_x ? 0.0 : (1 - fy) * (v10 - v00) + fy * (v11 - v01);
    s.ddy = clamped_y ? 0.0 : (1 - fx) * (v01 - v00) + fx * (v11 - v10);

    s.idx[0] = iy * g.width + ix;
    s.idx[1] = iy * g.width + ix + 1;
    s.idx[2] = (iy + 1) * g.width + ix;
    s.idx[3] = (iy + 1) * g.width + ix + 1;
    s.w[0] = (1 - fx) * (1 - fy);
    s.w[1] = fx * (1 - fy);
    s.w[2] = (1 - fx) * fy;
    s.w[3] = fx * fy;
    return s;
}

namespace raster {

double soft_value(double d, double alpha) {
    const double x = -alpha * d;
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

ScalarGrid distance_map(const Contour& endo, const Contour& epi,
                        const GridSpec& spec) {
    if (endo.size() < 3 || epi.size() < 3)
        throw InvalidInputError("distance_map: contour too small");
    for (const auto& p : endo.pts)
        if (!geometry::point_in_polygon(p, epi.pts))
            throw TopologyError("distance_map: endo is not strictly inside epi");

    ScalarGrid d(spec, GridRole::DistanceMap);
    for (int y = 0; y < spec.height; ++y) {
        for (int x = 0; x < spec.width; ++x) {
            const Point p{static_cast<double>(x), static_cast<double>(y)};
            const double de = geometry::distance_to_polyline(p, endo.pts);
            const double dp = geometry::distance_to_polyline(p, epi.pts);
            const double dist = std::min(de, dp);
            const bool in_myo = geometry::point_in_polygon(p, epi.pts) &&
                                !geometry::point_in_polygon(p, endo.pts);
            d.at(x, y) = in_myo ? -dist : dist;
        }
    }
    return d;
}

ScalarGrid soft_mask(const ScalarGrid& d, double alpha) {
    if (alpha <= 0.0)
        throw InvalidInputError("soft_mask: alpha must be positive");
    if (d.role != GridRole::DistanceMap)
        throw InvalidInputError("soft_mask: input must be a distance map");
    ScalarGrid s = d;
    s.role = GridRole::SoftMask;
    for (auto& v : s.values) v = soft_value(v, alpha);
    return s;
}

BinaryMask binarize(const ScalarGrid& d) {
    if (d.role != GridRole::DistanceMap)
        throw InvalidInputError("binarize: input must be a distance map");
    BinaryMask m(d.width, d.height);
    for (size_t i = 0; i < d.values.size(); ++i) m.bits[i] = d.values[i] < 0.0;
    return m;
}

BinaryMask mask_from_landmarks(const LandmarkSet& p, const GridSpec& spec,
                               int spline_points) {
    p.require_valid("mask_from_landmarks");
    const Contour endo = geometry::spline_contour(p.endo_ring(), spline_points);
    const Contour epi = geometry::spline_contour(p.epi_ring(), spline_points);
    if (!geometry::polyline_is_simple(endo.pts) ||
        !geometry::polyline_is_simple(epi.pts))
        throw TopologyError("mask_from_landmarks: self-intersecting spline contour");

    BinaryMask m(spec.width, spec.height);
    for (int y = 0; y < spec.height; ++y) {
        for (int x = 0; x < spec.width; ++x) {
            const Point q{static_cast<double>(x), static_cast<double>(y)};
            const bool in_epi = geometry::point_in_polygon(q, epi.pts);
            if (!in_epi) continue;
            m.at(x, y) = !geometry::point_in_polygon(q, endo.pts);
        }
    }
    return m;
}

}  // namespace raster
}  // namespace myoshape
