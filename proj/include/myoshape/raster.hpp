#ifndef MYOSHAPE_RASTER_HPP
#define MYOSHAPE_RASTER_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <myoshape/types.hpp>

namespace myoshape {

enum class GridRole { DistanceMap, SoftMask, Generic };

std::string grid_role_name(GridRole role);
GridRole grid_role_from_name(const std::string& name);

/// Grid geometry. Pixel centers sit at integer coordinates; pixel (ix, iy)
/// covers [ix-0.5, ix+0.5) x [iy-0.5, iy+0.5). Landmark coordinates live in
/// the same frame.
struct GridSpec {
    int width = 128;
    int height = 128;
    double pixel_size_mm = 2.0;

    Point center() const { return {(width - 1) / 2.0, (height - 1) / 2.0}; }
    int pixel_count() const { return width * height; }
};

/// Row-major scalar field over a GridSpec with a semantic role tag.
struct ScalarGrid {
    int width = 0;
    int height = 0;
    double pixel_size_mm = 2.0;
    GridRole role = GridRole::Generic;
    std::vector<double> values;  // row-major, y * width + x

    ScalarGrid() = default;
    ScalarGrid(const GridSpec& spec, GridRole r, double fill = 0.0)
        : width(spec.width), height(spec.height),
          pixel_size_mm(spec.pixel_size_mm), role(r),
          values(static_cast<size_t>(spec.width) * spec.height, fill) {}

    double& at(int x, int y) { return values[static_cast<size_t>(y) * width + x]; }
    double at(int x, int y) const { return values[static_cast<size_t>(y) * width + x]; }
    int pixel_count() const { return width * height; }
    GridSpec spec() const { return {width, height, pixel_size_mm}; }

    bool same_dims(const ScalarGrid& o) const {
        return width == o.width && height == o.height;
    }
};

/// Row-major binary mask; 1 = foreground.
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    BinaryMask() = default;
    BinaryMask(int w, int h) : width(w), height(h),
        bits(static_cast<size_t>(w) * h, 0) {}

    std::uint8_t& at(int x, int y) { return bits[static_cast<size_t>(y) * width + x]; }
    std::uint8_t at(int x, int y) const { return bits[static_cast<size_t>(y) * width + x]; }
    bool same_dims(const BinaryMask& o) const {
        return width == o.width && height == o.height;
    }
    std::int64_t count() const {
        std::int64_t c = 0;
        for (auto b : bits) c += b != 0;
        return c;
    }
};

/// One bilinear sample of a grid, with enough structure for chain rules:
/// value, spatial derivative, and the four supporting pixels with their
/// weights. Out-of-range positions are clamped; a clamped axis has zero
/// spatial derivative.
struct BilinearSample {
    double value = 0.0;
    double ddx = 0.0;
    double ddy = 0.0;
    int idx[4] = {0, 0, 0, 0};
    double w[4] = {0, 0, 0, 0};
};

BilinearSample bilinear_sample(const ScalarGrid& g, const Point& p);

namespace raster {

/// Signed Euclidean distance to the nearer of the two myocardial boundaries:
/// negative between endo and epi (inside the myocardium), positive in the
/// cavity and exterior. Exact point-to-polyline distances.
ScalarGrid distance_map(const Contour& endo, const Contour& epi,
                        const GridSpec& spec);

/// S = e^(-alpha D) / (1 + e^(-alpha D)), elementwise.
ScalarGrid soft_mask(const ScalarGrid& d, double alpha);

/// Foreground where D < 0.
BinaryMask binarize(const ScalarGrid& d);

/// Binary myocardium mask from landmark rings: epi spline polygon filled
/// minus endo spline polygon, even-odd fill at pixel centers.
BinaryMask mask_from_landmarks(const LandmarkSet& p, const GridSpec& spec,
                               int spline_points = 360);

/// Stable logistic used by soft binarization: sigmoid(-alpha * d).
double soft_value(double d, double alpha);

}  // namespace raster

}  // namespace myoshape

#endif  // MYOSHAPE_RASTER_HPP
