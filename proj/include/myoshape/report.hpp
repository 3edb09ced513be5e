#ifndef MYOSHAPE_REPORT_HPP
#define MYOSHAPE_REPORT_HPP

#include <optional>
#include <string>

#include <myoshape/raster.hpp>
#include <myoshape/types.hpp>

namespace myoshape::report {

/// One case of the contour overlay figure: ground truth in red, the
/// shape/pose reconstruction in cyan, the map-derived boundary in yellow.
struct OverlayCase {
    std::string case_id;
    GridSpec spec;
    std::optional<LandmarkSet> truth;
    std::optional<LandmarkSet> contour;
    std::optional<BinaryMask> map_mask;
    std::optional<double> dsc;
};

/// Standalone SVG document for one case.
std::string overlay_svg(const OverlayCase& c);

}  // namespace myoshape::report

#endif  // MYOSHAPE_REPORT_HPP
