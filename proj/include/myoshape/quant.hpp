#ifndef MYOSHAPE_QUANT_HPP
#define MYOSHAPE_QUANT_HPP

#include <array>
#include <vector>

#include <myoshape/raster.hpp>
#include <myoshape/types.hpp>

namespace myoshape::quant {

/// Clinical LV parameters, all in physical units. Six RWT segments and
/// three dimension groups; segment k covers landmark indices 3k..3k+2,
/// dimension group j covers endo diameter pairs (3j..3j+2, +9).
struct LVParams {
    double a_lv_mm2 = 0.0;
    double a_myo_mm2 = 0.0;
    std::array<double, 3> dim_lv_mm{};
    std::array<double, 6> rwt_mm{};
};

/// Landmark path: RWT from matched endo/epi pairs, Dim_LV from opposite
/// endo pairs, areas from the spline polygons (shoelace).
LVParams lv_params_from_landmarks(const LandmarkSet& p, double pixel_size_mm);

/// Map path: extracts endo (cavity-myocardium) and epi (myocardium-exterior)
/// boundaries, resamples both equiangularly about the cavity centroid
/// relative to theta, then applies the landmark-path arithmetic. The mask
/// must classify as realistic.
LVParams lv_params_from_mask(const BinaryMask& m, double theta,
                             double pixel_size_mm);

/// Subpixel boundary loops of a binary region at the 0.5 level between
/// pixel centers (marching squares). Loops are closed polylines.
std::vector<Contour> extract_boundaries(const BinaryMask& m);

/// Endo and epi contours of a realistic myocardium mask plus the cavity
/// centroid (exposed for the map quantification path and overlays).
struct MaskBoundaries {
    Contour endo;
    Contour epi;
    Point cavity_centroid;
};
MaskBoundaries myocardium_boundaries(const BinaryMask& m);

/// (mean absolute error, Pearson correlation coefficient).
std::pair<double, double> mae_and_correlation(const std::vector<double>& truth,
                                              const std::vector<double>& pred);

}  // namespace myoshape::quant

#endif  // MYOSHAPE_QUANT_HPP
