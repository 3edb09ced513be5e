#ifndef MYOSHAPE_METRICS_HPP
#define MYOSHAPE_METRICS_HPP

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <myoshape/raster.hpp>
#include <myoshape/shape_model.hpp>
#include <myoshape/types.hpp>

namespace myoshape::metrics {

enum class ShapeFlag { Empty, NoCavity, OpenMyocardium, MultiComponent };

std::string shape_flag_name(ShapeFlag f);

using ShapeFlags = std::set<ShapeFlag>;

/// Dice similarity coefficient 2|a n b| / (|a| + |b|); two empty masks give 1.
double dsc(const BinaryMask& a, const BinaryMask& b);

/// Mean boundary error (symmetric mean of the two directed nearest-neighbor
/// means) and Hausdorff distance (max of the two directed maxima), on
/// boundary pixels (foreground pixels 4-adjacent to background), in pixels.
std::pair<double, double> boundary_distances(const BinaryMask& a,
                                             const BinaryMask& b);

/// Boundary pixel set of a mask: foreground pixels 4-adjacent to background
/// (the image border counts as background).
std::vector<Point> boundary_pixels(const BinaryMask& m);

/// Contour-based variant of boundary_distances: (MBE, HD) between two closed
/// polylines, measured point-to-polyline in both directions at the given
/// sampling density. An alternative convention to the mask-boundary one, not
/// interchangeable with it.
std::pair<double, double> contour_boundary_distances(
    const std::vector<Point>& a, const std::vector<Point>& b,
    int samples_per_segment = 4);

/// Unrealistic-shape classifier. Foreground components are 8-connected,
/// background 4-connected. A missing cavity is probed again after one 3x3
/// morphological closing pass: if closing creates an enclosed cavity the
/// wall has a gap (open myocardium), otherwise there is no cavity at all.
ShapeFlags classify_shape(const BinaryMask& m);

/// (|c_t - c_p| in pixels, |wrapped theta difference| in degrees).
std::pair<double, double> pose_errors(const Pose& truth, const Pose& pred);

/// Mean Euclidean landmark distance between p_t and the landmarks
/// reconstructed from b_p under the ground-truth pose.
double shape_landmark_error(const ShapeModel& model, const ShapeCoeffs& b_p,
                            const Pose& truth_pose, const LandmarkSet& p_t);

/// Paired rank permutation test: cases are ranked within each pair (ties
/// share rank 1.5), the observed statistic is |mean rank difference|, and
/// the p-value is the frequency of permuted statistics >= observed under
/// random per-case swaps. Deterministic given seed.
double bootstrap_rank_test(const std::vector<double>& metric_a,
                           const std::vector<double>& metric_b, int n_perm,
                           std::uint64_t seed);

}  // namespace myoshape::metrics

#endif  // MYOSHAPE_METRICS_HPP
