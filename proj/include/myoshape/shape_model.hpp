#ifndef MYOSHAPE_SHAPE_MODEL_HPP
#define MYOSHAPE_SHAPE_MODEL_HPP

#include <vector>

#include <Eigen/Dense>

#include <myoshape/rng.hpp>
#include <myoshape/types.hpp>

namespace myoshape {

/// Standardized PCA mode weights; unit variance over the training set.
using ShapeCoeffs = Eigen::VectorXd;

/// PCA model over pose-normalized landmark shapes. Coordinates are flattened
/// as (x0, y0, x1, y1, ...) in pixel units. Immutable after construction.
struct ShapeModel {
    Eigen::VectorXd mean;          // 2N
    Eigen::MatrixXd eigenvectors;  // 2N x K, orthonormal columns
    Eigen::VectorXd eigenvalues;   // K, descending, >= 0
    int n_endo = 0;
    double pixel_size_mm = 2.0;

    int dim() const { return static_cast<int>(mean.size()); }
    int n_landmarks() const { return dim() / 2; }
    int n_modes() const { return static_cast<int>(eigenvalues.size()); }

    /// Eigenvalues below cutoff_rel * lambda_1 are treated as rank-deficient
    /// for projection.
    static constexpr double kRankCutoffRel = 1e-12;
};

Eigen::VectorXd landmarks_to_vector(const LandmarkSet& p);
LandmarkSet vector_to_landmarks(const Eigen::VectorXd& v, int n_endo);

namespace shape_model {

/// PCA of pose-normalized shapes: mean, eigenpairs of the sample covariance
/// (1/(n-1) normalization) via SVD of the centered data matrix. Eigenvector
/// sign is fixed so the largest-magnitude entry is positive.
ShapeModel build_model(const std::vector<LandmarkSet>& shapes,
                       double pixel_size_mm = 2.0);

/// s = mean + sum_m b_m * sqrt(lambda_m) * v_m.
LandmarkSet reconstruct(const ShapeModel& model, const ShapeCoeffs& b);

/// b_m = v_m . (s - mean) / sqrt(lambda_m) for the first M modes.
ShapeCoeffs project(const ShapeModel& model, const LandmarkSet& s, int m_modes);

/// Fraction of total variance captured by the first M modes.
double explained_variance(const ShapeModel& model, int m_modes);

/// Uniform offsets for model-guided augmentation; all bounds inclusive of
/// sign, i.e. db ~ U(-db, +db).
struct AugmentRanges {
    double db = 1.0;
    double dc_mm = 40.0;
    double dtheta_rad = M_PI / 2.0;
};

/// Adds independent U(-db, db) per mode, U(-dc, dc) mm per position axis
/// (converted to pixels via the model pixel size) and U(-dt, dt) rad to
/// theta. Deterministic given the generator state.
std::pair<ShapeCoeffs, Pose> augment(const ShapeModel& model,
                                     const ShapeCoeffs& b, const Pose& pose,
                                     Rng& rng, const AugmentRanges& ranges);

}  // namespace shape_model

}  // namespace myoshape

#endif  // MYOSHAPE_SHAPE_MODEL_HPP
