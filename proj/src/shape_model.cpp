#include <myoshape/shape_model.hpp>

#include <cmath>

namespace myoshape {

Eigen::VectorXd landmarks_to_vector(const LandmarkSet& p) {
    Eigen::VectorXd v(2 * p.size());
    for (int i = 0; i < p.size(); ++i) {
        v[2 * i] = p.pts[i].x;
        v[2 * i + 1] = p.pts[i].y;
    }
    return v;
}

LandmarkSet vector_to_landmarks(const Eigen::VectorXd& v, int n_endo) {
    if (v.size() % 2 != 0)
        throw InvalidInputError("vector_to_landmarks: odd coordinate count");
    LandmarkSet out;
    out.n_endo = n_endo;
    out.pts.resize(v.size() / 2);
    for (int i = 0; i < static_cast<int>(out.pts.size()); ++i)
        out.pts[i] = {v[2 * i], v[2 * i + 1]};
    return out;
}

namespace shape_model {

ShapeModel build_model(const std::vector<LandmarkSet>& shapes,
                       double pixel_size_mm) {
    const int n = static_cast<int>(shapes.size());
    if (n < 2)
        throw InvalidInputError("build_model: need at least 2 shapes");
    const int dim = 2 * shapes[0].size();
    const int n_endo = shapes[0].n_endo;
    for (const auto& s : shapes) {
        s.require_valid("build_model");
        if (2 * s.size() != dim || s.n_endo != n_endo)
            throw InvalidInputError("build_model: inconsistent landmark counts");
    }

    Eigen::MatrixXd data(n, dim);
    for (int i = 0; i < n; ++i) data.row(i) = landmarks_to_vector(shapes[i]);

    ShapeModel model;
    model.n_endo = n_endo;
    model.pixel_size_mm = pixel_size_mm;
    model.mean = data.colwise().mean();

    // SVD of the centered data matrix instead of forming the covariance;
    // eigenvalues of cov = squared singular values / (n-1).
    Eigen::MatrixXd centered = data.rowwise() - model.mean.transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered,
                                          Eigen::ComputeThinU | Eigen::ComputeThinV);
    const int k = static_cast<int>(svd.singularValues().size());
    model.eigenvalues.resize(k);
    model.eigenvectors.resize(dim, k);
    for (int m = 0; m < k; ++m) {
        const double sv = svd.singularValues()[m];
        model.eigenvalues[m] = sv * sv / (n - 1);
        Eigen::VectorXd v = svd.matrixV().col(m);
        int imax = 0;
        v.cwiseAbs().maxCoeff(&imax);
        if (v[imax] < 0.0) v = -v;
        model.eigenvectors.col(m) = v;
    }
    return model;
}

LandmarkSet reconstruct(const ShapeModel& model, const ShapeCoeffs& b) {
    const int m = static_cast<int>(b.size());
    if (m > model.n_modes())
        throw InvalidInputError("reconstruct: more coefficients than model modes");
    Eigen::VectorXd s = model.mean;
    for (int j = 0; j < m; ++j)
        s += b[j] * std::sqrt(model.eigenvalues[j]) * model.eigenvectors.col(j);
    return vector_to_landmarks(s, model.n_endo);
}

ShapeCoeffs project(const ShapeModel& model, const LandmarkSet& s, int m_modes) {
    if (m_modes > model.n_modes())
        throw InvalidInputError("project: more modes requested than model has");
    if (2 * s.size() != model.dim())
        throw InvalidInputError("project: landmark count mismatch with model");
    const double cutoff =
        model.n_modes() > 0 ? ShapeModel::kRankCutoffRel * model.eigenvalues[0] : 0.0;
    const Eigen::VectorXd d = landmarks_to_vector(s) - model.mean;
    ShapeCoeffs b(m_modes);
    for (int j = 0; j < m_modes; ++j) {
        if (model.eigenvalues[j] <= cutoff)
            throw RankError("project: eigenvalue " + std::to_string(j + 1) +
                            " is numerically zero");
        b[j] = model.eigenvectors.col(j).dot(d) / std::sqrt(model.eigenvalues[j]);
    }
    return b;
}

double explained_variance(const ShapeModel& model, int m_modes) {
    if (m_modes > model.n_modes())
        throw InvalidInputError("explained_variance: M exceeds mode count");
    const double total = model.eigenvalues.sum();
    if (total <= 0.0)
        throw UndefinedVarianceError("explained_variance: all eigenvalues zero");
    return model.eigenvalues.head(m_modes).sum() / total;
}

std::pair<ShapeCoeffs, Pose> augment(const ShapeModel& model,
                                     const ShapeCoeffs& b, const Pose& pose,
                                     Rng& rng, const AugmentRanges& ranges) {
    if (ranges.db < 0.0 || ranges.dc_mm < 0.0 || ranges.dtheta_rad < 0.0)
        throw InvalidInputError("augment: negative range");
    ShapeCoeffs b_aug = b;
    for (int j = 0; j < b_aug.size(); ++j)
        b_aug[j] += rng.uniform(-ranges.db, ranges.db);
    const double dc_px = ranges.dc_mm / model.pixel_size_mm;
    Pose pose_aug = pose;
    pose_aug.center.x += rng.uniform(-dc_px, dc_px);
    pose_aug.center.y += rng.uniform(-dc_px, dc_px);
    pose_aug.theta = wrap_angle(pose_aug.theta +
                                rng.uniform(-ranges.dtheta_rad, ranges.dtheta_rad));
    return {b_aug, pose_aug};
}

}  // namespace shape_model
}  // namespace myoshape
