#ifndef MYOSHAPE_FIT_HPP
#define MYOSHAPE_FIT_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <myoshape/losses.hpp>
#include <myoshape/shape_model.hpp>

namespace myoshape::fit {

enum class InitPolicy { MeanShape, Provided, RandomWithinModel };

/// First-order fit configuration. Step sizes follow the synthetic-suite
/// tuning: 0.05 for pose (pixels/radians), 0.02 for shape coefficients.
struct FitConfig {
    losses::LossWeights weights;
    int n_modes = 12;
    int max_iters = 2000;
    double lr_pose = 0.05;
    double lr_b = 0.02;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double tol = 1e-8;          // on |delta total|
    int tol_patience = 20;      // consecutive iterations under tol
    InitPolicy init = InitPolicy::MeanShape;
    ShapeCoeffs init_b;         // used by InitPolicy::Provided
    Pose init_pose;             // used by InitPolicy::Provided
    std::optional<Pose> pose_prior;  // L_phi target for map fits
    bool optimize_theta = true;
    double co_fd_step = 1e-4;
    std::uint64_t seed = 0;     // used by InitPolicy::RandomWithinModel

    void require_valid() const;
};

struct IterRecord {
    double total = 0.0;
    std::map<std::string, double> terms;
};

struct FitResult {
    ShapeCoeffs b;
    Pose pose;
    std::vector<IterRecord> trace;
    bool converged = false;
    int iterations = 0;
};

/// Raised when the objective turns non-finite; carries the partial result.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& msg, FitResult partial)
        : Error(ErrorKind::Numerical, "divergence", msg),
          partial_(std::move(partial)) {}
    const FitResult& partial() const { return partial_; }

private:
    FitResult partial_;
};

/// Adaptive-moment first-order optimizer state.
struct AdamState {
    Eigen::VectorXd m;
    Eigen::VectorXd v;
    long step_count = 0;
};

/// Standard adaptive-moment update with bias correction; per-component
/// learning rates. Deterministic.
void optimizer_step(AdamState& state, Eigen::VectorXd& params,
                    const Eigen::VectorXd& grads, const Eigen::VectorXd& lr,
                    double beta1, double beta2, double eps);

/// Closed-form rotation aligning the model mean to p about center c;
/// used to seed theta for landmark fits.
double procrustes_theta(const ShapeModel& model, const LandmarkSet& p,
                        const Point& c);

/// Minimizes L_p over (b, Phi).
FitResult fit_to_landmarks(const LandmarkSet& p_t, const ShapeModel& model,
                           const FitConfig& cfg);

/// Minimizes gamma_cc L_Cc + gamma_co L_Co (+ gamma_phi pose prior) over
/// (b, Phi), with d_t fixed as the map output.
FitResult fit_to_distance_map(const ScalarGrid& d_t, const ShapeModel& model,
                              const FitConfig& cfg);

}  // namespace myoshape::fit

#endif  // MYOSHAPE_FIT_HPP
