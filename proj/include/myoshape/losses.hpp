#ifndef MYOSHAPE_LOSSES_HPP
#define MYOSHAPE_LOSSES_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <myoshape/raster.hpp>
#include <myoshape/shape_model.hpp>
#include <myoshape/tps.hpp>
#include <myoshape/types.hpp>

namespace myoshape::losses {

struct LossWeights {
    double gamma_b = 1.0;
    double gamma_phi = 1.0;
    double gamma_p = 1.0;
    double gamma_D = 100.0;
    double gamma_cc = 1.0;
    double gamma_co = 10.0;
    double mu_phi = 1.0;
    double mu_D = 0.1;
    double alpha = 5.0;

    void require_valid() const;
};

/// Gradient accumulators for the parameter blocks a loss can reach. Blocks
/// that no enabled term touches stay empty/zero.
struct GradBlocks {
    Eigen::VectorXd b;           // size 0 when unused
    double theta = 0.0;
    Point center;
    std::vector<double> d;       // d(total)/d(D_p), empty when unused
    bool has_pose = false;
};

struct LossReport {
    double total = 0.0;
    std::map<std::string, double> terms;  // unweighted per-term values
    GradBlocks grads;                     // gradients of the weighted total
};

/// Landmarks p(b, pose) = pose_denormalize(reconstruct(model, b), pose) plus
/// the chain rule pulling a gradient w.r.t. landmark coordinates back onto
/// (b, theta, c).
class LandmarkChain {
public:
    LandmarkChain(const ShapeModel& model, const ShapeCoeffs& b, const Pose& pose);

    const LandmarkSet& landmarks() const { return landmarks_; }
    const LandmarkSet& normalized() const { return normalized_; }
    int n_modes() const { return static_cast<int>(n_modes_); }

    /// g is d(loss)/d(landmark coordinates); accumulates into the blocks.
    void pullback(const std::vector<Point>& g, Eigen::VectorXd& grad_b,
                  double& grad_theta, Point& grad_center, double scale = 1.0) const;

private:
    const ShapeModel* model_;
    LandmarkSet normalized_;
    LandmarkSet landmarks_;
    double cos_t_, sin_t_;
    Eigen::Index n_modes_;
};

/// L_b = (1/M) |b_t - b_p|^2.
double loss_b(const Eigen::VectorXd& b_t, const Eigen::VectorXd& b_p,
              Eigen::VectorXd* grad_bp = nullptr);

/// L_phi = -cos(theta_t - theta_p) + mu_phi * (1/2) |c_t - c_p|^2.
double loss_pose(const Pose& pose_t, const Pose& pose_p, double mu_phi,
                 double* grad_theta = nullptr, Point* grad_center = nullptr);

/// L_p = (1/N) sum_i |p_t,i - p_p,i|^2 over the N landmarks.
double loss_landmarks(const LandmarkSet& p_t, const LandmarkSet& p_p,
                      std::vector<Point>* grad_pp = nullptr);

/// Soft Dice loss 1 - 2 sum(a b) / (sum a + sum b) on soft masks. Two empty
/// masks give loss 1 with zero gradient.
double soft_dice(const ScalarGrid& a, const ScalarGrid& b,
                 std::vector<double>* grad_a = nullptr,
                 std::vector<double>* grad_b = nullptr);

/// L_D = soft_dice(S(D_t), S(D_p)) + mu_D * (1/X) |D_t - D_p|^2.
double loss_d(const ScalarGrid& d_t, const ScalarGrid& d_p, double mu_d,
              double alpha, std::vector<double>* grad_dp = nullptr);

/// L_Cc = (1/N) sum_i D_p(p_i)^2 with bilinear interpolation at landmark
/// positions; gradients to the landmark coordinates and to the supporting
/// grid values.
double loss_cc(const ScalarGrid& d_p, const LandmarkSet& p_p,
               std::vector<Point>* grad_pp = nullptr,
               std::vector<double>* grad_dp = nullptr);

/// Fixed machinery for L_Co evaluations against one model and grid frame:
/// mean-shape soft mask, TPS system for the fixed mean-frame sources and the
/// per-pixel sampling basis. Warp sample positions are linear in the moving
/// landmarks, so repeated evaluations avoid any per-call solve.
class CoContext {
public:
    CoContext(const ShapeModel& model, const GridSpec& spec, double alpha);

    /// Soft Dice between the mean-shape soft mask and the soft-binarized,
    /// scale-corrected warp of d_p into the mean-shape frame.
    double eval(const ScalarGrid& d_p, const LandmarkSet& p_p, const Point& c_p,
                std::vector<double>* grad_dp = nullptr) const;

    const ScalarGrid& mean_soft_mask() const { return s_bar_; }
    const LandmarkSet& mean_shape() const { return mean_shape_; }
    const LandmarkSet& mean_frame_landmarks() const { return mean_frame_; }
    const GridSpec& spec() const { return spec_; }
    double alpha() const { return alpha_; }

private:
    GridSpec spec_;
    double alpha_;
    LandmarkSet mean_shape_;   // pose-normalized mean, origin-centered
    LandmarkSet mean_frame_;   // mean shape placed at the grid center
    ScalarGrid s_bar_;
    Eigen::MatrixXd basis_;    // pixel_count x (2N+3) sampling basis
};

/// One-shot L_Co per the loss definition; builds a CoContext internally.
double loss_co(const ScalarGrid& d_p, const LandmarkSet& p_p,
               const ShapeModel& model, const Point& c_p, double alpha,
               std::vector<double>* grad_dp = nullptr);

/// Central finite-difference gradient of L_Co with respect to (b, theta, c);
/// the D gradient stays analytic, this block is documented as FD.
void loss_co_grad_bphi(const CoContext& ctx, const ScalarGrid& d_p,
                       const ShapeModel& model, const ShapeCoeffs& b,
                       const Pose& pose, double step, Eigen::VectorXd& grad_b,
                       double& grad_theta, Point& grad_center);

/// Inputs for the weighted total loss. Every term with a positive weight
/// must have its inputs present; terms with zero weight are skipped.
struct TotalLossInputs {
    const ShapeModel* model = nullptr;
    const Eigen::VectorXd* b_t = nullptr;
    const Eigen::VectorXd* b_p = nullptr;
    const Pose* pose_t = nullptr;
    const Pose* pose_p = nullptr;
    const LandmarkSet* p_t = nullptr;
    const ScalarGrid* d_t = nullptr;
    const ScalarGrid* d_p = nullptr;
    const CoContext* co_context = nullptr;  // optional cache for L_Co
    double co_fd_step = 1e-4;
    bool want_gradients = true;
};

LossReport total_loss(const TotalLossInputs& in, const LossWeights& w);

}  // namespace myoshape::losses

#endif  // MYOSHAPE_LOSSES_HPP
