#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "volfit/jet.hpp"
#include "volfit/model.hpp"

namespace volfit {

/// Gradient of a scalar objective with respect to every trainable parameter
/// of a SurfaceModel. Shapes mirror MlpParams.
struct ParamGrad {
    std::vector<Eigen::MatrixXd> d_weights;
    std::vector<Eigen::VectorXd> d_biases;
    double d_log_alpha = 0.0;
    double d_rho_raw = 0.0;
    double d_eta_raw = 0.0;
    double d_gamma_raw = 0.0;

    /// Allocates (if needed) to match the network shape and zeroes everything.
    void match_shape(const MlpParams& params);
    void set_zero();
};

/// Evaluates total-variance jets (value, d/dk, d/dtau, d2/dk2) for a fixed
/// batch of points, and back-propagates jet adjoints to parameter gradients.
///
/// All four jet components of every point travel through the network
/// together as column blocks [v | dk | dt | dkk] of one matrix per layer, so
/// each layer is a single matrix product in both directions.
///
/// The point set, the network shape, and the ATM anchor curve are fixed at
/// construction; weights, alpha, and prior parameters may change freely
/// between forward() calls.
class JetEngine {
public:
    JetEngine(const SurfaceModel& model, std::span<const double> k,
              std::span<const double> tau);

    std::size_t size() const { return n_; }

    /// Recomputes all jets from the model's current parameters.
    void forward(const SurfaceModel& model);

    /// Jets from the latest forward().
    Jet2 nn(std::size_t i) const;
    Jet2 prior(std::size_t i) const;
    Jet2 surface(std::size_t i) const;

    /// Adjoint seeding. Call zero_adjoints(), then accumulate seeds with the
    /// add_* calls, then run backward() once.
    void zero_adjoints();
    /// d(objective)/d(surface jet of point i).
    void add_surface_adjoint(std::size_t i, const Jet2& bar);
    /// d(objective)/d(network value at point i), bypassing the prior. Used by
    /// penalties on the network factor itself.
    void add_nn_value_adjoint(std::size_t i, double bar);

    /// Propagates the seeded adjoints through the product rule, the output
    /// stage, and every layer. Overwrites grad.
    void backward(const SurfaceModel& model, ParamGrad& grad);

private:
    void check_shape(const SurfaceModel& model) const;

    std::size_t n_ = 0;
    std::vector<int> widths_;
    Eigen::ArrayXd k_;
    Eigen::ArrayXd tau_;
    Eigen::ArrayXd w_atm_;
    Eigen::ArrayXd wp_atm_;

    using RowArray = Eigen::Array<double, 1, Eigen::Dynamic>;

    Eigen::MatrixXd in_;                 // 2 x 4N
    std::vector<Eigen::MatrixXd> pre_;   // affine outputs, widths[l+1] x 4N
    std::vector<Eigen::MatrixXd> post_;  // hidden activations
    std::vector<Eigen::MatrixXd> sig_;   // sigmoid(pre value block), widths[l+1] x N
    std::vector<Eigen::MatrixXd> bar_;   // adjoint scratch, shapes of post_
    RowArray t_out_;                     // tanh of output pre-activation value

    using Jets = Eigen::Matrix<double, 4, Eigen::Dynamic>;
    Jets nn_;
    Jets prior_;
    Jets surf_;
    Jets prior_d_rho_;
    Jets prior_d_eta_;
    Jets prior_d_gamma_;

    Jets surf_bar_;
    RowArray nn_value_bar_;
};

} // namespace volfit
