#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace volfit {

/// Feedforward network mapping (k, tau) to a positive multiplicative
/// correction. Hidden layers use SoftPlus; the output layer produces
/// alpha * (1 + tanh(z)), which lies in (0, 2*alpha).
struct MlpParams {
    /// weights[l] has shape (widths[l+1] x widths[l]); widths[0] == 2 and
    /// widths.back() == 1.
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
    /// Stored in log space so the positivity constraint is unconditional.
    double log_alpha = 0.0;

    double alpha() const { return std::exp(log_alpha); }

    /// Layer widths including input (2) and output (1).
    std::vector<int> widths() const;

    /// Total number of trainable scalars, including log_alpha.
    long parameter_count() const;
};

/// Draws every weight and bias of layer i from N(0, 1/sqrt(n_{i-1} + n_i))
/// and sets alpha = 1. Deterministic in the seed.
MlpParams init_params(const std::vector<int>& hidden_widths, std::uint64_t seed);

/// Zeroes the output layer (weights and bias) and resets alpha to 1, so the
/// network evaluates to exactly 1 everywhere and the surface starts at the
/// prior.
void zero_output_layer(MlpParams& params);

} // namespace volfit
