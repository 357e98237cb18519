#include "volfit/net.hpp"

#include <cmath>
#include <random>

#include "volfit/errors.hpp"

namespace volfit {

std::vector<int> MlpParams::widths() const {
    std::vector<int> out;
    if (weights.empty()) return out;
    out.push_back(static_cast<int>(weights.front().cols()));
    for (const auto& w : weights) out.push_back(static_cast<int>(w.rows()));
    return out;
}

long MlpParams::parameter_count() const {
    long n = 1; // log_alpha
    for (const auto& w : weights) n += w.size();
    for (const auto& b : biases) n += b.size();
    return n;
}

MlpParams init_params(const std::vector<int>& hidden_widths, std::uint64_t seed) {
    for (int w : hidden_widths)
        if (w < 1) throw InvalidInput("hidden layer width must be positive");

    std::vector<int> widths;
    widths.push_back(2);
    widths.insert(widths.end(), hidden_widths.begin(), hidden_widths.end());
    widths.push_back(1);

    std::mt19937_64 rng(seed);
    MlpParams params;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const int fan_in = widths[l];
        const int fan_out = widths[l + 1];
        std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(fan_in + fan_out)));
        Eigen::MatrixXd w(fan_out, fan_in);
        for (int r = 0; r < fan_out; ++r)
            for (int c = 0; c < fan_in; ++c) w(r, c) = dist(rng);
        Eigen::VectorXd b(fan_out);
        for (int r = 0; r < fan_out; ++r) b(r) = dist(rng);
        params.weights.push_back(std::move(w));
        params.biases.push_back(std::move(b));
    }
    params.log_alpha = 0.0;
    return params;
}

void zero_output_layer(MlpParams& params) {
    if (params.weights.empty()) throw InvalidInput("network has no layers");
    params.weights.back().setZero();
    params.biases.back().setZero();
    params.log_alpha = 0.0;
}

} // namespace volfit
