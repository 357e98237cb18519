#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "volfit/quote.hpp"

namespace volfit {

/// Jump-diffusion dynamics: square-root stochastic variance plus lognormal
/// multiplicative jumps arriving at Poisson rate lambda_j. The jump drift
/// is compensated so the discounted forward stays a martingale.
struct BatesParams {
    double v0 = 0.01;       // initial variance
    double theta = 0.0625;  // long-run variance
    double kappa = 0.5;     // mean-reversion speed
    double sigma_v = 1.0;   // volatility of variance
    double rho = -0.75;     // Brownian correlation
    double lambda_j = 0.1;  // jump intensity per year
    double beta_j = -0.05;  // mean relative jump size, > -1
    double alpha_j = 0.15;  // std of log(1 + jump)
    double r = 0.0;
    double delta = 0.0;

    /// Throws InvalidInput when a positivity/range invariant fails.
    void validate() const;

    /// The parameter set used to generate the reference synthetic dataset.
    static BatesParams defaults() { return {}; }
};

/// Characteristic function of the log return log(S_tau / S_0):
/// stable-branch square-root-diffusion part times the compensated
/// lognormal-jump factor. bates_cf(0) = 1 and bates_cf(-i) = e^{(r-delta)tau}.
std::complex<double> bates_cf(std::complex<double> u, double tau, const BatesParams& params);

/// Damped-Fourier pricing grid controls.
struct FftConfig {
    double damping = 1.5;
    int grid_size = 4096;
    double freq_step = 0.25;

    void validate() const;
};

struct FftCallPrices {
    /// Call prices aligned with the requested strikes; NaN where the
    /// transform output violated static bounds or fell below the noise floor.
    std::vector<double> prices;
    int n_flagged = 0;
};

/// European call prices via the damped characteristic-function transform on
/// a log-strike grid, cubically interpolated (on log prices of the
/// out-of-the-money side) to the requested strikes.
FftCallPrices fft_call_prices(const BatesParams& params, double tau, double spot,
                              std::span<const double> strikes, const FftConfig& config = {});

struct SyntheticDataset {
    std::vector<Quote> quotes;
    /// One entry per skipped grid point (unstable price or failed inversion).
    std::vector<std::string> warnings;
};

/// The 18 strike-over-spot levels of the synthetic grid.
const std::vector<double>& dataset_moneyness();
/// The 18 maturities: half, one, two and three weeks, then 1..12, 18 and 24 months.
const std::vector<double>& dataset_maturities();

/// Prices the full moneyness-by-maturity grid and inverts the
/// out-of-the-money side to implied volatility. Unit spot.
SyntheticDataset generate_dataset(const BatesParams& params = BatesParams::defaults());

/// Multiplies every implied vol by e^eps with eps ~ N(0, eta_noise), seeded.
SyntheticDataset perturb(const SyntheticDataset& data, double eta_noise, std::uint64_t seed);

/// sqrt(mean(((pi - pi_hat) / vega)^2)) over the quotes, with market prices
/// and vegas derived from each quote's implied vol on the unit forward.
/// Points with vega below 1e-12 are skipped and counted.
double vega_weighted_rmse(std::span<const double> model_prices, const std::vector<Quote>& quotes,
                          int* n_skipped = nullptr);

struct CalibrationResult {
    BatesParams params;
    double loss = 0.0;
    bool converged = false;
    int iterations = 0;
};

/// Nelder-Mead minimization of vega_weighted_rmse over the eight dynamics
/// parameters, reparametrized so every iterate satisfies the invariants.
/// Non-convergence is reported through the flag with the best point found.
CalibrationResult calibrate_bates(const std::vector<Quote>& quotes, const BatesParams& initial);

} // namespace volfit
