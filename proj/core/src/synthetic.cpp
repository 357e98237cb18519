#include "volfit/synthetic.hpp"

#include "volfit/errors.hpp"
#include "volfit/pricing.hpp"
#include "volfit/textio.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <random>

namespace volfit {

namespace {

constexpr std::complex<double> kI{0.0, 1.0};

/// log(1 + z), series-expanded near zero where the direct form loses digits.
std::complex<double> clog1p(std::complex<double> z) {
    if (std::abs(z) < 1e-4) return z * (1.0 - z * (0.5 - z * (1.0 / 3.0 - 0.25 * z)));
    return std::log(1.0 + z);
}

} // namespace

void BatesParams::validate() const {
    const bool finite = std::isfinite(v0) && std::isfinite(theta) && std::isfinite(kappa) &&
                        std::isfinite(sigma_v) && std::isfinite(rho) && std::isfinite(lambda_j) &&
                        std::isfinite(beta_j) && std::isfinite(alpha_j) && std::isfinite(r) &&
                        std::isfinite(delta);
    const bool ok = finite && v0 > 0.0 && theta > 0.0 && kappa > 0.0 && sigma_v > 0.0 &&
                    rho > -1.0 && rho < 1.0 && lambda_j >= 0.0 && beta_j > -1.0 && alpha_j >= 0.0;
    if (!ok) throw InvalidInput("bates params violate their invariants");
}

std::complex<double> bates_cf(std::complex<double> u, double tau, const BatesParams& params) {
    if (!(tau > 0.0)) throw InvalidInput("bates_cf: tau must be positive");
    const std::complex<double> iu = kI * u;
    const double s2 = params.sigma_v * params.sigma_v;

    const std::complex<double> beta0 = params.kappa - kI * params.rho * params.sigma_v * u;
    const std::complex<double> xi = iu + u * u;
    const std::complex<double> d = std::sqrt(beta0 * beta0 + s2 * xi);
    // beta0 - d evaluated without the cancellation the direct difference suffers.
    const std::complex<double> bmd = -s2 * xi / (beta0 + d);
    const std::complex<double> g2 = bmd / (beta0 + d);
    const std::complex<double> emdt = std::exp(-d * tau);
    const std::complex<double> log_term = clog1p(g2 * (1.0 - emdt) / (1.0 - g2));
    const std::complex<double> cc = params.kappa * params.theta / s2 * (bmd * tau - 2.0 * log_term);
    const std::complex<double> dd = bmd / s2 * (1.0 - emdt) / (1.0 - g2 * emdt);

    const double a2 = params.alpha_j * params.alpha_j;
    const double m_j = std::log1p(params.beta_j) - 0.5 * a2;
    const std::complex<double> one_jump = std::exp(iu * m_j - 0.5 * a2 * u * u);
    const std::complex<double> jumps =
        params.lambda_j * tau * (one_jump - 1.0) - iu * params.lambda_j * params.beta_j * tau;

    return std::exp(iu * (params.r - params.delta) * tau + cc + dd * params.v0 + jumps);
}

void FftConfig::validate() const {
    if (!(damping > 0.0)) throw InvalidInput("fft config: damping must be positive");
    if (grid_size < 64) throw InvalidInput("fft config: grid too small");
    if (!(freq_step > 0.0)) throw InvalidInput("fft config: frequency step must be positive");
}

FftCallPrices fft_call_prices(const BatesParams& params, double tau, double spot,
                              std::span<const double> strikes, const FftConfig& config) {
    params.validate();
    config.validate();
    if (!(tau > 0.0)) throw InvalidInput("fft_call_prices: tau must be positive");
    if (!(spot > 0.0)) throw InvalidInput("fft_call_prices: spot must be positive");
    for (const double strike : strikes)
        if (!(strike > 0.0)) throw InvalidInput("fft_call_prices: strikes must be positive");

    const int n = config.grid_size;
    const double a = config.damping;
    const double eta = config.freq_step;
    const double dk = 2.0 * std::numbers::pi / (n * eta);
    const double s0 = std::log(spot);
    const double k0 = s0 - 0.5 * n * dk;
    const double df_r = std::exp(-params.r * tau);
    const double df_d = std::exp(-params.delta * tau);
    const double forward = spot * std::exp((params.r - params.delta) * tau);

    std::vector<std::complex<double>> damped(n);
    for (int j = 0; j < n; ++j) {
        const double v = eta * j;
        const std::complex<double> z(v, -(a + 1.0));
        const std::complex<double> phi = std::exp(kI * z * s0) * bates_cf(z, tau, params);
        const std::complex<double> denom(a * a + a - v * v, (2.0 * a + 1.0) * v);
        const double w = (j == 0 ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0)) * eta / 3.0;
        damped[j] = df_r * phi / denom * w * std::exp(-kI * (v * k0));
    }

    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> transformed(n);
    fft.fwd(transformed, damped);

    std::vector<double> grid_calls(n);
    for (int u = 0; u < n; ++u) {
        const double k_u = k0 + dk * u;
        grid_calls[u] = std::exp(-a * k_u) / std::numbers::pi * transformed[u].real();
    }

    const double floor_px = 1e-14 * spot;
    FftCallPrices out;
    out.prices.assign(strikes.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t q = 0; q < strikes.size(); ++q) {
        const double kq = std::log(strikes[q]);
        const int left = static_cast<int>(std::floor((kq - k0) / dk));
        if (left < 1 || left + 2 >= n) {
            ++out.n_flagged;
            continue;
        }
        // Interpolate log prices of the out-of-the-money side: calls above
        // the forward, puts (via parity) below it.
        const bool otm_call = strikes[q] >= forward;
        std::array<double, 4> xs{};
        std::array<double, 4> ys{};
        bool usable = true;
        for (int m = 0; m < 4; ++m) {
            const int idx = left - 1 + m;
            const double kk = k0 + dk * idx;
            double px = grid_calls[idx];
            if (!otm_call) px += std::exp(kk) * df_r - spot * df_d;
            if (!std::isfinite(px) || px < floor_px) {
                usable = false;
                break;
            }
            xs[m] = kk;
            ys[m] = std::log(px);
        }
        if (!usable) {
            ++out.n_flagged;
            continue;
        }
        double interp = 0.0;
        for (int m = 0; m < 4; ++m) {
            double term = ys[m];
            for (int l = 0; l < 4; ++l)
                if (l != m) term *= (kq - xs[l]) / (xs[m] - xs[l]);
            interp += term;
        }
        double price = std::exp(interp);
        if (!otm_call) price += spot * df_d - strikes[q] * df_r;

        const double lower = std::max(0.0, spot * df_d - strikes[q] * df_r);
        const double upper = spot * df_d;
        const double slack = 1e-10 * spot;
        if (!std::isfinite(price) || price < lower - slack || price > upper + slack) {
            ++out.n_flagged;
            continue;
        }
        out.prices[q] = price;
    }
    return out;
}

const std::vector<double>& dataset_moneyness() {
    static const std::vector<double> values{0.3,   0.4,  0.6, 0.8, 0.9, 0.95, 0.975, 1.0, 1.025,
                                            1.05, 1.1, 1.2, 1.3, 1.5, 1.75, 2.0,   2.5, 3.0};
    return values;
}

const std::vector<double>& dataset_maturities() {
    static const std::vector<double> values = [] {
        std::vector<double> taus;
        for (const double weeks : {0.5, 1.0, 2.0, 3.0}) taus.push_back(weeks / 52.0);
        for (int months = 1; months <= 12; ++months) taus.push_back(months / 12.0);
        taus.push_back(18.0 / 12.0);
        taus.push_back(24.0 / 12.0);
        return taus;
    }();
    return values;
}

SyntheticDataset generate_dataset(const BatesParams& params) {
    params.validate();
    SyntheticDataset out;
    const std::vector<double>& moneyness = dataset_moneyness();
    const double carry = params.r - params.delta;
    for (const double tau : dataset_maturities()) {
        const FftCallPrices priced = fft_call_prices(params, tau, 1.0, moneyness);
        for (std::size_t i = 0; i < moneyness.size(); ++i) {
            const double strike = moneyness[i];
            const double k = std::log(strike) - carry * tau;
            const auto skip = [&](const std::string& why) {
                out.warnings.push_back("skipped K/S=" + format_double(strike) +
                                       " tau=" + format_double(tau) + ": " + why);
            };
            const double call = priced.prices[i];
            if (!std::isfinite(call)) {
                skip("unstable price");
                continue;
            }
            const bool is_call = k >= 0.0;
            const double price =
                is_call ? call
                        : call + strike * std::exp(-params.r * tau) - std::exp(-params.delta * tau);
            try {
                Quote quote;
                quote.k = k;
                quote.tau = tau;
                quote.iv = implied_vol(price, 1.0, params.r, params.delta, strike, tau, is_call);
                out.quotes.push_back(quote);
            } catch (const std::exception& e) {
                skip(e.what());
            }
        }
    }
    return out;
}

SyntheticDataset perturb(const SyntheticDataset& data, double eta_noise, std::uint64_t seed) {
    if (!(eta_noise >= 0.0)) throw InvalidInput("perturb: eta_noise must be non-negative");
    SyntheticDataset out = data;
    if (eta_noise == 0.0) return out;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, eta_noise);
    for (Quote& q : out.quotes) q.iv *= std::exp(noise(rng));
    return out;
}

double vega_weighted_rmse(std::span<const double> model_prices, const std::vector<Quote>& quotes,
                          int* n_skipped) {
    if (model_prices.size() != quotes.size())
        throw InvalidInput("vega_weighted_rmse: one model price per quote required");
    if (quotes.empty()) throw InvalidInput("vega_weighted_rmse: no quotes");
    double acc = 0.0;
    int used = 0;
    int skipped = 0;
    for (std::size_t j = 0; j < quotes.size(); ++j) {
        const Quote& q = quotes[j];
        const double strike = std::exp(q.k);
        const double market = q.k >= 0.0 ? bs_call_price(1.0, q.iv, 0.0, 0.0, strike, q.tau)
                                         : bs_put_price(1.0, q.iv, 0.0, 0.0, strike, q.tau);
        const double nu = vega(1.0, q.iv, 0.0, 0.0, strike, q.tau);
        if (!(nu >= 1e-12)) {
            ++skipped;
            continue;
        }
        const double err = (market - model_prices[j]) / nu;
        acc += err * err;
        ++used;
    }
    if (n_skipped != nullptr) *n_skipped = skipped;
    if (used == 0) throw InvalidInput("vega_weighted_rmse: every quote was vega-skipped");
    return std::sqrt(acc / static_cast<double>(used));
}

namespace {

std::array<double, 8> to_unconstrained(const BatesParams& p) {
    const auto safe_log = [](double x) { return std::log(std::max(x, 1e-12)); };
    return {safe_log(p.v0),
            safe_log(p.theta),
            safe_log(p.kappa),
            safe_log(p.sigma_v),
            std::atanh(std::clamp(p.rho, -0.999999, 0.999999)),
            safe_log(p.lambda_j),
            std::log1p(std::max(p.beta_j, -1.0 + 1e-12)),
            safe_log(p.alpha_j)};
}

/// Pricing for calibration happens on the unit forward (quotes are already
/// in forward coordinates), so the carry is held at zero.
BatesParams from_unconstrained(const std::array<double, 8>& x) {
    BatesParams p;
    p.v0 = std::exp(x[0]);
    p.theta = std::exp(x[1]);
    p.kappa = std::exp(x[2]);
    p.sigma_v = std::exp(x[3]);
    p.rho = std::tanh(x[4]);
    p.lambda_j = std::exp(x[5]);
    p.beta_j = std::expm1(x[6]);
    p.alpha_j = std::exp(x[7]);
    p.r = 0.0;
    p.delta = 0.0;
    return p;
}

} // namespace

CalibrationResult calibrate_bates(const std::vector<Quote>& quotes, const BatesParams& initial) {
    if (quotes.empty()) throw InvalidInput("calibrate_bates: no quotes");
    initial.validate();

    std::map<double, std::vector<std::size_t>> slices;
    for (std::size_t j = 0; j < quotes.size(); ++j) slices[quotes[j].tau].push_back(j);

    const auto objective = [&](const std::array<double, 8>& x) {
        const BatesParams p = from_unconstrained(x);
        std::vector<double> model(quotes.size(), 0.0);
        for (const auto& [tau, idx] : slices) {
            std::vector<double> strikes;
            strikes.reserve(idx.size());
            for (const std::size_t j : idx) strikes.push_back(std::exp(quotes[j].k));
            const FftCallPrices priced = fft_call_prices(p, tau, 1.0, strikes);
            for (std::size_t m = 0; m < idx.size(); ++m) {
                const double px = priced.prices[m];
                // A price below the transform noise floor enters as zero (its
                // lower bound), so deep-wing instability degrades the fit
                // smoothly instead of failing the whole objective.
                const double otm = !std::isfinite(px)          ? 0.0
                                   : quotes[idx[m]].k < 0.0 ? px + strikes[m] - 1.0
                                                               : px;
                model[idx[m]] = otm;
            }
        }
        return vega_weighted_rmse(model, quotes);
    };

    constexpr int kDim = 8;
    constexpr int kMaxIters = 2000;
    constexpr double kSpreadTol = 1e-10;
    constexpr double kLossFloor = 1e-8;

    std::array<std::array<double, kDim>, kDim + 1> simplex;
    std::array<double, kDim + 1> fvals;
    simplex[0] = to_unconstrained(initial);
    for (int i = 0; i < kDim; ++i) {
        simplex[i + 1] = simplex[0];
        simplex[i + 1][i] += 0.05;
    }
    for (int i = 0; i <= kDim; ++i) fvals[i] = objective(simplex[i]);

    int iters = 0;
    bool converged = false;
    std::array<int, kDim + 1> order{};
    for (; iters < kMaxIters; ++iters) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) { return fvals[a] < fvals[b]; });
        const int best = order[0];
        const int worst = order[kDim];
        const int second = order[kDim - 1];
        if (fvals[worst] - fvals[best] < kSpreadTol || fvals[best] < kLossFloor) {
            converged = true;
            break;
        }

        std::array<double, kDim> centroid{};
        for (int i = 0; i <= kDim; ++i) {
            if (i == worst) continue;
            for (int c = 0; c < kDim; ++c) centroid[c] += simplex[i][c] / kDim;
        }
        const auto along = [&](double t) {
            std::array<double, kDim> x;
            for (int c = 0; c < kDim; ++c)
                x[c] = centroid[c] + t * (centroid[c] - simplex[worst][c]);
            return x;
        };

        const std::array<double, kDim> xr = along(1.0);
        const double fr = objective(xr);
        if (fr < fvals[best]) {
            const std::array<double, kDim> xe = along(2.0);
            const double fe = objective(xe);
            if (fe < fr) {
                simplex[worst] = xe;
                fvals[worst] = fe;
            } else {
                simplex[worst] = xr;
                fvals[worst] = fr;
            }
        } else if (fr < fvals[second]) {
            simplex[worst] = xr;
            fvals[worst] = fr;
        } else {
            const bool outside = fr < fvals[worst];
            const std::array<double, kDim> xc = along(outside ? 0.5 : -0.5);
            const double fc = objective(xc);
            if (fc < (outside ? fr : fvals[worst])) {
                simplex[worst] = xc;
                fvals[worst] = fc;
            } else {
                for (int i = 0; i <= kDim; ++i) {
                    if (i == best) continue;
                    for (int c = 0; c < kDim; ++c)
                        simplex[i][c] = simplex[best][c] + 0.5 * (simplex[i][c] - simplex[best][c]);
                    fvals[i] = objective(simplex[i]);
                }
            }
        }
    }

    int best_idx = 0;
    for (int i = 1; i <= kDim; ++i)
        if (fvals[i] < fvals[best_idx]) best_idx = i;

    CalibrationResult result;
    result.params = from_unconstrained(simplex[best_idx]);
    result.params.r = initial.r;
    result.params.delta = initial.delta;
    result.loss = fvals[best_idx];
    result.converged = converged;
    result.iterations = iters;
    return result;
}

} // namespace volfit
