#include "volfit/pricing.hpp"

#include "volfit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace volfit {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

void require_finite_positive(double spot, double sigma, double strike, double tau) {
    if (!(std::isfinite(spot) && std::isfinite(sigma) && std::isfinite(strike) &&
          std::isfinite(tau))) {
        throw InvalidInput("non-finite pricing argument");
    }
    if (!(spot > 0.0)) throw InvalidInput("spot must be positive");
    if (!(strike >= 0.0)) throw InvalidInput("strike must be non-negative");
    if (!(sigma > 0.0)) throw InvalidInput("sigma must be positive");
    if (!(tau > 0.0)) throw InvalidInput("tau must be positive");
}

} // namespace

double norm_cdf(double x) {
    return 0.5 * std::erfc(-x * kInvSqrt2);
}

double norm_pdf(double x) {
    return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

double bs_call_price(double spot, double sigma, double r, double q, double strike, double tau) {
    require_finite_positive(spot, sigma, strike, tau);
    if (!(std::isfinite(r) && std::isfinite(q))) throw InvalidInput("non-finite rate");
    const double df_div = std::exp(-q * tau);
    const double df_rate = std::exp(-r * tau);
    if (strike == 0.0) return spot * df_div;
    const double vol_sqrt_t = sigma * std::sqrt(tau);
    const double d_plus =
        (std::log(spot / strike) + (r - q + 0.5 * sigma * sigma) * tau) / vol_sqrt_t;
    const double d_minus = d_plus - vol_sqrt_t;
    return spot * df_div * norm_cdf(d_plus) - strike * df_rate * norm_cdf(d_minus);
}

double bs_put_price(double spot, double sigma, double r, double q, double strike, double tau) {
    const double call = bs_call_price(spot, sigma, r, q, strike, tau);
    return call - spot * std::exp(-q * tau) + strike * std::exp(-r * tau);
}

double vega(double spot, double sigma, double r, double q, double strike, double tau) {
    require_finite_positive(spot, sigma, strike, tau);
    if (strike == 0.0) return 0.0;
    const double vol_sqrt_t = sigma * std::sqrt(tau);
    const double d_plus =
        (std::log(spot / strike) + (r - q + 0.5 * sigma * sigma) * tau) / vol_sqrt_t;
    return spot * std::exp(-q * tau) * norm_pdf(d_plus) * std::sqrt(tau);
}

double forward_log_moneyness(double strike, double spot, double r, double q, double tau) {
    if (!(strike > 0.0) || !(spot > 0.0)) throw InvalidInput("strike and spot must be positive");
    if (!(std::isfinite(strike) && std::isfinite(spot) && std::isfinite(r) && std::isfinite(q) &&
          std::isfinite(tau))) {
        throw InvalidInput("non-finite argument");
    }
    return std::log(strike / spot) - (r - q) * tau;
}

double implied_vol(double price, double spot, double r, double q, double strike, double tau,
                   bool is_call) {
    if (!(std::isfinite(price) && std::isfinite(spot) && std::isfinite(strike) &&
          std::isfinite(tau) && std::isfinite(r) && std::isfinite(q))) {
        throw InvalidInput("non-finite argument");
    }
    if (!(spot > 0.0 && strike > 0.0 && tau > 0.0)) {
        throw InvalidInput("spot, strike and tau must be positive");
    }

    const double fwd_leg = spot * std::exp(-q * tau);
    const double strike_leg = strike * std::exp(-r * tau);
    const double lower = is_call ? std::max(fwd_leg - strike_leg, 0.0)
                                 : std::max(strike_leg - fwd_leg, 0.0);
    const double upper = is_call ? fwd_leg : strike_leg;
    if (!(price > lower && price < upper)) {
        throw PriceOutOfBounds("option price outside attainable range");
    }

    const auto value = [&](double sigma) {
        return is_call ? bs_call_price(spot, sigma, r, q, strike, tau)
                       : bs_put_price(spot, sigma, r, q, strike, tau);
    };

    double lo = 1e-4;
    double hi = 5.0;
    double f_lo = value(lo) - price;
    double f_hi = value(hi) - price;
    if (f_hi < 0.0) {
        hi = 10.0;
        f_hi = value(hi) - price;
        if (f_hi < 0.0) throw NoConvergence("implied vol above bracket limit 10.0");
    }
    if (f_lo > 0.0) {
        // Price is valid but corresponds to a vol below the lower bracket.
        if (std::fabs(f_lo) <= 1e-10 * spot) return lo;
        throw NoConvergence("implied vol below bracket limit 1e-4");
    }

    // Brent's method, absolute tolerance 1e-10 on sigma.
    const double tol = 1e-10;
    const int max_iter = 200;
    double a = lo, b = hi, c = hi;
    double fa = f_lo, fb = f_hi, fc = f_hi;
    double d = 0.0, e = 0.0;
    for (int iter = 0; iter < max_iter; ++iter) {
        if ((fb > 0.0 && fc > 0.0) || (fb < 0.0 && fc < 0.0)) {
            c = a;
            fc = fa;
            e = d = b - a;
        }
        if (std::fabs(fc) < std::fabs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        const double tol1 = 2.0 * std::numeric_limits<double>::epsilon() * std::fabs(b) + 0.5 * tol;
        const double xm = 0.5 * (c - b);
        if (std::fabs(xm) <= tol1 || fb == 0.0) return b;
        if (std::fabs(e) >= tol1 && std::fabs(fa) > std::fabs(fb)) {
            const double s = fb / fa;
            double p, qq;
            if (a == c) {
                p = 2.0 * xm * s;
                qq = 1.0 - s;
            } else {
                const double r1 = fb / fc;
                const double r2 = fa / fc;
                p = s * (2.0 * xm * r2 * (r2 - r1) - (b - a) * (r1 - 1.0));
                qq = (r2 - 1.0) * (r1 - 1.0) * (s - 1.0);
            }
            if (p > 0.0) qq = -qq;
            p = std::fabs(p);
            if (2.0 * p < std::min(3.0 * xm * qq - std::fabs(tol1 * qq), std::fabs(e * qq))) {
                e = d;
                d = p / qq;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += (std::fabs(d) > tol1) ? d : (xm > 0.0 ? tol1 : -tol1);
        fb = value(b) - price;
    }
    throw NoConvergence("implied vol root search exceeded 200 iterations");
}

} // namespace volfit
