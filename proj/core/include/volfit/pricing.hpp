#pragma once

namespace volfit {

/// Spot, rate and dividend yield attached to a quote date.
/// Rates are continuously compounded, ACT/365.
struct MarketConvention {
    double spot = 1.0;
    double rate = 0.0;
    double dividend_yield = 0.0;
};

/// Standard normal CDF via the complementary error function.
double norm_cdf(double x);

/// Standard normal density.
double norm_pdf(double x);

/// European call under Black-Scholes, continuous rate r and dividend yield q.
double bs_call_price(double spot, double sigma, double r, double q, double strike, double tau);

/// European put, priced through put-call parity off the call.
double bs_put_price(double spot, double sigma, double r, double q, double strike, double tau);

/// dPrice/dSigma; identical for calls and puts.
double vega(double spot, double sigma, double r, double q, double strike, double tau);

/// Inverts the Black-Scholes formula with a bracketed Brent search on
/// sigma in [1e-4, 5.0], widening the upper bracket to 10.0 when needed.
/// Throws PriceOutOfBounds when the price is not strictly inside the
/// attainable range and NoConvergence when the bracket or iteration
/// budget (200) is exhausted.
double implied_vol(double price, double spot, double r, double q, double strike, double tau,
                   bool is_call);

/// k = log(strike / forward) with forward = spot * exp((r - q) * tau).
double forward_log_moneyness(double strike, double spot, double r, double q, double tau);

} // namespace volfit
