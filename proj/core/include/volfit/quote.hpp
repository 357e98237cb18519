#pragma once

#include <optional>
#include <string>
#include <vector>

namespace volfit {

/// One observed implied-volatility record in forward log-moneyness
/// coordinates. bid_iv/ask_iv are present only when both sides of the
/// market inverted cleanly.
struct Quote {
    double k = 0.0;   // forward log moneyness
    double tau = 0.0; // years to maturity, ACT/365
    double iv = 0.0;  // mid implied volatility
    std::optional<double> bid_iv;
    std::optional<double> ask_iv;
    std::string date; // quote date, ISO-8601; empty for synthetic data

    /// Total variance iv^2 * tau.
    double total_variance() const { return iv * iv * tau; }
};

/// Throws InvalidInput unless tau > 0, iv > 0 and bid_iv <= ask_iv when both present.
void validate(const Quote& quote);
void validate(const std::vector<Quote>& quotes);

struct TotalVariancePoint {
    double k = 0.0;
    double tau = 0.0;
    double w = 0.0; // total variance sigma^2 * tau
};

} // namespace volfit
