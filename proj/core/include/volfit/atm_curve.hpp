#pragma once

#include "volfit/quote.hpp"

#include <vector>

namespace volfit {

/// L2 isotonic regression with equal weights (pool adjacent violators).
/// Returns the non-decreasing vector closest to `values` in least squares.
std::vector<double> isotonic_l2(const std::vector<double>& values);

struct AtmKnot {
    double tau = 0.0;
    double w = 0.0;
};

/// At-the-money total variance as a function of maturity: per distinct tau
/// the quote nearest k=0 supplies w = iv^2 * tau, an isotonic projection
/// enforces monotonicity, and a monotone C1 cubic (Fritsch-Carlson tangents)
/// interpolates through an implicit (0,0) anchor. Beyond the last knot the
/// curve continues linearly with the terminal tangent, floored at 0.
class AtmTermStructure {
public:
    /// Anchor-only curve: w identically 0. Placeholder until a real curve
    /// is attached; from_quotes/from_knots require at least one data knot.
    AtmTermStructure() : tau_{0.0}, w_{0.0}, tangent_{0.0} {}

    static AtmTermStructure from_quotes(const std::vector<Quote>& quotes);

    /// Rebuilds the curve from stored knots (tau strictly increasing,
    /// w non-decreasing); used when loading checkpoints. The (0,0) anchor
    /// must not be included.
    static AtmTermStructure from_knots(std::vector<AtmKnot> knots);

    double value(double tau) const;
    double slope(double tau) const;

    /// Data knots, anchor excluded.
    const std::vector<AtmKnot>& knots() const { return data_knots_; }

private:
    void build_tangents();
    std::vector<AtmKnot> data_knots_;
    std::vector<double> tau_, w_, tangent_; // incl. the (0,0) anchor at index 0
};

} // namespace volfit
