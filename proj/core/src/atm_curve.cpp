#include "volfit/atm_curve.hpp"

#include "volfit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace volfit {

std::vector<double> isotonic_l2(const std::vector<double>& values) {
    struct Block {
        double sum;
        int count;
        double mean() const { return sum / count; }
    };
    std::vector<Block> blocks;
    blocks.reserve(values.size());
    for (double v : values) {
        blocks.push_back({v, 1});
        while (blocks.size() > 1 &&
               blocks[blocks.size() - 1].mean() < blocks[blocks.size() - 2].mean()) {
            blocks[blocks.size() - 2].sum += blocks.back().sum;
            blocks[blocks.size() - 2].count += blocks.back().count;
            blocks.pop_back();
        }
    }
    std::vector<double> out;
    out.reserve(values.size());
    for (const auto& b : blocks) {
        out.insert(out.end(), b.count, b.mean());
    }
    return out;
}

AtmTermStructure AtmTermStructure::from_quotes(const std::vector<Quote>& quotes) {
    if (quotes.empty()) throw InvalidInput("atm term structure needs at least one quote");

    // Nearest-to-ATM per distinct maturity; |k| ties broken toward k <= 0.
    std::map<double, const Quote*> nearest;
    for (const auto& q : quotes) {
        auto [it, inserted] = nearest.try_emplace(q.tau, &q);
        if (!inserted) {
            const Quote* cur = it->second;
            const double a = std::fabs(q.k), b = std::fabs(cur->k);
            if (a < b || (a == b && q.k < cur->k)) it->second = &q;
        }
    }

    std::vector<AtmKnot> knots;
    knots.reserve(nearest.size());
    std::vector<double> w_values;
    w_values.reserve(nearest.size());
    for (const auto& [tau, q] : nearest) {
        knots.push_back({tau, 0.0});
        w_values.push_back(q->iv * q->iv * tau);
    }
    const auto projected = isotonic_l2(w_values);
    for (size_t i = 0; i < knots.size(); ++i) knots[i].w = projected[i];

    return from_knots(std::move(knots));
}

AtmTermStructure AtmTermStructure::from_knots(std::vector<AtmKnot> knots) {
    if (knots.empty()) throw InvalidInput("atm term structure needs at least one knot");
    for (size_t i = 0; i < knots.size(); ++i) {
        if (!(knots[i].tau > 0.0) || !(knots[i].w >= 0.0)) {
            throw InvalidInput("atm knots need tau > 0 and w >= 0");
        }
        if (i > 0 && !(knots[i].tau > knots[i - 1].tau && knots[i].w >= knots[i - 1].w)) {
            throw InvalidInput("atm knots must be sorted with non-decreasing w");
        }
    }
    AtmTermStructure curve;
    curve.data_knots_ = std::move(knots);
    curve.tau_.assign(1, 0.0);
    curve.w_.assign(1, 0.0);
    for (const auto& knot : curve.data_knots_) {
        curve.tau_.push_back(knot.tau);
        curve.w_.push_back(knot.w);
    }
    curve.build_tangents();
    return curve;
}

void AtmTermStructure::build_tangents() {
    const size_t n = tau_.size();
    tangent_.assign(n, 0.0);
    if (n == 1) return;

    std::vector<double> secant(n - 1);
    for (size_t i = 0; i + 1 < n; ++i) {
        secant[i] = (w_[i + 1] - w_[i]) / (tau_[i + 1] - tau_[i]);
    }
    tangent_[0] = secant.front();
    tangent_[n - 1] = secant.back();
    for (size_t i = 1; i + 1 < n; ++i) {
        tangent_[i] = 0.5 * (secant[i - 1] + secant[i]);
    }
    // Fritsch-Carlson limiter keeps the Hermite interpolant monotone.
    for (size_t i = 0; i + 1 < n; ++i) {
        if (secant[i] == 0.0) {
            tangent_[i] = 0.0;
            tangent_[i + 1] = 0.0;
            continue;
        }
        const double a = tangent_[i] / secant[i];
        const double b = tangent_[i + 1] / secant[i];
        const double s = a * a + b * b;
        if (s > 9.0) {
            const double t = 3.0 / std::sqrt(s);
            tangent_[i] = t * a * secant[i];
            tangent_[i + 1] = t * b * secant[i];
        }
    }
}

double AtmTermStructure::value(double tau) const {
    if (!(tau >= 0.0) || !std::isfinite(tau)) throw InvalidInput("tau must be non-negative");
    const size_t n = tau_.size();
    if (tau >= tau_.back()) {
        const double slope_out = std::max(tangent_.back(), 0.0);
        return w_.back() + slope_out * (tau - tau_.back());
    }
    const auto it = std::upper_bound(tau_.begin(), tau_.end(), tau);
    const size_t i = static_cast<size_t>(it - tau_.begin()) - 1;
    (void)n;
    const double h = tau_[i + 1] - tau_[i];
    const double t = (tau - tau_[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    return (2.0 * t3 - 3.0 * t2 + 1.0) * w_[i] + (t3 - 2.0 * t2 + t) * h * tangent_[i] +
           (-2.0 * t3 + 3.0 * t2) * w_[i + 1] + (t3 - t2) * h * tangent_[i + 1];
}

double AtmTermStructure::slope(double tau) const {
    if (!(tau >= 0.0) || !std::isfinite(tau)) throw InvalidInput("tau must be non-negative");
    if (tau >= tau_.back()) return std::max(tangent_.back(), 0.0);
    const auto it = std::upper_bound(tau_.begin(), tau_.end(), tau);
    const size_t i = static_cast<size_t>(it - tau_.begin()) - 1;
    const double h = tau_[i + 1] - tau_[i];
    const double t = (tau - tau_[i]) / h;
    const double t2 = t * t;
    return ((6.0 * t2 - 6.0 * t) * w_[i] + (3.0 * t2 - 4.0 * t + 1.0) * h * tangent_[i] +
            (-6.0 * t2 + 6.0 * t) * w_[i + 1] + (3.0 * t2 - 2.0 * t) * h * tangent_[i + 1]) /
           h;
}

} // namespace volfit
