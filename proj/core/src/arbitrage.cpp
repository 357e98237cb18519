#include "volfit/arbitrage.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "volfit/engine.hpp"
#include "volfit/errors.hpp"

namespace volfit {

namespace {

constexpr int kGridSide = 100;

// ell_but without the positive-variance precondition: a nonpositive w is
// reported as a hard violation instead of an exception so that audits and
// penalty evaluation never abort mid-run.
double ell_but_guarded(double k, const Jet2& jet) {
    if (!(jet.v > 0.0)) return -std::numeric_limits<double>::infinity();
    return ell_but(k, jet);
}

} // namespace

ConstraintGrids build_grids(double k_min, double k_max, double tau_max) {
    if (!(k_min < 0.0) || !(k_max > 0.0))
        throw InvalidInput("grid construction requires k_min < 0 < k_max");
    if (!(tau_max > 0.0)) throw InvalidInput("grid construction requires tau_max > 0");

    ConstraintGrids grids;

    const double log_lo = std::log(1.0 / 365.0);
    const double log_hi = std::log(tau_max + 1.0);
    grids.t_grid.reserve(kGridSide);
    for (int i = 0; i < kGridSide; ++i) {
        const double x = log_lo + (log_hi - log_lo) * i / (kGridSide - 1);
        grids.t_grid.push_back(std::exp(x));
    }

    const double x_lo = -std::cbrt(-2.0 * k_min);
    const double x_hi = std::cbrt(2.0 * k_max);
    std::vector<double> k45;
    k45.reserve(kGridSide);
    for (int i = 0; i < kGridSide; ++i) {
        const double x = x_lo + (x_hi - x_lo) * i / (kGridSide - 1);
        k45.push_back(x * x * x);
    }

    grids.c45_k.reserve(k45.size() * grids.t_grid.size());
    grids.c45_tau.reserve(k45.size() * grids.t_grid.size());
    for (double k : k45) {
        for (double tau : grids.t_grid) {
            grids.c45_k.push_back(k);
            grids.c45_tau.push_back(tau);
        }
    }

    const double k6[4] = {6.0 * k_min, 4.0 * k_min, 4.0 * k_max, 6.0 * k_max};
    grids.c6_k.reserve(4 * grids.t_grid.size());
    grids.c6_tau.reserve(4 * grids.t_grid.size());
    for (double k : k6) {
        for (double tau : grids.t_grid) {
            grids.c6_k.push_back(k);
            grids.c6_tau.push_back(tau);
        }
    }

    grids.atm_tau = grids.t_grid;
    return grids;
}

double ell_cal(const Jet2& jet) { return jet.dt; }

double ell_but(double k, const Jet2& jet) {
    if (!(jet.v > 0.0)) throw NumericalError("butterfly functional needs positive total variance");
    const double w = jet.v;
    const double wk = jet.dk;
    const double a = 1.0 - k * wk / (2.0 * w);
    return a * a - 0.25 * wk * wk * (1.0 / w + 0.25) + 0.5 * jet.dkk;
}

double ell_but_unsquared(double k, const Jet2& jet) {
    if (!(jet.v > 0.0)) throw NumericalError("butterfly functional needs positive total variance");
    const double w = jet.v;
    const double wk = jet.dk;
    const double a = 1.0 - k * wk / (2.0 * w);
    return a * a - 0.25 * wk * (1.0 / w + 0.25) + 0.5 * jet.dkk;
}

PenaltyLosses penalty_losses(const SurfaceModel& model, const ConstraintGrids& grids) {
    PenaltyLosses losses;

    {
        JetEngine engine(model, grids.c45_k, grids.c45_tau);
        engine.forward(model);
        double c4 = 0.0, c5 = 0.0;
        for (std::size_t i = 0; i < engine.size(); ++i) {
            const Jet2 jet = engine.surface(i);
            c4 += std::max(0.0, -ell_cal(jet));
            c5 += std::max(0.0, -ell_but_guarded(grids.c45_k[i], jet));
        }
        losses.c4 = c4 / static_cast<double>(engine.size());
        losses.c5 = c5 / static_cast<double>(engine.size());
    }
    {
        JetEngine engine(model, grids.c6_k, grids.c6_tau);
        engine.forward(model);
        double c6 = 0.0;
        for (std::size_t i = 0; i < engine.size(); ++i) c6 += std::abs(engine.surface(i).dkk);
        losses.c6 = c6 / static_cast<double>(engine.size());
    }
    {
        const std::vector<double> zeros(grids.atm_tau.size(), 0.0);
        JetEngine engine(model, zeros, grids.atm_tau);
        engine.forward(model);
        double ss = 0.0;
        for (std::size_t i = 0; i < engine.size(); ++i) {
            const double d = 1.0 - engine.nn(i).v;
            ss += d * d;
        }
        losses.atm = std::sqrt(ss / static_cast<double>(engine.size()));
    }
    return losses;
}

ArbitrageReport audit(const SurfaceModel& model, const ConstraintGrids& grids) {
    ArbitrageReport report;
    report.loss_atm = penalty_losses(model, grids).atm;

    {
        JetEngine engine(model, grids.c45_k, grids.c45_tau);
        engine.forward(model);
        double worst_cal = std::numeric_limits<double>::infinity();
        double worst_but = std::numeric_limits<double>::infinity();
        double worst_unsq = std::numeric_limits<double>::infinity();
        double c4 = 0.0, c5 = 0.0;
        for (std::size_t i = 0; i < engine.size(); ++i) {
            const Jet2 jet = engine.surface(i);
            const double cal = ell_cal(jet);
            const double but = ell_but_guarded(grids.c45_k[i], jet);
            const double unsq =
                jet.v > 0.0 ? ell_but_unsquared(grids.c45_k[i], jet) : but;
            worst_cal = std::min(worst_cal, cal);
            worst_but = std::min(worst_but, but);
            worst_unsq = std::min(worst_unsq, unsq);
            c4 += std::max(0.0, -cal);
            c5 += std::max(0.0, -but);
            if (cal < 0.0)
                report.violations.push_back({"calendar", grids.c45_k[i], grids.c45_tau[i], cal});
            if (but < 0.0)
                report.violations.push_back({"butterfly", grids.c45_k[i], grids.c45_tau[i], but});
        }
        report.worst_cal = worst_cal;
        report.worst_but = worst_but;
        report.worst_but_unsquared = worst_unsq;
        report.loss_c4 = c4 / static_cast<double>(engine.size());
        report.loss_c5 = c5 / static_cast<double>(engine.size());
    }
    {
        JetEngine engine(model, grids.c6_k, grids.c6_tau);
        engine.forward(model);
        double c6 = 0.0;
        double lee_max = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < engine.size(); ++i) {
            const Jet2 jet = engine.surface(i);
            c6 += std::abs(jet.dkk);
            const double lee = jet.v / std::abs(grids.c6_k[i]);
            lee_max = std::max(lee_max, lee);
            if (lee >= 2.0) {
                ++report.lee_flags;
                report.violations.push_back({"lee", grids.c6_k[i], grids.c6_tau[i], lee});
            }
        }
        report.loss_c6 = c6 / static_cast<double>(engine.size());
        report.lee_max = lee_max;
    }
    return report;
}

std::string report_to_json(const ArbitrageReport& report) {
    nlohmann::json j;
    j["worst_cal"] = report.worst_cal;
    j["worst_but"] = report.worst_but;
    j["worst_but_unsquared"] = report.worst_but_unsquared;
    j["loss_c4"] = report.loss_c4;
    j["loss_c5"] = report.loss_c5;
    j["loss_c6"] = report.loss_c6;
    j["loss_atm"] = report.loss_atm;
    j["lee_max"] = report.lee_max;
    j["lee_flags"] = report.lee_flags;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& v : report.violations)
        rows.push_back({{"condition", v.condition}, {"k", v.k}, {"tau", v.tau}, {"value", v.value}});
    j["violations"] = std::move(rows);
    return j.dump(2) + "\n";
}

} // namespace volfit
