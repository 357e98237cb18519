#pragma once

#include <string>
#include <vector>

#include "volfit/jet.hpp"
#include "volfit/model.hpp"

namespace volfit {

/// Penalty evaluation points derived from the data extent.
///
/// - t_grid: 100 log-equidistant maturities from 1/365 to tau_max + 1.
/// - I_C45 (calendar + butterfly): 100 cube-spaced log-moneyness values
///   spanning [2*k_min, 2*k_max] (denser near k = 0), crossed with t_grid.
/// - I_C6 (asymptotic slope): k in {6*k_min, 4*k_min, 4*k_max, 6*k_max}
///   crossed with t_grid.
/// - I_atm: (0, tau) for tau in t_grid.
struct ConstraintGrids {
    std::vector<double> t_grid;
    std::vector<double> c45_k;
    std::vector<double> c45_tau;
    std::vector<double> c6_k;
    std::vector<double> c6_tau;
    std::vector<double> atm_tau;
};

/// Requires k_min < 0 < k_max and tau_max > 0.
ConstraintGrids build_grids(double k_min, double k_max, double tau_max);

/// Calendar-spread functional: total variance must be non-decreasing in tau.
double ell_cal(const Jet2& jet);

/// Butterfly (Durrleman) functional
///   (1 - k w'/(2w))^2 - (w')^2/4 (1/w + 1/4) + w''/2
/// with w = jet.v, w' = jet.dk, w'' = jet.dkk. Nonnegative everywhere iff the
/// slice admits no butterfly arbitrage. Requires w > 0.
double ell_but(double k, const Jet2& jet);

/// Variant with an unsquared w'/4 middle term, reported alongside the
/// standard form for comparison.
double ell_but_unsquared(double k, const Jet2& jet);

struct PenaltyLosses {
    double c4 = 0.0;  // mean over I_C45 of max(0, -ell_cal)
    double c5 = 0.0;  // mean over I_C45 of max(0, -ell_but)
    double c6 = 0.0;  // mean over I_C6 of |d2w/dk2|
    double atm = 0.0; // rms of (1 - omega_nn) over I_atm
};

PenaltyLosses penalty_losses(const SurfaceModel& model, const ConstraintGrids& grids);

struct Violation {
    std::string condition; // "calendar", "butterfly", or "lee"
    double k = 0.0;
    double tau = 0.0;
    double value = 0.0;
};

/// Post-training verification summary. worst_* are minima over I_C45;
/// lee_max is the largest omega/|k| seen at the I_C6 points, where values
/// >= 2 indicate moment-formula violations and are flagged in the table.
struct ArbitrageReport {
    double worst_cal = 0.0;
    double worst_but = 0.0;
    double worst_but_unsquared = 0.0;
    double loss_c4 = 0.0;
    double loss_c5 = 0.0;
    double loss_c6 = 0.0;
    double loss_atm = 0.0;
    double lee_max = 0.0;
    int lee_flags = 0;
    std::vector<Violation> violations;
};

ArbitrageReport audit(const SurfaceModel& model, const ConstraintGrids& grids);

std::string report_to_json(const ArbitrageReport& report);

} // namespace volfit
