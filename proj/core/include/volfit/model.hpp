#pragma once

#include "volfit/atm_curve.hpp"
#include "volfit/jet.hpp"
#include "volfit/net.hpp"
#include "volfit/priors.hpp"

namespace volfit {

/// Log-moneyness and maturity extent of the data a model was fitted to.
/// Penalty and audit grids are rebuilt from these, so a saved model can be
/// re-audited without the original quotes.
struct GridRanges {
    double k_min = -0.5;
    double k_max = 0.5;
    double tau_max = 1.0;
};

/// A fitted implied-variance surface: total variance is the product of the
/// network correction and the prior,
///   omega(k, tau) = omega_nn(k, tau) * omega_prior(k, tau),
/// and implied volatility is sqrt(omega / tau).
struct SurfaceModel {
    MlpParams mlp;
    PriorKind prior = PriorKind::Ssvi;
    SsviParams ssvi;
    AtmTermStructure atm;
    GridRanges ranges;
};

/// Network factor with first derivatives in k and tau and second in k.
Jet2 nn_jet(double k, double tau, const MlpParams& params);

/// Prior factor jet for the model's prior kind.
Jet2 prior_jet(const SurfaceModel& model, double k, double tau);

/// Total-variance jet of the combined surface.
Jet2 surface_jet(const SurfaceModel& model, double k, double tau);

/// sqrt(omega(k, tau) / tau).
double implied_vol_of(const SurfaceModel& model, double k, double tau);

} // namespace volfit
