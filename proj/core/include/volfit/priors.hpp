#pragma once

#include "volfit/atm_curve.hpp"
#include "volfit/jet.hpp"

namespace volfit {

enum class PriorKind { BlackScholes, Ssvi };

/// Skew/level/power parameters of the SSVI prior, stored as unconstrained
/// reals: rho = tanh(rho_raw) in (-1,1), eta = exp(eta_raw) > 0,
/// gamma = 1/(1+exp(-gamma_raw)) in (0,1). The raw values are what the
/// optimizer sees.
struct SsviParams {
    double rho_raw = 0.0;
    double eta_raw = 0.0;
    double gamma_raw = 0.0;

    double rho() const;
    double eta() const;
    double gamma() const;

    /// rho=-0.5, eta=1, gamma=0.5 (mid-range with a negative equity skew).
    static SsviParams defaults();
};

/// d(prior jet)/d(raw parameter) for the three SSVI parameters, with the
/// squashing maps already chained in.
struct SsviJetPartials {
    Jet2 d_rho_raw;
    Jet2 d_eta_raw;
    Jet2 d_gamma_raw;
};

/// Flat-in-k prior: omega = w_atm(tau).
Jet2 bs_prior_jet(double k, double tau, const AtmTermStructure& atm);

/// Power-law SSVI prior
///   omega = (w/2) (1 + rho phi(w) k + sqrt((phi(w) k + rho)^2 + 1 - rho^2)),
///   phi(x) = eta / (x^gamma (1+x)^(1-gamma)),  w = w_atm(tau),
/// with the full input jet in closed form. When `partials` is non-null it
/// receives the raw-parameter derivatives of every jet field.
Jet2 ssvi_prior_jet(double k, double tau, const AtmTermStructure& atm, const SsviParams& params,
                    SsviJetPartials* partials = nullptr);

/// Same computations on a precomputed (w, w') pair; the batched training
/// path caches w_atm per grid point and calls these directly.
Jet2 bs_prior_jet_from_w(double w, double w_slope);
Jet2 ssvi_prior_jet_from_w(double k, double w, double w_slope, const SsviParams& params,
                           SsviJetPartials* partials = nullptr);

} // namespace volfit
