#include "volfit/priors.hpp"

#include "volfit/errors.hpp"

#include <cmath>

namespace volfit {

double SsviParams::rho() const { return std::tanh(rho_raw); }
double SsviParams::eta() const { return std::exp(eta_raw); }
double SsviParams::gamma() const { return 1.0 / (1.0 + std::exp(-gamma_raw)); }

SsviParams SsviParams::defaults() {
    SsviParams p;
    p.rho_raw = std::atanh(-0.5);
    p.eta_raw = 0.0;
    p.gamma_raw = 0.0;
    return p;
}

Jet2 bs_prior_jet_from_w(double w, double w_slope) {
    return Jet2{w, 0.0, w_slope, 0.0};
}

Jet2 bs_prior_jet(double k, double tau, const AtmTermStructure& atm) {
    (void)k;
    if (!(tau > 0.0)) throw InvalidInput("tau must be positive");
    return bs_prior_jet_from_w(atm.value(tau), atm.slope(tau));
}

Jet2 ssvi_prior_jet_from_w(double k, double w, double w_slope, const SsviParams& params,
                           SsviJetPartials* partials) {
    const double rho = params.rho();
    const double eta = params.eta();
    const double gamma = params.gamma();

    // phi(w) = eta * w^-gamma * (1+w)^(gamma-1) and its w-derivative.
    const double phi = eta * std::pow(w, -gamma) * std::pow(1.0 + w, gamma - 1.0);
    const double g = gamma / w + (1.0 - gamma) / (1.0 + w);
    const double phi_w = -phi * g;

    const double z = phi * k + rho;
    const double one_m_rho2 = 1.0 - rho * rho;
    const double R = std::sqrt(z * z + one_m_rho2);

    const double S = rho + z / R; // d(1 + rho phi k + R)/d(phi k)
    const double value = 0.5 * w * (1.0 + rho * phi * k + R);
    const double dk = 0.5 * w * phi * S;
    const double dkk = 0.5 * w * phi * phi * one_m_rho2 / (R * R * R);
    // d(omega)/dw, then chained with w'(tau).
    const double dw = value / w + 0.5 * w * k * phi_w * S;
    const double dt = w_slope * dw;

    Jet2 jet{value, dk, dt, dkk};

    if (partials != nullptr) {
        const double log_ratio = std::log((1.0 + w) / w);
        const double R3 = R * R * R;
        // Derivatives with respect to the constrained parameters
        // p in {rho, eta, gamma}; phi_p is d(phi)/dp.
        const double phi_p[3] = {0.0, phi / eta, phi * log_ratio};
        const double rho_p[3] = {1.0, 0.0, 0.0};
        // d(phi_w)/dp: phi_w = -phi*g with g depending on gamma only.
        const double g_gamma = 1.0 / w - 1.0 / (1.0 + w);
        const double phi_w_p[3] = {0.0, phi_w / eta, -phi_p[2] * g - phi * g_gamma};
        // Chain factors raw -> constrained.
        const double chain[3] = {one_m_rho2, eta, gamma * (1.0 - gamma)};

        Jet2* out[3] = {&partials->d_rho_raw, &partials->d_eta_raw, &partials->d_gamma_raw};
        for (int p = 0; p < 3; ++p) {
            const double z_p = k * phi_p[p] + rho_p[p];
            const double R_p = (z * z_p - rho * rho_p[p]) / R;
            const double S_p = rho_p[p] + z_p / R - z * R_p / (R * R);
            const double value_p =
                0.5 * w * (k * (rho_p[p] * phi + rho * phi_p[p]) + R_p);
            const double dk_p = 0.5 * w * (phi_p[p] * S + phi * S_p);
            const double T_p = -2.0 * rho * rho_p[p] / R3 - 3.0 * one_m_rho2 * R_p / (R3 * R);
            const double dkk_p = 0.5 * w * (2.0 * phi * phi_p[p] * one_m_rho2 / R3 + phi * phi * T_p);
            const double dw_p = value_p / w + 0.5 * w * k * (phi_w_p[p] * S + phi_w * S_p);
            const double dt_p = w_slope * dw_p;
            *out[p] = Jet2{value_p * chain[p], dk_p * chain[p], dt_p * chain[p],
                           dkk_p * chain[p]};
        }
    }
    return jet;
}

Jet2 ssvi_prior_jet(double k, double tau, const AtmTermStructure& atm, const SsviParams& params,
                    SsviJetPartials* partials) {
    if (!(tau > 0.0)) throw InvalidInput("tau must be positive");
    return ssvi_prior_jet_from_w(k, atm.value(tau), atm.slope(tau), params, partials);
}

} // namespace volfit
