#include "volfit/model.hpp"

#include <cmath>

#include "volfit/engine.hpp"
#include "volfit/errors.hpp"

namespace volfit {

Jet2 nn_jet(double k, double tau, const MlpParams& params) {
    SurfaceModel probe;
    probe.mlp = params;
    probe.prior = PriorKind::BlackScholes;
    JetEngine engine(probe, std::span<const double>(&k, 1), std::span<const double>(&tau, 1));
    engine.forward(probe);
    return engine.nn(0);
}

Jet2 prior_jet(const SurfaceModel& model, double k, double tau) {
    if (model.prior == PriorKind::BlackScholes) return bs_prior_jet(k, tau, model.atm);
    return ssvi_prior_jet(k, tau, model.atm, model.ssvi);
}

Jet2 surface_jet(const SurfaceModel& model, double k, double tau) {
    JetEngine engine(model, std::span<const double>(&k, 1), std::span<const double>(&tau, 1));
    engine.forward(model);
    return engine.surface(0);
}

double implied_vol_of(const SurfaceModel& model, double k, double tau) {
    const double w = surface_jet(model, k, tau).v;
    if (!(w > 0.0) || !std::isfinite(w))
        throw NumericalError("total variance is not positive");
    return std::sqrt(w / tau);
}

} // namespace volfit
