#pragma once

namespace volfit {

/// Value of a surface quantity together with the input derivatives the
/// shape conditions need: d/dk, d/dtau and d2/dk2.
struct Jet2 {
    double v = 0.0;
    double dk = 0.0;
    double dt = 0.0;
    double dkk = 0.0;
};

/// Leibniz product of two jets (second k-derivative uses 2*dk_a*dk_b).
inline Jet2 jet_product(const Jet2& a, const Jet2& b) {
    return Jet2{
        a.v * b.v,
        a.dk * b.v + a.v * b.dk,
        a.dt * b.v + a.v * b.dt,
        a.dkk * b.v + 2.0 * a.dk * b.dk + a.v * b.dkk,
    };
}

} // namespace volfit
