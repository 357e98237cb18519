#include "volfit/arbitrage.hpp"

#include "volfit/engine.hpp"
#include "volfit/errors.hpp"
#include "volfit/model.hpp"
#include "volfit/net.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <random>

using namespace volfit;

namespace {

AtmTermStructure linear_atm(double sigma, double tau_hi) {
    // Knots on a line through the origin reproduce w = sigma^2 tau exactly
    // (tangents equal the common secant).
    std::vector<AtmKnot> knots;
    for (double tau : {0.1, 0.5, 1.0, tau_hi}) knots.push_back({tau, sigma * sigma * tau});
    return AtmTermStructure::from_knots(std::move(knots));
}

SurfaceModel flat_model(double sigma) {
    SurfaceModel m;
    m.mlp = init_params({5, 5}, 4);
    zero_output_layer(m.mlp);
    m.prior = PriorKind::BlackScholes;
    m.atm = linear_atm(sigma, 4.0);
    return m;
}

} // namespace

TEST_CASE("grid endpoints follow the cube and log maps") {
    const ConstraintGrids g = build_grids(-1.0, 0.5, 2.0);

    REQUIRE(g.t_grid.size() == 100);
    REQUIRE(g.c45_k.size() == 100 * 100);
    REQUIRE(g.c45_tau.size() == g.c45_k.size());
    REQUIRE(g.c6_k.size() == 4 * 100);
    REQUIRE(g.atm_tau.size() == 100);

    CHECK(g.t_grid.front() == Catch::Approx(1.0 / 365.0).epsilon(1e-14));
    CHECK(g.t_grid.back() == Catch::Approx(3.0).epsilon(1e-14));

    // k-extremes are exactly 2*k_min and 2*k_max.
    double k_lo = g.c45_k[0], k_hi = g.c45_k[0];
    for (double k : g.c45_k) {
        k_lo = std::min(k_lo, k);
        k_hi = std::max(k_hi, k);
    }
    CHECK(k_lo == Catch::Approx(-2.0).epsilon(1e-12));
    CHECK(k_hi == Catch::Approx(1.0).epsilon(1e-12));

    const ConstraintGrids g2 = build_grids(-1.2, 0.3, 2.0);
    CHECK(g2.c6_k[0] == Catch::Approx(-7.2).epsilon(1e-13));
    CHECK(g2.c6_k[100] == Catch::Approx(-4.8).epsilon(1e-13));
    CHECK(g2.c6_k[200] == Catch::Approx(1.2).epsilon(1e-13));
    CHECK(g2.c6_k[300] == Catch::Approx(1.8).epsilon(1e-13));
}

TEST_CASE("cube spacing concentrates points near the money") {
    const ConstraintGrids g = build_grids(-0.8, 0.8, 1.0);
    // Distinct k values in grid order (tau-major inner loop).
    std::vector<double> ks;
    for (std::size_t i = 0; i < g.c45_k.size(); i += g.t_grid.size()) ks.push_back(g.c45_k[i]);
    REQUIRE(ks.size() == 100);
    for (std::size_t i = 1; i < ks.size(); ++i) REQUIRE(ks[i] > ks[i - 1]);

    // Smallest gap should sit near k=0 and be far smaller than the edge gap.
    double min_gap = 1e300;
    std::size_t min_at = 0;
    for (std::size_t i = 1; i < ks.size(); ++i) {
        if (ks[i] - ks[i - 1] < min_gap) {
            min_gap = ks[i] - ks[i - 1];
            min_at = i;
        }
    }
    const double edge_gap = ks[1] - ks[0];
    CHECK(std::abs(ks[min_at]) < 0.1);
    CHECK(min_gap < 0.05 * edge_gap);
}

TEST_CASE("grid construction rejects bad ranges") {
    REQUIRE_THROWS_AS(build_grids(0.0, 0.5, 1.0), InvalidInput);
    REQUIRE_THROWS_AS(build_grids(-0.5, 0.0, 1.0), InvalidInput);
    REQUIRE_THROWS_AS(build_grids(0.3, 0.5, 1.0), InvalidInput);
    REQUIRE_THROWS_AS(build_grids(-0.5, 0.5, 0.0), InvalidInput);
}

TEST_CASE("calendar functional is the tau derivative") {
    CHECK(ell_cal({0.04, 0.0, 0.04, 0.0}) == 0.04);
    CHECK(ell_cal({0.1, 0.3, -0.01, 0.5}) == -0.01);
}

TEST_CASE("butterfly functional on flat and sloped slices") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> uw(0.001, 2.0);
    std::uniform_real_distribution<double> uk(-2.0, 2.0);
    for (int i = 0; i < 50; ++i) {
        const Jet2 flat{uw(rng), 0.0, 0.1, 0.0};
        CHECK(ell_but(uk(rng), flat) == 1.0);
    }

    // w(k) = 0.04 + 0.3 k at k = 0.
    const Jet2 sloped{0.04, 0.3, 0.0, 0.0};
    CHECK(ell_but(0.0, sloped) == Catch::Approx(0.431875).epsilon(1e-12));
    CHECK(ell_but_unsquared(0.0, sloped) == Catch::Approx(1.0 - 0.075 * 25.25).epsilon(1e-12));

    REQUIRE_THROWS_AS(ell_but(0.0, Jet2{0.0, 0.0, 0.0, 0.0}), NumericalError);
    REQUIRE_THROWS_AS(ell_but(0.0, Jet2{-0.1, 0.0, 0.0, 0.0}), NumericalError);
    REQUIRE_THROWS_AS(ell_but_unsquared(0.0, Jet2{0.0, 0.0, 0.0, 0.0}), NumericalError);
}

TEST_CASE("flat surface has zero penalties and a clean audit") {
    const SurfaceModel m = flat_model(0.2);
    const ConstraintGrids g = build_grids(-0.5, 0.5, 2.0);

    const PenaltyLosses losses = penalty_losses(m, g);
    CHECK(losses.c4 == 0.0);
    CHECK(losses.c5 == 0.0);
    CHECK(std::abs(losses.c6) < 1e-12);
    CHECK(losses.atm == 0.0);

    const ArbitrageReport report = audit(m, g);
    CHECK(report.worst_cal == Catch::Approx(0.04).epsilon(1e-10));
    CHECK(report.worst_but == Catch::Approx(1.0).epsilon(1e-9));
    CHECK(report.loss_c4 == 0.0);
    CHECK(report.loss_c5 == 0.0);
    CHECK(report.loss_atm == 0.0);
    CHECK(report.lee_flags == 0);
    CHECK(report.violations.empty());
    // Largest omega/|k| over I_C6: tau up to 3, |k| >= 2.
    CHECK(report.lee_max == Catch::Approx(0.04 * 3.0 / 2.0).epsilon(1e-9));
}

TEST_CASE("high flat volatility trips the Lee diagnostic") {
    const SurfaceModel m = flat_model(1.5);
    const ConstraintGrids g = build_grids(-0.1, 0.1, 2.0);
    const ArbitrageReport report = audit(m, g);
    CHECK(report.lee_flags > 0);
    CHECK(report.lee_max == Catch::Approx(2.25 * 3.0 / 0.4).epsilon(1e-9));
    bool has_lee_row = false;
    for (const auto& v : report.violations)
        if (v.condition == "lee") has_lee_row = true;
    CHECK(has_lee_row);
    // No actual arbitrage in a flat surface.
    CHECK(report.loss_c4 == 0.0);
    CHECK(report.loss_c5 == 0.0);
}

TEST_CASE("penalty losses agree with a direct per-point loop") {
    SurfaceModel m;
    m.mlp = init_params({5, 5}, 12);
    for (auto& w : m.mlp.weights) w *= 3.0;
    m.prior = PriorKind::Ssvi;
    m.ssvi = SsviParams::defaults();
    m.atm = linear_atm(0.25, 3.0);

    const ConstraintGrids g = build_grids(-0.4, 0.4, 1.5);
    const PenaltyLosses fast = penalty_losses(m, g);

    double c4 = 0.0, c5 = 0.0;
    for (std::size_t i = 0; i < g.c45_k.size(); ++i) {
        const Jet2 jet = surface_jet(m, g.c45_k[i], g.c45_tau[i]);
        c4 += std::max(0.0, -ell_cal(jet));
        c5 += std::max(0.0, -ell_but(g.c45_k[i], jet));
    }
    c4 /= static_cast<double>(g.c45_k.size());
    c5 /= static_cast<double>(g.c45_k.size());
    double c6 = 0.0;
    for (std::size_t i = 0; i < g.c6_k.size(); ++i)
        c6 += std::abs(surface_jet(m, g.c6_k[i], g.c6_tau[i]).dkk);
    c6 /= static_cast<double>(g.c6_k.size());
    double atm_ss = 0.0;
    for (double tau : g.atm_tau) {
        const double d = 1.0 - nn_jet(0.0, tau, m.mlp).v;
        atm_ss += d * d;
    }
    const double atm = std::sqrt(atm_ss / static_cast<double>(g.atm_tau.size()));

    CHECK(fast.c4 == Catch::Approx(c4).epsilon(1e-11).margin(1e-14));
    CHECK(fast.c5 == Catch::Approx(c5).epsilon(1e-11).margin(1e-14));
    CHECK(fast.c6 == Catch::Approx(c6).epsilon(1e-11).margin(1e-14));
    CHECK(fast.atm == Catch::Approx(atm).epsilon(1e-11).margin(1e-14));
    // An untrained network is not the identity, so the ATM pull is active.
    CHECK(fast.atm > 1e-3);
}

TEST_CASE("audit records violations for a distorted surface") {
    const ConstraintGrids g = build_grids(-0.5, 0.5, 1.5);
    bool found = false;
    for (std::uint64_t seed = 0; seed < 30 && !found; ++seed) {
        SurfaceModel m;
        m.mlp = init_params({8, 8}, seed);
        for (auto& w : m.mlp.weights) w *= 5.0;
        m.prior = PriorKind::Ssvi;
        m.ssvi = SsviParams::defaults();
        m.atm = linear_atm(0.2, 3.0);

        const ArbitrageReport report = audit(m, g);
        if (report.loss_c4 > 0.0 || report.loss_c5 > 0.0) {
            found = true;
            REQUIRE(!report.violations.empty());
            if (report.loss_c4 > 0.0) {
                REQUIRE(report.worst_cal < 0.0);
                double worst_seen = 0.0;
                for (const auto& v : report.violations)
                    if (v.condition == "calendar") worst_seen = std::min(worst_seen, v.value);
                CHECK(worst_seen == report.worst_cal);
            }
            if (report.loss_c5 > 0.0) REQUIRE(report.worst_but < 0.0);

            const nlohmann::json j = nlohmann::json::parse(report_to_json(report));
            CHECK(j.at("loss_c4").get<double>() == report.loss_c4);
            CHECK(j.at("worst_but").get<double>() == report.worst_but);
            CHECK(j.at("violations").size() == report.violations.size());
        }
    }
    REQUIRE(found);
}
