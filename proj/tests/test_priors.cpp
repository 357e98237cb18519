#include "volfit/priors.hpp"

#include "volfit/atm_curve.hpp"
#include "volfit/errors.hpp"
#include "volfit/quote.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

using namespace volfit;

namespace {

Quote make_quote(double k, double tau, double iv) {
    Quote q;
    q.k = k;
    q.tau = tau;
    q.iv = iv;
    return q;
}

AtmTermStructure flat_curve(double sigma, std::vector<double> taus) {
    std::vector<Quote> quotes;
    for (double tau : taus) quotes.push_back(make_quote(0.0, tau, sigma));
    return AtmTermStructure::from_quotes(quotes);
}

} // namespace

TEST_CASE("isotonic projection") {
    CHECK(isotonic_l2({0.05, 0.03}) == std::vector<double>{0.04, 0.04});
    CHECK(isotonic_l2({0.01, 0.02, 0.05}) == std::vector<double>{0.01, 0.02, 0.05});
    CHECK(isotonic_l2({3.0, 1.0, 2.0}) == std::vector<double>{2.0, 2.0, 2.0});
    CHECK(isotonic_l2({1.0, 3.0, 2.0}) == std::vector<double>{1.0, 2.5, 2.5});

    // Output is non-decreasing and sum-preserving on random input.
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> y(40);
        for (auto& v : y) v = u(rng);
        const auto p = isotonic_l2(y);
        double sum_y = 0.0, sum_p = 0.0;
        for (size_t i = 0; i < y.size(); ++i) {
            sum_y += y[i];
            sum_p += p[i];
            if (i > 0) CHECK(p[i] >= p[i - 1]);
        }
        CHECK(std::fabs(sum_y - sum_p) < 1e-12 * y.size());
    }
}

TEST_CASE("atm term structure from flat quotes") {
    const auto curve = flat_curve(0.2, {0.5, 1.0, 2.0});
    CHECK(curve.value(1.0) == Catch::Approx(0.04).margin(1e-15));
    CHECK(curve.value(0.5) == Catch::Approx(0.02).margin(1e-15));
    CHECK(curve.value(0.0) == Catch::Approx(0.0).margin(1e-15));
    const double mid = curve.value(1.5);
    CHECK(mid > 0.04);
    CHECK(mid < 0.08);

    // Monotone everywhere sampled, including the extrapolation region.
    double prev = 0.0;
    for (double tau = 0.01; tau < 4.0; tau += 0.01) {
        const double w = curve.value(tau);
        CHECK(w >= prev);
        CHECK(curve.slope(tau) >= -1e-15);
        prev = w;
    }

    // Linear extrapolation with constant terminal slope.
    const double s = curve.slope(2.0);
    CHECK(curve.slope(2.5) == Catch::Approx(s).margin(1e-15));
    CHECK(curve.value(3.0) == Catch::Approx(curve.value(2.0) + s).margin(1e-12));
}

TEST_CASE("atm term structure projects decreasing knots") {
    std::vector<Quote> quotes = {
        make_quote(0.0, 1.0, std::sqrt(0.05)),
        make_quote(0.0, 2.0, std::sqrt(0.03 / 2.0)),
    };
    const auto curve = AtmTermStructure::from_quotes(quotes);
    CHECK(curve.knots().size() == 2);
    CHECK(curve.knots()[0].w == Catch::Approx(0.04).margin(1e-15));
    CHECK(curve.knots()[1].w == Catch::Approx(0.04).margin(1e-15));
    // The pooled region is flat.
    CHECK(curve.value(1.5) == Catch::Approx(0.04).margin(1e-12));
    CHECK(curve.slope(1.5) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("atm selection takes the quote nearest k=0, ties toward k<=0") {
    std::vector<Quote> quotes = {
        make_quote(0.1, 1.0, 0.3),
        make_quote(-0.1, 1.0, 0.2),
        make_quote(-0.05, 2.0, 0.25),
        make_quote(0.02, 2.0, 0.35),
    };
    const auto curve = AtmTermStructure::from_quotes(quotes);
    CHECK(curve.knots()[0].w == Catch::Approx(0.04).margin(1e-15));        // k=-0.1 wins the tie
    CHECK(curve.knots()[1].w == Catch::Approx(0.35 * 0.35 * 2.0).margin(1e-15)); // |0.02| < |-0.05|
}

TEST_CASE("atm curve is finite and anchored below the first data knot") {
    const auto curve = AtmTermStructure::from_knots(
        {{0.1, 0.006}, {0.25, 0.02}, {0.5, 0.045}, {1.0, 0.09}, {2.0, 0.2}});
    double prev = -1.0;
    for (double tau : {0.0, 0.01, 0.05, 0.08, 0.0999}) {
        const double w = curve.value(tau);
        REQUIRE(std::isfinite(w));
        REQUIRE(std::isfinite(curve.slope(tau)));
        REQUIRE(w >= 0.0);
        REQUIRE(w > prev - 1e-15);
        prev = w;
    }
    CHECK(curve.value(0.0) == 0.0);
    CHECK(curve.value(0.1) == Catch::Approx(0.006).margin(1e-15));
}

TEST_CASE("atm curve slope is the derivative of value") {
    const auto curve = flat_curve(0.25, {0.1, 0.4, 1.0, 1.7, 2.0});
    const double h = 1e-6;
    for (double tau : {0.05, 0.13, 0.52, 0.99, 1.31, 1.94, 2.5}) {
        const double fd = (curve.value(tau + h) - curve.value(tau - h)) / (2.0 * h);
        CHECK(curve.slope(tau) == Catch::Approx(fd).margin(1e-7));
    }
}

TEST_CASE("bs prior jet") {
    const auto curve = flat_curve(0.2, {0.5, 1.0, 2.0});
    const auto jet = bs_prior_jet(0.3, 1.0, curve);
    CHECK(jet.v == Catch::Approx(0.04).margin(1e-15));
    CHECK(jet.dk == 0.0);
    CHECK(jet.dkk == 0.0);
    CHECK(jet.dt == Catch::Approx(curve.slope(1.0)).margin(1e-15));
    // Constant in k.
    CHECK(bs_prior_jet(-5.0, 1.3, curve).v == Catch::Approx(bs_prior_jet(5.0, 1.3, curve).v));
    for (double tau = 0.02; tau < 3.5; tau += 0.07) {
        CHECK(bs_prior_jet(0.0, tau, curve).dt >= -1e-15);
    }
    CHECK_THROWS_AS(bs_prior_jet(0.0, 0.0, curve), InvalidInput);
}

TEST_CASE("ssvi prior reduces to w_atm at k=0 and is symmetric when rho=0") {
    const auto curve = flat_curve(0.2, {0.25, 1.0, 2.0});
    const auto params = SsviParams::defaults();
    for (double tau : {0.03, 0.4, 1.1, 2.7}) {
        CHECK(ssvi_prior_jet(0.0, tau, curve, params).v ==
              Catch::Approx(curve.value(tau)).epsilon(1e-12));
    }
    SsviParams symmetric = params;
    symmetric.rho_raw = 0.0;
    for (double k : {0.1, 0.45, 1.2}) {
        CHECK(ssvi_prior_jet(k, 1.0, curve, symmetric).v ==
              Catch::Approx(ssvi_prior_jet(-k, 1.0, curve, symmetric).v).epsilon(1e-12));
    }
    // Positive wherever w_atm is.
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> uk(-2.0, 2.0), ut(0.01, 3.0);
    for (int i = 0; i < 200; ++i) {
        CHECK(ssvi_prior_jet(uk(rng), ut(rng), curve, params).v > 0.0);
    }
}

TEST_CASE("ssvi jet matches finite differences") {
    const auto curve = flat_curve(0.22, {0.25, 0.7, 1.3, 2.0});
    auto params = SsviParams::defaults();
    params.rho_raw = std::atanh(-0.3);
    params.eta_raw = std::log(0.8);
    params.gamma_raw = 0.4;

    std::mt19937 rng(23);
    std::uniform_real_distribution<double> uk(-1.5, 1.5), ut(0.1, 2.5);
    const double h = 1e-5;
    for (int i = 0; i < 100; ++i) {
        const double k = uk(rng);
        const double tau = ut(rng);
        const auto jet = ssvi_prior_jet(k, tau, curve, params);

        const auto at = [&](double kk, double tt) {
            return ssvi_prior_jet(kk, tt, curve, params).v;
        };
        const double fd_k = (at(k + h, tau) - at(k - h, tau)) / (2.0 * h);
        const double fd_t = (at(k, tau + h) - at(k, tau - h)) / (2.0 * h);
        CHECK(jet.dk == Catch::Approx(fd_k).epsilon(1e-5).margin(1e-9));
        CHECK(jet.dt == Catch::Approx(fd_t).epsilon(1e-5).margin(1e-9));

        const double h2 = 1e-4;
        const double fd_kk = (at(k + h2, tau) - 2.0 * at(k, tau) + at(k - h2, tau)) / (h2 * h2);
        CHECK(jet.dkk == Catch::Approx(fd_kk).epsilon(1e-4).margin(1e-7));
    }
}

TEST_CASE("ssvi raw-parameter partials match finite differences") {
    const auto curve = flat_curve(0.18, {0.3, 0.9, 1.6, 2.0});
    auto params = SsviParams::defaults();
    params.rho_raw = -0.4;
    params.eta_raw = 0.2;
    params.gamma_raw = -0.3;

    std::mt19937 rng(31);
    std::uniform_real_distribution<double> uk(-1.2, 1.2), ut(0.1, 2.5);
    const double h = 1e-6;

    for (int i = 0; i < 60; ++i) {
        const double k = uk(rng);
        const double tau = ut(rng);
        SsviJetPartials partials;
        ssvi_prior_jet(k, tau, curve, params, &partials);

        for (int p = 0; p < 3; ++p) {
            auto bumped = [&](double eps) {
                SsviParams b = params;
                (p == 0 ? b.rho_raw : p == 1 ? b.eta_raw : b.gamma_raw) += eps;
                return ssvi_prior_jet(k, tau, curve, b);
            };
            const Jet2 up = bumped(h), dn = bumped(-h);
            const Jet2& got =
                p == 0 ? partials.d_rho_raw : p == 1 ? partials.d_eta_raw : partials.d_gamma_raw;
            CHECK(got.v == Catch::Approx((up.v - dn.v) / (2 * h)).epsilon(1e-5).margin(1e-8));
            CHECK(got.dk == Catch::Approx((up.dk - dn.dk) / (2 * h)).epsilon(1e-5).margin(1e-8));
            CHECK(got.dt == Catch::Approx((up.dt - dn.dt) / (2 * h)).epsilon(1e-5).margin(1e-8));
            CHECK(got.dkk ==
                  Catch::Approx((up.dkk - dn.dkk) / (2 * h)).epsilon(1e-5).margin(1e-8));
        }
    }
}
