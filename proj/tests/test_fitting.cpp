#include <doctest.h>

#include <cmath>

#include "txnsim/des.hpp"
#include "txnsim/fitting.hpp"

using namespace txnsim;

TEST_CASE("power law recovers an exact model") {
    Points pts;
    for (int c = 3; c <= 12; ++c)
        pts.emplace_back(c, 2.0 * std::pow(c - 2.0, 1.5));
    const FitResult f = fit_power_law(pts);
    CHECK(std::abs(f.A - 2.0) < 1e-9);
    CHECK(std::abs(f.beta - 1.5) < 1e-9);
    CHECK(f.rmse < 1e-9);
    CHECK(f.n_points == 10);
}

TEST_CASE("power law rejects undefined logs and tiny inputs") {
    CHECK_THROWS_AS(fit_power_law({{3, 1}, {4, 2}}), std::invalid_argument);
    CHECK_THROWS_AS(fit_power_law({{2, 1}, {4, 2}, {5, 3}}), std::invalid_argument);
    CHECK_THROWS_AS(fit_power_law({{3, 0}, {4, 2}, {5, 3}}), std::invalid_argument);
}

TEST_CASE("power law recovers the exponent under multiplicative noise") {
    RngStream rng(77, "fit-noise");
    int ok = 0;
    for (int trial = 0; trial < 100; ++trial) {
        Points pts;
        for (int c = 3; c <= 14; ++c) {
            const double noise = 1.0 + 0.05 * (2.0 * rng.u01() - 1.0);
            pts.emplace_back(c, 0.7 * std::pow(c - 2.0, 1.7) * noise);
        }
        const FitResult f = fit_power_law(pts);
        ok += std::abs(f.beta - 1.7) < 0.1;
    }
    CHECK(ok == 100);
}

TEST_CASE("erf model hits (A+1)/2 at its argument zero and tends to A") {
    const double A = 0.3, alpha = 0.5, beta = 1.0;
    // log10(C-2)/alpha == beta  =>  C = 2 + 10^(alpha*beta)
    const double c_zero = 2.0 + std::pow(10.0, alpha * beta);
    CHECK(erf_model(c_zero, A, alpha, beta) == doctest::Approx((A + 1.0) / 2.0));
    CHECK(erf_model(1e9, A, alpha, beta) == doctest::Approx(A).epsilon(1e-6));
}

TEST_CASE("erf fit recovers an exact model") {
    const double A = 0.2, alpha = 0.5, beta = 1.0;
    Points pts;
    for (int c = 3; c <= 14; ++c)
        pts.emplace_back(c, erf_model(c, A, alpha, beta));
    const FitResult f = fit_erf(pts);
    CHECK(std::abs(f.A - A) / A < 1e-6);
    CHECK(std::abs(f.alpha - alpha) / alpha < 1e-6);
    CHECK(std::abs(f.beta - beta) / beta < 1e-6);
    CHECK(f.rmse < 1e-9);
}

TEST_CASE("erf fit recovers parameters under 2% noise") {
    RngStream rng(78, "fit-noise");
    const double A = 0.2, alpha = 0.5, beta = 1.0;
    int ok = 0;
    const int trials = 30;
    for (int trial = 0; trial < trials; ++trial) {
        Points pts;
        for (int c = 3; c <= 16; ++c) {
            const double noise = 1.0 + 0.02 * (2.0 * rng.u01() - 1.0);
            pts.emplace_back(c, std::min(1.0, erf_model(c, A, alpha, beta) * noise));
        }
        const FitResult f = fit_erf(pts);
        ok += std::abs(f.A - A) / A < 0.15 && std::abs(f.alpha - alpha) / alpha < 0.15 &&
              std::abs(f.beta - beta) / beta < 0.15;
    }
    CHECK(ok >= trials - 2);  // rare noise draws may sit just outside 15%
}

TEST_CASE("erf fit validates its inputs") {
    Points ok = {{3, 0.5}, {4, 0.4}, {5, 0.35}, {6, 0.3}};
    CHECK_NOTHROW(fit_erf(ok));
    CHECK_THROWS_AS(fit_erf({{3, 0.5}, {4, 0.4}, {5, 0.35}}), std::invalid_argument);
    CHECK_THROWS_AS(fit_erf({{2, 0.5}, {4, 0.4}, {5, 0.35}, {6, 0.3}}), std::invalid_argument);
    CHECK_THROWS_AS(fit_erf({{3, 0.0}, {4, 0.4}, {5, 0.35}, {6, 0.3}}), std::invalid_argument);
}

TEST_CASE("boundary fit endpoints and exact recovery") {
    CHECK(boundary_model(0.0, 1.0, 1.2) == 1.0);
    CHECK(boundary_model(1.0, 1.0, 1.2) == doctest::Approx(0.0));
    Points pts;
    for (int i = 1; i <= 10; ++i) {
        const double rho = i / 10.0;
        pts.emplace_back(rho, 1.0 - std::pow(rho, 1.2));
    }
    const FitResult f = fit_boundary(pts);
    CHECK(std::abs(f.A - 1.0) < 1e-6);
    CHECK(std::abs(f.beta - 1.2) < 1e-6);
    CHECK(f.rmse < 1e-9);
}

TEST_CASE("boundary fit with all rho zero is unidentifiable") {
    CHECK_THROWS_AS(fit_boundary({{0, 1}, {0, 0.9}, {0, 0.8}}), std::invalid_argument);
}

TEST_CASE("equivalence slope is exact on the anti-diagonal") {
    Points pts = {{0.1, 0.9}, {0.4, 0.6}, {0.7, 0.3}, {0.9, 0.1}};
    const SlopeFit s = equivalence_slope(pts);
    CHECK(s.slope == doctest::Approx(-1.0));
    CHECK(s.intercept == doctest::Approx(1.0));
    CHECK(s.rmse < 1e-12);
    CHECK_THROWS_AS(equivalence_slope({{0.5, 0.5}}), std::invalid_argument);
    CHECK_THROWS_AS(equivalence_slope({{0.5, 0.5}, {0.5, 0.6}}), std::invalid_argument);
}

TEST_CASE("fits never lose to the best constant model") {
    RngStream rng(79, "fit-noise");
    for (int trial = 0; trial < 20; ++trial) {
        Points pl, bd;
        for (int c = 3; c <= 10; ++c)
            pl.emplace_back(c, 0.5 * std::pow(c - 2.0, 1.3) * (1.0 + 0.3 * rng.u01()));
        for (int i = 1; i <= 8; ++i)
            bd.emplace_back(i / 8.0, std::clamp(1.0 - std::pow(i / 8.0, 1.1) + 0.1 * rng.u01(), 0.0, 1.0));
        // constant-model rmse in each family's own objective space
        auto const_rmse = [](const Points& pts, bool log_space) {
            double mean = 0;
            for (auto& [x, y] : pts) mean += log_space ? std::log(y) : y;
            mean /= pts.size();
            double sse = 0;
            for (auto& [x, y] : pts) {
                const double e = (log_space ? std::log(y) : y) - mean;
                sse += e * e;
            }
            return std::sqrt(sse / pts.size());
        };
        CHECK(fit_power_law(pl).rmse <= const_rmse(pl, true) + 1e-12);
        CHECK(fit_boundary(bd).rmse <= const_rmse(bd, false) + 1e-12);
        CHECK(equivalence_slope(bd).rmse <= const_rmse(bd, false) + 1e-12);
    }
}

TEST_CASE("fits are pure functions of their points") {
    Points pts;
    for (int c = 3; c <= 12; ++c)
        pts.emplace_back(c, erf_model(c, 0.15, 0.6, 0.8) + 0.01 * ((c * 7) % 5));
    const FitResult a = fit_erf(pts);
    const FitResult b = fit_erf(pts);
    CHECK(a.A == b.A);
    CHECK(a.alpha == b.alpha);
    CHECK(a.beta == b.beta);
    CHECK(a.rmse == b.rmse);
}
