#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "oracles.hpp"
#include "signalroot/normal.hpp"
#include "signalroot/significance.hpp"

using namespace signalroot;

namespace {

std::shared_ptr<const PivotEngine> single_engine() {
    static auto engine = std::make_shared<const PivotEngine>(oracle::single_channel_case());
    return engine;
}

std::shared_ptr<const PivotEngine> ten_engine() {
    static auto engine = std::make_shared<const PivotEngine>(oracle::ten_channel_case());
    return engine;
}

}  // namespace

TEST_CASE("p-values at psi0 = 0 reproduce 0.163 (r) and 0.127 (r*)") {
    const SignificanceFunction sig_r(single_engine(), Method::r);
    const SignificanceFunction sig_rstar(single_engine(), Method::rstar);
    CHECK(p_value(sig_r, 0.0) == doctest::Approx(0.163).epsilon(7e-3));
    CHECK(p_value(sig_rstar, 0.0) == doctest::Approx(0.127).epsilon(1.6e-2));
}

TEST_CASE("p-value at psi_hat is one half for the r method") {
    const SignificanceFunction sig(single_engine(), Method::r);
    CHECK(p_value(sig, sig.psi_hat()) == doctest::Approx(0.5).epsilon(1e-4));
}

TEST_CASE("bounds: single-channel reference values at alpha = 0.01") {
    SUBCASE("modified root: -2.603 and 36.519") {
        const SignificanceFunction sig(single_engine(), Method::rstar);
        const BoundResult lo = bound(sig, 0.01, Side::lower);
        const BoundResult hi = bound(sig, 0.01, Side::upper);
        CHECK(lo.raw == doctest::Approx(-2.603).epsilon(3.9e-3));
        CHECK(lo.clamped == 0.0);
        CHECK(hi.raw == doctest::Approx(36.519).epsilon(5.5e-4));
        CHECK(hi.clamped == doctest::Approx(hi.raw));
    }
    SUBCASE("likelihood root: -2.644 and 33.835") {
        const SignificanceFunction sig(single_engine(), Method::r);
        CHECK(bound(sig, 0.01, Side::lower).raw == doctest::Approx(-2.644).epsilon(3.8e-3));
        CHECK(bound(sig, 0.01, Side::upper).raw == doctest::Approx(33.835).epsilon(6e-4));
    }
    SUBCASE("Bayesian analogue: -1.820 and 35.094") {
        const SignificanceFunction sig(single_engine(), Method::rstar_bayes);
        CHECK(bound(sig, 0.01, Side::lower).raw == doctest::Approx(-1.820).epsilon(5.5e-3));
        CHECK(bound(sig, 0.01, Side::upper).raw == doctest::Approx(35.094).epsilon(5.7e-4));
    }
}

TEST_CASE("bounds: ten-channel reference values at alpha = 0.01") {
    const SignificanceFunction rstar(ten_engine(), Method::rstar);
    CHECK(bound(rstar, 0.01, Side::lower).raw == doctest::Approx(4.572).epsilon(4.4e-3));
    CHECK(bound(rstar, 0.01, Side::upper).raw == doctest::Approx(23.191).epsilon(8.7e-4));
    const SignificanceFunction r(ten_engine(), Method::r);
    CHECK(bound(r, 0.01, Side::lower).raw == doctest::Approx(4.496).epsilon(4.5e-3));
    CHECK(bound(r, 0.01, Side::upper).raw == doctest::Approx(22.907).epsilon(8.8e-4));
}

TEST_CASE("median-unbiased estimates") {
    SUBCASE("single channel: 4.966 (r*), psi_hat for r") {
        const SignificanceFunction rstar(single_engine(), Method::rstar);
        CHECK(median_unbiased(rstar) == doctest::Approx(4.966).epsilon(1.1e-3));
        const SignificanceFunction r(single_engine(), Method::r);
        CHECK(median_unbiased(r) == doctest::Approx(r.psi_hat()).epsilon(1e-5));
    }
    SUBCASE("ten channels: 11.682 (r*), 11.487 (r), 11.632 (Bayes)") {
        const SignificanceFunction rstar(ten_engine(), Method::rstar);
        CHECK(median_unbiased(rstar) == doctest::Approx(11.682).epsilon(9e-4));
        const SignificanceFunction r(ten_engine(), Method::r);
        CHECK(median_unbiased(r) == doctest::Approx(11.487).epsilon(4.4e-4));
        const SignificanceFunction bayes(ten_engine(), Method::rstar_bayes);
        CHECK(median_unbiased(bayes) == doctest::Approx(11.632).epsilon(9e-4));
    }
}

TEST_CASE("round trip: p_value at a bound returns its level") {
    for (Method m : {Method::r, Method::rstar, Method::rstar_bayes}) {
        const SignificanceFunction sig(single_engine(), m);
        for (double alpha : {0.01, 0.05, 0.2}) {
            const double upper = bound(sig, alpha, Side::upper).raw;
            CHECK(p_value(sig, upper) == doctest::Approx(1.0 - alpha).epsilon(1e-6));
            const double lower = bound(sig, alpha, Side::lower).raw;
            CHECK(p_value(sig, lower) == doctest::Approx(alpha).epsilon(1e-6));
        }
    }
}

TEST_CASE("two-sided interval contains the median-unbiased estimate") {
    for (Method m : {Method::r, Method::rstar, Method::rstar_bayes}) {
        const SignificanceFunction sig(ten_engine(), m);
        const double mid = median_unbiased(sig);
        for (double alpha : {0.01, 0.1, 0.4}) {
            CHECK(bound(sig, alpha, Side::lower).raw < mid);
            CHECK(mid < bound(sig, alpha, Side::upper).raw);
        }
    }
}

TEST_CASE("alpha outside (0, 0.5) is rejected") {
    const SignificanceFunction sig(single_engine(), Method::r);
    CHECK_THROWS_AS(bound(sig, 0.0, Side::lower), std::invalid_argument);
    CHECK_THROWS_AS(bound(sig, 0.5, Side::upper), std::invalid_argument);
}

TEST_CASE("significance function is monotone decreasing on a 200-point grid") {
    for (Method m : {Method::r, Method::rstar, Method::rstar_bayes}) {
        const SignificanceFunction single(single_engine(), m);
        CHECK(single.monotonicity_violations(200) == 0);
        const SignificanceFunction ten(ten_engine(), m);
        CHECK(ten.monotonicity_violations(200) == 0);
    }
}

TEST_CASE("significance table") {
    const auto engine = ten_engine();
    SUBCASE("row at psi_hat has Phi(r) = 0.5 and agrees with p_value to 1e-9") {
        const SignificanceFunction sig_r(engine, Method::r);
        const SignificanceFunction sig_rstar(engine, Method::rstar);
        const std::vector<double> grid = {8.0, engine->psi_hat(), 15.0};
        const auto rows = significance_table(*engine, grid);
        REQUIRE(rows.size() == 3);
        CHECK(rows[1].phi_r == doctest::Approx(0.5).epsilon(1e-6));
        for (std::size_t i = 0; i < grid.size(); ++i) {
            CHECK(rows[i].phi_r == doctest::Approx(1.0 - p_value(sig_r, grid[i])).epsilon(1e-9));
            CHECK(rows[i].phi_rstar ==
                  doctest::Approx(1.0 - p_value(sig_rstar, grid[i])).epsilon(1e-9));
        }
    }
    SUBCASE("auto grid spans the 0.001/0.999 bounds and columns decrease") {
        const auto grid = auto_grid(*engine, 41);
        REQUIRE(grid.size() == 41);
        const auto rows = significance_table(*engine, grid);
        CHECK(rows.front().phi_r == doctest::Approx(0.999).epsilon(1e-4));
        CHECK(rows.back().phi_r == doctest::Approx(0.001).epsilon(1e-2));
        for (std::size_t i = 1; i < rows.size(); ++i) {
            CHECK(rows[i].phi_r < rows[i - 1].phi_r);
            CHECK(rows[i].phi_rstar < rows[i - 1].phi_rstar + 1e-6);
            CHECK(rows[i].phi_rstar_bayes < rows[i - 1].phi_rstar_bayes + 1e-6);
        }
    }
}

TEST_CASE("degenerate data: negative upper bound carries the model-doubt flag") {
    Dataset d;
    d.channels.push_back({0, 200, 20, 1.0, 1.0});
    const auto report = analyze(d, {Method::r}, {0.01}, {0.0});
    REQUIRE(report.methods.size() == 1);
    const auto& b = report.methods[0].bounds[0];
    CHECK(b.upper_raw < 0.0);
    CHECK(b.upper_clamped == 0.0);
    CHECK(b.model_doubt);
}

TEST_CASE("analyze: full report on the single-channel data") {
    const auto report = analyze(oracle::single_channel_case(),
                                {Method::r, Method::rstar, Method::rstar_bayes}, {0.01}, {0.0});
    CHECK(report.n_channels == 1);
    CHECK(report.psi_hat == doctest::Approx(4.021).epsilon(2.5e-4));
    CHECK(report.monotonicity_violations == 0);
    CHECK_FALSE(report.any_fallback());
    REQUIRE(report.methods.size() == 3);
    CHECK(report.methods[1].median_unbiased == doctest::Approx(4.966).epsilon(1.1e-3));
    CHECK(report.methods[1].p_values[0].p == doctest::Approx(0.127).epsilon(1.6e-2));
    CHECK(report.methods[2].median_unbiased == doctest::Approx(4.918).epsilon(1.1e-3));
    // extended lower limit is -zeta_hat = -(y2/t)/(y3/u)
    CHECK(report.psi_lower_limit ==
          doctest::Approx(-(8.0 / 27.0) / (14.0 / 80.0)).epsilon(1e-6));
}

TEST_CASE("analyze: fallback reported for boundary data") {
    Dataset d;
    d.channels.push_back({0, 5, 10, 10.0, 20.0});
    const auto report = analyze(d, {Method::rstar}, {0.1}, {0.5});
    CHECK(report.mle_boundary);
    CHECK(report.any_fallback());
}

TEST_CASE("clamping never alters p-values, only bounds") {
    const SignificanceFunction sig(single_engine(), Method::rstar);
    const BoundResult lo = bound(sig, 0.01, Side::lower);
    REQUIRE(lo.raw < 0.0);
    CHECK(lo.clamped == 0.0);
    // the p-value at 0 is untouched by clamping and stays strictly inside (0,1)
    const double p0 = p_value(sig, 0.0);
    CHECK(p0 > 0.0);
    CHECK(p0 < 1.0);
}
