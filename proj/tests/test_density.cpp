#include <catch2/catch.hpp>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "remest/density.hpp"

using remest::Ball;
using remest::GaussianComponent;
using remest::GaussianMixture;

namespace {

GaussianMixture standard_normal() {
    return GaussianMixture({{1.0, {0.0}, {1.0}}});
}

}  // namespace

TEST_CASE("mixture construction validates invariants", "[density]") {
    CHECK_THROWS_AS(GaussianMixture(std::vector<GaussianComponent>{}), std::invalid_argument);
    CHECK_THROWS_AS(GaussianMixture({{0.5, {0.0}, {1.0}}, {0.6, {1.0}, {1.0}}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(GaussianMixture({{1.0, {0.0}, {0.0}}}), std::invalid_argument);
    CHECK_THROWS_AS(GaussianMixture({{1.0, {0.0}, {-1.0}}}), std::invalid_argument);
    CHECK_THROWS_AS(GaussianMixture({{0.5, {0.0}, {1.0}}, {0.5, {1.0, 2.0}, {1.0, 1.0}}}),
                    std::invalid_argument);

    // Deviations at text-file rounding scale are renormalized, not rejected.
    const GaussianMixture renorm({{0.5 + 4e-10, {0.0}, {1.0}}, {0.5, {1.0}, {1.0}}});
    double wsum = 0.0;
    for (double w : renorm.weights()) wsum += w;
    CHECK(wsum == Approx(1.0).margin(1e-15));
}

TEST_CASE("pdf matches the closed-form normal density", "[density]") {
    const auto model = standard_normal();
    CHECK(remest::pdf(model, 0.0) == Approx(0.39894228040143268).epsilon(1e-12));

    // Mixture degeneracy: two equal halves of the same component.
    const GaussianMixture split({{0.5, {0.0}, {1.0}}, {0.5, {0.0}, {1.0}}});
    CHECK(remest::pdf(split, 0.0) == Approx(0.39894228040143268).epsilon(1e-12));

    CHECK(remest::pdf(model, 40.0) == Approx(0.0).margin(1e-300));
    CHECK(remest::pdf(model, -40.0) == Approx(0.0).margin(1e-300));

    const std::vector<double> wrong_dim{0.0, 0.0};
    CHECK_THROWS_AS(remest::pdf(model, std::span<const double>(wrong_dim)),
                    std::invalid_argument);
}

TEST_CASE("cdf is the erf-based mixture cdf (d=1 only)", "[density]") {
    const auto model = standard_normal();
    CHECK(remest::cdf(model, 0.0) == Approx(0.5).margin(1e-15));
    CHECK(remest::cdf(model, 1.0) == Approx(0.84134474606854295).epsilon(1e-12));
    CHECK(remest::cdf(model, -1e8) == 0.0);
    CHECK(remest::cdf(model, 1e8) == 1.0);
    CHECK(remest::cdf(model, std::numeric_limits<double>::infinity()) == 1.0);

    const GaussianMixture two_d({{1.0, {0.0, 0.0}, {1.0, 1.0}}});
    CHECK_THROWS_AS(remest::cdf(two_d, 0.0), std::invalid_argument);
}

TEST_CASE("mean and total variance", "[density]") {
    const auto model = standard_normal();
    CHECK(remest::mean(model)[0] == 0.0);
    CHECK(remest::variance_total(model) == Approx(1.0).epsilon(1e-14));

    // Law of total variance on a symmetric two-component mixture.
    const GaussianMixture bimodal({{0.5, {-1.0}, {1.0}}, {0.5, {1.0}, {1.0}}});
    CHECK(remest::mean(bimodal)[0] == Approx(0.0).margin(1e-15));
    CHECK(remest::variance_total(bimodal) == Approx(2.0).epsilon(1e-14));

    const auto bench = oracles::benchmark_mixture();
    CHECK(remest::mean(bench)[0] == Approx(0.1).margin(1e-14));
    CHECK(remest::variance_total(bench) == Approx(2.205).epsilon(1e-12));
}

TEST_CASE("mass_in_ball closed form", "[density]") {
    const auto model = standard_normal();
    CHECK(remest::mass_in_ball(model, Ball({0.0}, 0.0)) == 0.0);
    CHECK(remest::mass_in_ball(model, Ball({0.0}, 1.0)) ==
          Approx(0.6826894921370859).epsilon(1e-12));
    CHECK(remest::mass_in_ball(model, Ball({0.0}, 1e8)) == Approx(1.0).margin(1e-12));

    CHECK_THROWS_AS(Ball({0.0}, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(remest::mass_in_ball(model, Ball({0.0, 0.0}, 1.0)), std::invalid_argument);
}

TEST_CASE("mass_in_ball is nondecreasing in lambda with limits 0 and 1", "[density]") {
    remest::Stream stream(41);
    for (int rep = 0; rep < 20; ++rep) {
        const auto model = oracles::random_mixture(stream);
        const double theta = stream.next_open01() * 6.0 - 3.0;
        double prev = 0.0;
        for (double lambda : {0.0, 0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 25.0, 400.0}) {
            const double m = remest::mass_in_ball(model, Ball({theta}, lambda));
            CHECK(m >= prev - 1e-15);
            prev = m;
        }
        CHECK(prev == Approx(1.0).margin(1e-9));
    }
}

TEST_CASE("partial_mean closed form", "[density]") {
    const auto model = standard_normal();
    for (double lambda : {0.3, 1.0, 4.0}) {
        CHECK(remest::partial_mean(model, Ball({0.0}, lambda))[0] == Approx(0.0).margin(1e-15));
    }
    CHECK(remest::partial_mean(model, Ball({1.3}, 0.0))[0] == 0.0);

    const GaussianMixture shifted({{1.0, {1.0}, {1.0}}});
    CHECK(remest::partial_mean(shifted, Ball({1.0}, 1.0))[0] ==
          Approx(0.6826894921370859).epsilon(1e-12));
}

TEST_CASE("partial_second_moment closed form", "[density]") {
    const auto model = standard_normal();
    CHECK(remest::partial_second_moment(model, Ball({0.7}, 0.0)) == 0.0);
    CHECK(remest::partial_second_moment(model, Ball({0.0}, 1.0)) ==
          Approx(0.1987480430987992).epsilon(1e-12));

    // lambda -> inf recovers the total second moment about the center.
    remest::Stream stream(42);
    for (int rep = 0; rep < 10; ++rep) {
        const auto mix = oracles::random_mixture(stream);
        const double theta = stream.next_open01() * 4.0 - 2.0;
        const double dm = remest::mean(mix)[0] - theta;
        const double expected = remest::variance_total(mix) + dm * dm;
        CHECK(remest::partial_second_moment(mix, Ball({theta}, 1e9)) ==
              Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("in-ball integrand bound: psec <= lambda * mass", "[density]") {
    remest::Stream stream(43);
    for (int rep = 0; rep < 50; ++rep) {
        const auto mix = oracles::random_mixture(stream);
        const double theta = stream.next_open01() * 6.0 - 3.0;
        const double lambda = stream.next_open01() * 4.0;
        const Ball ball({theta}, lambda);
        CHECK(remest::partial_second_moment(mix, ball) <=
              lambda * remest::mass_in_ball(mix, ball) + 1e-12);
    }
}

TEST_CASE("closed forms agree with adaptive quadrature", "[density]") {
    remest::Stream stream(44);
    for (int rep = 0; rep < 25; ++rep) {
        const auto mix = oracles::random_mixture(stream);
        const double theta = stream.next_open01() * 6.0 - 3.0;
        const double lambda = 0.05 + stream.next_open01() * 4.0;
        const double r = std::sqrt(lambda);
        const Ball ball({theta}, lambda);

        const auto f = [&](double x) { return remest::pdf(mix, x); };
        const double mass_q = oracles::integrate(f, theta - r, theta + r);
        const double pmean_q =
            oracles::integrate([&](double x) { return x * f(x); }, theta - r, theta + r);
        const double psec_q = oracles::integrate(
            [&](double x) { return (x - theta) * (x - theta) * f(x); }, theta - r, theta + r);

        CHECK(remest::mass_in_ball(mix, ball) == Approx(mass_q).margin(1e-8));
        CHECK(remest::partial_mean(mix, ball)[0] == Approx(pmean_q).margin(1e-8));
        CHECK(remest::partial_second_moment(mix, ball) == Approx(psec_q).margin(1e-8));
    }
}

TEST_CASE("mixture of one equals the single-Gaussian closed forms", "[density]") {
    const GaussianMixture one({{1.0, {0.4}, {0.7}}});
    const double theta = 1.1, lambda = 0.9;
    const double r = std::sqrt(lambda);
    const double alpha = (theta - r - 0.4) / 0.7;
    const double beta = (theta + r - 0.4) / 0.7;
    const double i0 = remest::math::normal_cdf(beta) - remest::math::normal_cdf(alpha);
    const double i1 = remest::math::normal_pdf(alpha) - remest::math::normal_pdf(beta);
    CHECK(remest::mass_in_ball(one, Ball({theta}, lambda)) == Approx(i0).epsilon(1e-14));
    CHECK(remest::partial_mean(one, Ball({theta}, lambda))[0] ==
          Approx(0.4 * i0 + 0.7 * i1).epsilon(1e-13));
}

TEST_CASE("d=2 ball integrals match chi-square closed forms", "[density][qmc]") {
    const GaussianMixture iso({{1.0, {0.0, 0.0}, {1.0, 1.0}}});
    const Ball unit({0.0, 0.0}, 1.0);

    // ||X||^2 ~ chi^2_2: P(<= l) = 1 - exp(-l/2), E[||X||^2 1(<= l)] = 2-(l+2)exp(-l/2).
    CHECK(remest::mass_in_ball(iso, unit) == Approx(0.39346934028736658).margin(5e-4));
    CHECK(remest::partial_second_moment(iso, unit) == Approx(0.18040802086209973).margin(1e-3));
    const auto pm = remest::partial_mean(iso, unit);
    CHECK(pm[0] == Approx(0.0).margin(1e-3));
    CHECK(pm[1] == Approx(0.0).margin(1e-3));

    const auto est = remest::mass_in_ball_qmc(iso, unit);
    CHECK(est.value == remest::mass_in_ball(iso, unit));
    CHECK(est.error_estimate > 0.0);
    CHECK(std::abs(est.value - 0.39346934028736658) <= 10.0 * est.error_estimate);

    // Determinism of the fixed point set.
    CHECK(remest::mass_in_ball(iso, unit) == remest::mass_in_ball(iso, unit));
}
