#include <catch2/catch.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "remest/kde.hpp"
#include "remest/rng.hpp"

using remest::SampleBatch;

TEST_CASE("sample batch validation", "[kde]") {
    CHECK_THROWS_AS(SampleBatch(1, {0.5}), std::invalid_argument);
    CHECK_THROWS_AS(SampleBatch(0, {0.5, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(SampleBatch(2, {0.5, 1.0, 2.0}), std::invalid_argument);
    const SampleBatch ok(2, {0.0, 1.0, 2.0, 3.0});
    CHECK(ok.size() == 2);
    CHECK(ok.row(1)[0] == 2.0);
}

TEST_CASE("bandwidth rule on hand-checked batches", "[kde]") {
    // {-1, 0, 1}: s = 1, quartiles at -0.5 / 0.5 under (M-1)p interpolation.
    const auto bw3 = remest::bandwidth(SampleBatch(1, {-1.0, 0.0, 1.0}));
    CHECK(bw3.per_axis_s[0] == Approx(1.0).epsilon(1e-14));
    CHECK(bw3.per_axis_q[0] == Approx(1.0).epsilon(1e-14));
    CHECK(bw3.per_axis_h[0] == Approx(0.63500451900436158).epsilon(1e-12));

    // {-1, 1}: s = sqrt(2), Q = 1.
    const auto bw2 = remest::bandwidth(SampleBatch(1, {-1.0, 1.0}));
    CHECK(bw2.per_axis_s[0] == Approx(std::sqrt(2.0)).epsilon(1e-14));
    CHECK(bw2.per_axis_q[0] == Approx(1.0).epsilon(1e-14));
    CHECK(bw2.per_axis_h[0] == Approx(0.68864447544320268).epsilon(1e-12));
}

TEST_CASE("bandwidth rejects degenerate axes and survives heavy ties", "[kde]") {
    CHECK_THROWS_AS(remest::bandwidth(SampleBatch(1, {2.0, 2.0, 2.0})), std::invalid_argument);
    // Second axis constant while the first varies.
    CHECK_THROWS_AS(remest::bandwidth(SampleBatch(2, {0.0, 5.0, 1.0, 5.0, 2.0, 5.0})),
                    std::invalid_argument);

    // Q = 0 from ties in the middle, s > 0: the positive statistic is used.
    const auto bw = remest::bandwidth(SampleBatch(1, {0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 2.0}));
    CHECK(bw.per_axis_q[0] == 0.0);
    CHECK(bw.per_axis_s[0] > 0.0);
    CHECK(bw.per_axis_h[0] ==
          Approx(1.06 / std::pow(7.0, 0.2) * bw.per_axis_s[0]).epsilon(1e-14));
}

TEST_CASE("fit produces the equal-weight kernel mixture", "[kde]") {
    const SampleBatch batch(1, {-1.0, 1.0});
    const auto model = remest::fit(batch);
    REQUIRE(model.size() == 2);
    CHECK(model.weights()[0] == Approx(0.5).epsilon(1e-15));
    CHECK(model.weights()[1] == Approx(0.5).epsilon(1e-15));
    CHECK(model.means_flat()[0] == -1.0);
    CHECK(model.means_flat()[1] == 1.0);
    CHECK(model.stddevs_flat()[0] == Approx(0.68864447544320268).epsilon(1e-12));

    CHECK(remest::cdf(model, 1e6) == 1.0);
    CHECK(remest::cdf(model, -1e6) == 0.0);
}

TEST_CASE("fitted mean equals the sample mean", "[kde]") {
    remest::Stream stream(7);
    const auto true_model = oracles::benchmark_mixture();
    const remest::MixtureSampler sampler(true_model);
    for (int rep = 0; rep < 5; ++rep) {
        const std::size_t m = 50 + stream.next_u64() % 200;
        SampleBatch batch(1, sampler.sample_many(stream, m));
        const double sample_mean =
            std::accumulate(batch.data.begin(), batch.data.end(), 0.0) /
            static_cast<double>(m);
        CHECK(remest::fit(batch).mean()[0] == Approx(sample_mean).margin(1e-12));
    }
}

TEST_CASE("fit is invariant to sample order", "[kde]") {
    remest::Stream stream(8);
    const remest::MixtureSampler sampler(oracles::benchmark_mixture());
    std::vector<double> data = sampler.sample_many(stream, 64);
    std::vector<double> shuffled = data;
    for (std::size_t i = shuffled.size(); i > 1; --i) {
        std::swap(shuffled[i - 1], shuffled[stream.next_u64() % i]);
    }
    const auto a = remest::fit(SampleBatch(1, data));
    const auto b = remest::fit(SampleBatch(1, shuffled));
    for (double x : {-2.5, -1.0, 0.0, 0.3, 1.7, 3.0}) {
        CHECK(remest::pdf(a, x) == Approx(remest::pdf(b, x)).margin(1e-12));
    }
}

TEST_CASE("integrated squared error shrinks with batch size", "[kde][slow]") {
    // Small-scale consistency trend; the full rate check lives in the
    // acceptance suite.
    const auto true_model = oracles::benchmark_mixture();
    const remest::MixtureSampler sampler(true_model);
    const auto ise = [&](const remest::GaussianMixture& estimate) {
        return oracles::integrate(
            [&](double x) {
                const double d = remest::pdf(estimate, x) - remest::pdf(true_model, x);
                return d * d;
            },
            -6.0, 6.0, 1e-10);
    };
    double mean_small = 0.0, mean_large = 0.0;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        remest::Stream s1(remest::derive_seed(100, seed));
        remest::Stream s2(remest::derive_seed(200, seed));
        mean_small += ise(remest::fit(SampleBatch(1, sampler.sample_many(s1, 200))));
        mean_large += ise(remest::fit(SampleBatch(1, sampler.sample_many(s2, 5000))));
    }
    CHECK(mean_large < mean_small);
}
