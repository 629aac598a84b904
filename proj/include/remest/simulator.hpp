#pragma once

// Finite-n Monte Carlo validation of the mean-field limit. n sensors apply
// the threshold policy to iid draws; if more than kappa(n) transmit, the slot
// is lost and every observation falls back to the global-mean estimate.
// Trials use independent counter-based streams keyed by (seed, trial), and
// per-trial statistics are reduced in trial order, so the report is
// bit-identical for any thread count.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <thread>
#include <vector>

#include "remest/rng.hpp"
#include "remest/solver.hpp"

namespace remest {

struct ChannelSpec {
    long n = 0;
    long capacity = 0;  // kappa(n), number of simultaneous transmissions served
    double kappa_bar = 0.0;

    /// capacity = ceil(kappa_bar * n).
    static ChannelSpec from_kappa(long n, double kappa_bar) {
        ChannelSpec spec;
        spec.n = n;
        spec.kappa_bar = kappa_bar;
        spec.capacity = static_cast<long>(std::ceil(kappa_bar * static_cast<double>(n)));
        spec.validate();
        return spec;
    }

    void validate() const {
        if (n < 1) throw std::invalid_argument("ChannelSpec: n must be >= 1");
        if (capacity < 0 || capacity > n) {
            throw std::invalid_argument("ChannelSpec: capacity must be in [0, n]");
        }
    }
};

struct SimulationReport {
    long trials = 0;
    double nmse_mean = 0.0;
    double nmse_half_width = 0.0;  // 95% normal-approximation half-width
    double collision_freq = 0.0;
    double empirical_transmit_rate = 0.0;
};

struct CollisionCurvePoint {
    long n = 0;
    double collision_freq = 0.0;
};

namespace detail {

struct TrialOutcome {
    double nmse = 0.0;
    double transmit_rate = 0.0;
    bool collided = false;
};

inline TrialOutcome run_trial(const GaussianMixture& model, const MixtureSampler& sampler,
                              const Policy& policy, const ChannelSpec& channel,
                              std::uint64_t trial_seed) {
    const int d = model.dim();
    Stream stream(trial_seed);
    std::vector<double> x(d);
    const auto& alpha = model.mean();  // collision-regime estimate

    long transmitted = 0;
    double sum_sq_theta = 0.0;  // sum ||x - theta||^2 over silent sensors
    double sum_sq_alpha = 0.0;  // sum ||x - alpha||^2 over all sensors
    for (long i = 0; i < channel.n; ++i) {
        sampler.sample(stream, x);
        double dist_theta = 0.0;
        double dist_alpha = 0.0;
        for (int j = 0; j < d; ++j) {
            const double dt = x[j] - policy.theta[j];
            const double da = x[j] - alpha[j];
            dist_theta += dt * dt;
            dist_alpha += da * da;
        }
        if (dist_theta > policy.lambda) {
            ++transmitted;
        } else {
            sum_sq_theta += dist_theta;
        }
        sum_sq_alpha += dist_alpha;
    }
    TrialOutcome out;
    out.collided = transmitted > channel.capacity;
    const double contribution = out.collided ? sum_sq_alpha : sum_sq_theta;
    out.nmse = contribution / static_cast<double>(channel.n);
    out.transmit_rate = static_cast<double>(transmitted) / static_cast<double>(channel.n);
    return out;
}

}  // namespace detail

/// Monte Carlo estimate of the finite-n NMSE and collision frequency.
inline SimulationReport simulate(const GaussianMixture& model, const Policy& policy,
                                 const ChannelSpec& channel, long trials, std::uint64_t seed,
                                 unsigned n_threads = 0) {
    channel.validate();
    if (trials < 1) throw std::invalid_argument("simulate: trials must be >= 1");
    detail::check_dim(model, policy.theta.size(), "simulate");

    const MixtureSampler sampler(model);
    std::vector<detail::TrialOutcome> outcomes(static_cast<std::size_t>(trials));

    if (n_threads == 0) n_threads = std::max(1u, std::thread::hardware_concurrency());
    const auto worker = [&](long begin, long end) {
        for (long t = begin; t < end; ++t) {
            outcomes[static_cast<std::size_t>(t)] = detail::run_trial(
                model, sampler, policy, channel, derive_seed(seed, static_cast<std::uint64_t>(t)));
        }
    };
    if (n_threads <= 1 || trials < 4) {
        worker(0, trials);
    } else {
        const long chunk = (trials + static_cast<long>(n_threads) - 1) / n_threads;
        std::vector<std::thread> pool;
        for (long begin = 0; begin < trials; begin += chunk) {
            pool.emplace_back(worker, begin, std::min(trials, begin + chunk));
        }
        for (auto& th : pool) th.join();
    }

    // Serial reduction in trial order keeps the result thread-count invariant.
    SimulationReport report;
    report.trials = trials;
    double nmse_sum = 0.0;
    double rate_sum = 0.0;
    long collisions = 0;
    for (const auto& o : outcomes) {
        nmse_sum += o.nmse;
        rate_sum += o.transmit_rate;
        collisions += o.collided ? 1 : 0;
    }
    report.nmse_mean = nmse_sum / static_cast<double>(trials);
    report.empirical_transmit_rate = rate_sum / static_cast<double>(trials);
    report.collision_freq = static_cast<double>(collisions) / static_cast<double>(trials);
    if (trials > 1) {
        double ss = 0.0;
        for (const auto& o : outcomes) {
            const double dev = o.nmse - report.nmse_mean;
            ss += dev * dev;
        }
        const double stderr_nmse =
            std::sqrt(ss / static_cast<double>(trials - 1) / static_cast<double>(trials));
        report.nmse_half_width = 1.96 * stderr_nmse;
    }
    return report;
}

/// collision_freq as a function of n at capacity ceil(kappa_bar * n); exposes
/// the 0/1 dichotomy of the mean-field limit.
inline std::vector<CollisionCurvePoint> collision_curve(const GaussianMixture& model,
                                                        const Policy& policy, double kappa_bar,
                                                        const std::vector<long>& n_list,
                                                        long trials, std::uint64_t seed) {
    std::vector<CollisionCurvePoint> curve;
    curve.reserve(n_list.size());
    for (std::size_t i = 0; i < n_list.size(); ++i) {
        const auto channel = ChannelSpec::from_kappa(n_list[i], kappa_bar);
        const auto report =
            simulate(model, policy, channel, trials, derive_seed(seed, i));
        curve.push_back({n_list[i], report.collision_freq});
    }
    return curve;
}

}  // namespace remest
