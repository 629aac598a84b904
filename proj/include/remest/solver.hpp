#pragma once

// Saddle-point policy design for threshold transmission over a capacity-
// constrained channel. The transmit rule is gamma(x) = 1(||x-theta||^2 >
// lambda); the solver alternates a convex-concave inner recursion on theta
// with a bisection root-solve on lambda until both saddle conditions
//   P(||X-theta||^2 > lambda) = target    and    theta = E[X 1(ball)] / P(ball)
// hold at the design target transmit probability kappa_bar - delta.

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "remest/density.hpp"

namespace remest {

/// Threshold policy (theta, lambda): transmit iff ||x - theta||^2 > lambda.
struct Policy {
    Policy(std::vector<double> theta, double lambda)
        : theta(std::move(theta)), lambda(lambda) {
        if (!(this->lambda >= 0.0)) throw std::invalid_argument("Policy: lambda must be >= 0");
        for (double t : this->theta) {
            if (!std::isfinite(t)) throw std::invalid_argument("Policy: theta must be finite");
        }
    }
    std::vector<double> theta;
    double lambda;
};

struct SolverConfig {
    double kappa_bar = 0.5;   // asymptotic channel capacity, in (0,1)
    double delta = 0.0;       // capacity back-off; design target is kappa_bar - delta
    double theta_tol = 1e-9;
    double lambda_tol = 1e-9;
    int max_inner_iters = 10000;
    int max_outer_iters = 1000;

    double target_kappa() const { return kappa_bar - delta; }

    void validate() const {
        if (!(kappa_bar > 0.0 && kappa_bar < 1.0)) {
            throw std::invalid_argument("SolverConfig: kappa_bar must be in (0,1)");
        }
        if (!(delta >= 0.0 && delta < kappa_bar)) {
            throw std::invalid_argument("SolverConfig: delta must be in [0, kappa_bar)");
        }
        if (!(theta_tol > 0.0) || !(lambda_tol > 0.0)) {
            throw std::invalid_argument("SolverConfig: tolerances must be positive");
        }
        if (max_inner_iters < 1 || max_outer_iters < 1) {
            throw std::invalid_argument("SolverConfig: iteration caps must be >= 1");
        }
    }
};

struct OuterRecord {
    std::vector<double> theta;
    double lambda = 0.0;
    double objective = 0.0;
    double constraint_residual = 0.0;  // |P(U=1) - target|
};

struct SolveTrace {
    std::vector<OuterRecord> outer;
    bool converged = false;
    int outer_iters = 0;
    long total_inner_iters = 0;
};

/// Inner-recursion result; `history` keeps every theta iterate so descent of
/// the penalized Lagrangian can be audited step by step.
struct CcpResult {
    std::vector<double> theta;
    int iters = 0;
    bool converged = false;
    std::vector<std::vector<double>> history;
};

namespace detail {

inline double norm_diff(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

}  // namespace detail

/// P(U=1) = P(||X - theta||^2 > lambda).
inline double transmit_prob(const GaussianMixture& model, const Policy& policy) {
    return 1.0 - mass_in_ball(model, Ball(policy.theta, policy.lambda));
}

/// Solve P(||X - theta||^2 > lambda) = target_kappa for lambda by bracketing
/// bisection on the monotone map lambda -> mass_in_ball. For d > 1 the mass
/// is a quasi-Monte-Carlo average and therefore a step function of lambda, so
/// the residual tolerance is floored at the largest possible step.
inline double solve_lambda(const GaussianMixture& model, std::span<const double> theta,
                           double target_kappa, double lambda_tol = 1e-9) {
    if (!(target_kappa > 0.0 && target_kappa < 1.0)) {
        throw std::invalid_argument("solve_lambda: target_kappa must be in (0,1)");
    }
    if (model.dim() > 1) {
        double max_w = 0.0;
        for (double w : model.weights()) max_w = std::max(max_w, w);
        lambda_tol = std::max(lambda_tol, 2.0 * max_w / detail::kQmcPoints);
    }
    const double target_mass = 1.0 - target_kappa;
    std::vector<double> center(theta.begin(), theta.end());
    const auto mass_at = [&](double lambda) {
        double mass = 0.0, second = 0.0;
        detail::ball_moments<false, false>(model, center, lambda, mass, nullptr, second);
        return mass;
    };

    double lo = 0.0;
    double hi = 1.0;
    int doublings = 0;
    double mass_hi = mass_at(hi);
    while (mass_hi < target_mass) {
        hi *= 2.0;
        mass_hi = mass_at(hi);
        if (++doublings > 300) {
            throw std::runtime_error("solve_lambda: bracket expansion failed");
        }
    }
    // Narrow until the feasible endpoint (mass >= target) meets the tolerance
    // and return that side, so the constraint is never overshot. The bracket
    // itself is also tightened so the returned lambda is stable to ~1e-11
    // under perturbations of theta; outer-loop convergence checks rely on it.
    const double width_tol = 1e-11 * std::max(1.0, hi);
    for (int it = 0;
         it < 700 && (mass_hi - target_mass > lambda_tol || hi - lo > width_tol); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double m = mass_at(mid);
        if (m >= target_mass) {
            hi = mid;
            mass_hi = m;
        } else {
            lo = mid;
        }
        if (hi - lo <= std::numeric_limits<double>::epsilon() * std::max(1.0, hi)) break;
    }
    if (mass_hi - target_mass > 1e3 * lambda_tol) {
        throw std::runtime_error("solve_lambda: bisection failed to meet tolerance");
    }
    return hi;
}

/// g_lambda(theta) = -2 E[(X - theta) 1(||X-theta||^2 > lambda)].
inline std::vector<double> subgradient(const GaussianMixture& model, const Policy& policy) {
    const int d = model.dim();
    std::vector<double> first(d, 0.0);
    double mass = 0.0, second = 0.0;
    detail::ball_moments<true, false>(model, policy.theta, policy.lambda, mass, first.data(),
                                      second);
    const auto& mu = model.mean();
    std::vector<double> g(d);
    for (int j = 0; j < d; ++j) {
        g[j] = -2.0 * ((mu[j] - first[j]) - policy.theta[j] * (1.0 - mass));
    }
    return g;
}

/// One convex-concave step: theta' = E[X 1(ball)] + theta P(outside).
inline std::vector<double> ccp_step(const GaussianMixture& model,
                                    std::span<const double> theta, double lambda) {
    const int d = model.dim();
    std::vector<double> center(theta.begin(), theta.end());
    std::vector<double> first(d, 0.0);
    double mass = 0.0, second = 0.0;
    detail::ball_moments<true, false>(model, center, lambda, mass, first.data(), second);
    std::vector<double> next(d);
    for (int j = 0; j < d; ++j) {
        next[j] = first[j] + theta[j] * (1.0 - mass);
    }
    return next;
}

/// Iterate ccp_step at fixed lambda until ||theta_{l+1} - theta_l|| <= theta_tol.
/// Hitting the iteration cap is flagged, not thrown.
inline CcpResult ccp_solve(const GaussianMixture& model, std::span<const double> theta_init,
                           double lambda, const SolverConfig& config) {
    for (double t : theta_init) {
        if (!std::isfinite(t)) throw std::invalid_argument("ccp_solve: theta_init not finite");
    }
    CcpResult result;
    std::vector<double> theta(theta_init.begin(), theta_init.end());
    result.history.push_back(theta);
    for (int it = 0; it < config.max_inner_iters; ++it) {
        std::vector<double> next = ccp_step(model, theta, lambda);
        result.iters = it + 1;
        const double step = detail::norm_diff(next, theta);
        theta = std::move(next);
        result.history.push_back(theta);
        if (step <= config.theta_tol) {
            result.converged = true;
            break;
        }
    }
    result.theta = std::move(theta);
    return result;
}

/// Asymptotic NMSE of a policy: the collision-free regime pays the in-ball
/// quantization error; past capacity everything collapses to E[||X-E[X]||^2].
inline double objective(const GaussianMixture& model, const Policy& policy, double kappa_bar) {
    if (transmit_prob(model, policy) <= kappa_bar) {
        return partial_second_moment(model, Ball(policy.theta, policy.lambda));
    }
    return variance_total(model);
}

/// Penalized Lagrangian E[min{||X-theta||^2, lambda}] - lambda*kappa_bar.
inline double lagrangian_tilde(const GaussianMixture& model, std::span<const double> theta,
                               double lambda, double kappa_bar) {
    std::vector<double> center(theta.begin(), theta.end());
    double mass = 0.0, second = 0.0;
    detail::ball_moments<false, true>(model, center, lambda, mass, nullptr, second);
    return second + lambda * (1.0 - mass) - lambda * kappa_bar;
}

/// Full alternation: theta_0 = E[X] (unless overridden), lambda solved at the
/// design target, then inner recursion and root-solve alternate until both
/// iterates settle. The plain alternation can lock into a two-cycle when the
/// inner recursion hops between basins as lambda moves; on detecting one, the
/// lambda update is relaxed (adaptively damped) until the pair settles. The
/// exit pair always carries an exactly solved lambda, so the constraint
/// residual is bounded by lambda_tol regardless of damping. Non-convergence
/// is reported through the trace.
inline std::pair<Policy, SolveTrace> alternating_solve(
    const GaussianMixture& model, const SolverConfig& config,
    std::optional<std::vector<double>> theta_init = std::nullopt) {
    config.validate();
    const double target = config.target_kappa();

    std::vector<double> theta = theta_init ? std::move(*theta_init) : model.mean();
    detail::check_dim(model, theta.size(), "alternating_solve");
    double lambda = solve_lambda(model, theta, target, config.lambda_tol);

    SolveTrace trace;
    const auto record = [&](std::span<const double> th, double lam) {
        Policy p({th.begin(), th.end()}, lam);
        trace.outer.push_back(OuterRecord{p.theta, lam, objective(model, p, config.kappa_bar),
                                          std::abs(transmit_prob(model, p) - target)});
    };
    record(theta, lambda);

    double relaxation = 1.0;
    std::vector<double> theta_before_prev;
    for (int k = 0; k < config.max_outer_iters; ++k) {
        CcpResult inner = ccp_solve(model, theta, lambda, config);
        trace.total_inner_iters += inner.iters;
        std::vector<double> new_theta = std::move(inner.theta);
        const double lambda_exact = solve_lambda(model, new_theta, target, config.lambda_tol);
        trace.outer_iters = k + 1;

        const double theta_change = detail::norm_diff(new_theta, theta);
        const double lambda_residual = std::abs(lambda_exact - lambda);
        if (inner.converged && theta_change <= config.theta_tol &&
            lambda_residual <= config.lambda_tol * std::max(1.0, lambda_exact)) {
            record(new_theta, lambda_exact);
            trace.converged = true;
            theta = std::move(new_theta);
            lambda = lambda_exact;
            break;
        }

        // Two-cycle: this iterate repeats the one two steps back while the
        // last step is still large.
        if (!theta_before_prev.empty() &&
            detail::norm_diff(new_theta, theta_before_prev) <= 1e-6 &&
            theta_change > 1e-6) {
            relaxation = std::max(0.5 * relaxation, 1.0 / 256.0);
        }
        const double new_lambda = lambda + relaxation * (lambda_exact - lambda);
        record(new_theta, new_lambda);
        theta_before_prev = std::move(theta);
        theta = std::move(new_theta);
        lambda = new_lambda;
    }
    return {Policy(std::move(theta), lambda), std::move(trace)};
}

}  // namespace remest
