#pragma once

// Data-driven design sweep: repeatedly draw a batch from the true model, fit
// a KDE, design a policy on the fit at transmit target kappa_bar - delta,
// then score that policy against the true model. Aggregated over a (M, delta)
// grid this measures how often estimation error pushes the true transmit
// probability past capacity, and what the back-off costs in NMSE.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "remest/kde.hpp"
#include "remest/rng.hpp"
#include "remest/solver.hpp"

namespace remest {

struct ExperimentSpec {
    GaussianMixture true_model;
    double kappa_bar = 0.5;
    std::vector<double> delta_list;
    std::vector<long> m_list;        // batch sizes
    int batches_per_cell = 50;
    std::uint64_t seed = 0;
    SolverConfig solver;             // kappa_bar/delta fields overridden per cell

    void validate() const {
        if (delta_list.empty()) throw std::invalid_argument("ExperimentSpec: empty delta grid");
        if (m_list.empty()) throw std::invalid_argument("ExperimentSpec: empty M grid");
        if (!(kappa_bar > 0.0 && kappa_bar < 1.0)) {
            throw std::invalid_argument("ExperimentSpec: kappa_bar must be in (0,1)");
        }
        for (double d : delta_list) {
            if (!(d > 0.0 && d < kappa_bar)) {
                throw std::invalid_argument("ExperimentSpec: delta must be in (0, kappa_bar)");
            }
        }
        for (long m : m_list) {
            if (m < 2) throw std::invalid_argument("ExperimentSpec: M must be >= 2");
        }
        if (batches_per_cell < 1) {
            throw std::invalid_argument("ExperimentSpec: batches_per_cell must be >= 1");
        }
    }
};

/// One (M, delta) cell of the sweep.
struct CellResult {
    long m = 0;
    double delta = 0.0;
    double violation_freq = 0.0;   // fraction of batches with true P(U=1) > kappa_bar
    double nmse_mean = 0.0;        // true-model NMSE of the designed policies
    double nmse_std = 0.0;
    double theory_rate = 0.0;      // 1 / (delta * M^{2/(d+4)}), unnormalized reference
    int degenerate_batches = 0;    // KDE failures, counted not fatal
    int non_converged = 0;
    double max_design_residual = 0.0;  // max |P_kde(U=1) - (kappa_bar - delta)|
};

struct TrendSummary {
    double fixed_value = 0.0;  // the delta (for M trends) or M (for delta trends)
    bool nonincreasing = false;
};

struct ExperimentReport {
    double kappa_bar = 0.0;
    std::uint64_t seed = 0;
    int batches_per_cell = 0;
    std::vector<CellResult> cells;                  // M-major, delta-minor
    std::vector<TrendSummary> violation_trend_in_m;      // per delta, across ascending M
    std::vector<TrendSummary> violation_trend_in_delta;  // per M, across ascending delta
};

namespace detail {

struct BatchOutcome {
    bool degenerate = false;
    bool converged = false;
    bool violated = false;
    double true_nmse = 0.0;
    double design_residual = 0.0;
};

inline BatchOutcome run_batch(const GaussianMixture& true_model, double kappa_bar, double delta,
                              long m, std::uint64_t batch_seed, const SolverConfig& base) {
    BatchOutcome out;
    Stream stream(batch_seed);
    const MixtureSampler sampler(true_model);
    SampleBatch batch(true_model.dim(),
                      sampler.sample_many(stream, static_cast<std::size_t>(m)), batch_seed,
                      "drawn from model");
    SolverConfig config = base;
    config.kappa_bar = kappa_bar;
    config.delta = delta;
    try {
        const GaussianMixture estimate = fit(batch);
        auto [policy, trace] = alternating_solve(estimate, config);
        out.converged = trace.converged;
        out.design_residual =
            std::abs(transmit_prob(estimate, policy) - config.target_kappa());
        const double p_true = transmit_prob(true_model, policy);
        out.violated = p_true > kappa_bar;
        out.true_nmse = objective(true_model, policy, kappa_bar);
    } catch (const std::invalid_argument&) {
        out.degenerate = true;
    }
    return out;
}

}  // namespace detail

/// Run B batches for one (M, delta) cell. Batch b uses stream derive_seed(seed, b).
inline CellResult run_cell(const GaussianMixture& true_model, double kappa_bar, double delta,
                           long m, int batches, std::uint64_t seed,
                           const SolverConfig& base = SolverConfig{}, unsigned n_threads = 0) {
    if (!(delta > 0.0 && delta < kappa_bar)) {
        throw std::invalid_argument("run_cell: delta must be in (0, kappa_bar)");
    }
    if (m < 2 || batches < 1) throw std::invalid_argument("run_cell: invalid M or batch count");

    std::vector<detail::BatchOutcome> outcomes(static_cast<std::size_t>(batches));
    if (n_threads == 0) n_threads = std::max(1u, std::thread::hardware_concurrency());
    const auto worker = [&](int begin, int end) {
        for (int b = begin; b < end; ++b) {
            outcomes[static_cast<std::size_t>(b)] =
                detail::run_batch(true_model, kappa_bar, delta, m,
                                  derive_seed(seed, static_cast<std::uint64_t>(b)), base);
        }
    };
    if (n_threads <= 1 || batches < 2) {
        worker(0, batches);
    } else {
        const int chunk = (batches + static_cast<int>(n_threads) - 1) / static_cast<int>(n_threads);
        std::vector<std::thread> pool;
        for (int begin = 0; begin < batches; begin += chunk) {
            pool.emplace_back(worker, begin, std::min(batches, begin + chunk));
        }
        for (auto& th : pool) th.join();
    }

    CellResult cell;
    cell.m = m;
    cell.delta = delta;
    cell.theory_rate =
        1.0 / (delta * std::pow(static_cast<double>(m),
                                2.0 / (static_cast<double>(true_model.dim()) + 4.0)));
    long violations = 0;
    std::vector<double> nmse;
    nmse.reserve(outcomes.size());
    for (const auto& o : outcomes) {
        if (o.degenerate) {
            ++cell.degenerate_batches;
            continue;
        }
        if (!o.converged) ++cell.non_converged;
        if (o.violated) ++violations;
        cell.max_design_residual = std::max(cell.max_design_residual, o.design_residual);
        nmse.push_back(o.true_nmse);
    }
    cell.violation_freq = static_cast<double>(violations) / static_cast<double>(batches);
    if (!nmse.empty()) {
        double sum = 0.0;
        for (double v : nmse) sum += v;
        cell.nmse_mean = sum / static_cast<double>(nmse.size());
        if (nmse.size() > 1) {
            double ss = 0.0;
            for (double v : nmse) ss += (v - cell.nmse_mean) * (v - cell.nmse_mean);
            cell.nmse_std = std::sqrt(ss / static_cast<double>(nmse.size() - 1));
        }
    }
    return cell;
}

/// Full (M, delta) grid with per-cell seeds derived from (seed, M index,
/// delta index); cells are independent and reproducible in isolation.
inline ExperimentReport run_experiment(const ExperimentSpec& spec, unsigned n_threads = 0) {
    spec.validate();
    ExperimentReport report;
    report.kappa_bar = spec.kappa_bar;
    report.seed = spec.seed;
    report.batches_per_cell = spec.batches_per_cell;

    for (std::size_t mi = 0; mi < spec.m_list.size(); ++mi) {
        for (std::size_t di = 0; di < spec.delta_list.size(); ++di) {
            const std::uint64_t cell_seed =
                derive_seed(derive_seed(spec.seed, static_cast<std::uint64_t>(spec.m_list[mi])),
                            static_cast<std::uint64_t>(di));
            report.cells.push_back(run_cell(spec.true_model, spec.kappa_bar,
                                            spec.delta_list[di], spec.m_list[mi],
                                            spec.batches_per_cell, cell_seed, spec.solver,
                                            n_threads));
        }
    }

    const auto cell_at = [&](std::size_t mi, std::size_t di) -> const CellResult& {
        return report.cells[mi * spec.delta_list.size() + di];
    };
    for (std::size_t di = 0; di < spec.delta_list.size(); ++di) {
        bool mono = true;
        for (std::size_t mi = 0; mi + 1 < spec.m_list.size(); ++mi) {
            if (cell_at(mi + 1, di).violation_freq > cell_at(mi, di).violation_freq) mono = false;
        }
        report.violation_trend_in_m.push_back({spec.delta_list[di], mono});
    }
    for (std::size_t mi = 0; mi < spec.m_list.size(); ++mi) {
        bool mono = true;
        for (std::size_t di = 0; di + 1 < spec.delta_list.size(); ++di) {
            if (cell_at(mi, di + 1).violation_freq > cell_at(mi, di).violation_freq) mono = false;
        }
        report.violation_trend_in_delta.push_back({static_cast<double>(spec.m_list[mi]), mono});
    }
    return report;
}

}  // namespace remest
