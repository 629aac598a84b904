#pragma once

// File formats: mixture model JSON (variances on disk, stddevs in memory),
// policy JSON, sample CSV, trace CSV, and report CSV/JSON. All floating
// output uses shortest round-trip decimal formatting so written files are
// deterministic and re-parse to identical bits.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "remest/density.hpp"
#include "remest/experiments.hpp"
#include "remest/kde.hpp"
#include "remest/simulator.hpp"
#include "remest/solver.hpp"

namespace remest::io {

using nlohmann::json;

/// Shortest decimal string that round-trips to the same double.
inline std::string format_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    if (res.ec != std::errc{}) throw std::runtime_error("format_double failed");
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    double v = 0.0;
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    const auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc{}) {
        throw std::runtime_error("cannot parse number: '" + std::string(s) + "'");
    }
    return v;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Mixture model JSON: {"dim": d, "components": [{"weight", "mean", "variance"}]}.
// ---------------------------------------------------------------------------

inline GaussianMixture mixture_from_json(const json& j) {
    if (!j.is_object() || !j.contains("dim") || !j.contains("components")) {
        throw std::runtime_error("model JSON must contain 'dim' and 'components'");
    }
    const int d = j.at("dim").get<int>();
    std::vector<GaussianComponent> comps;
    for (const auto& cj : j.at("components")) {
        GaussianComponent c;
        c.weight = cj.at("weight").get<double>();
        c.mean = cj.at("mean").get<std::vector<double>>();
        const auto variances = cj.at("variance").get<std::vector<double>>();
        c.stddev.reserve(variances.size());
        for (double v : variances) {
            if (!(v > 0.0)) throw std::runtime_error("model JSON: variance entries must be > 0");
            c.stddev.push_back(std::sqrt(v));
        }
        if (static_cast<int>(c.mean.size()) != d || static_cast<int>(c.stddev.size()) != d) {
            throw std::runtime_error("model JSON: component dimension mismatch with 'dim'");
        }
        comps.push_back(std::move(c));
    }
    try {
        return GaussianMixture(comps);
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(std::string("model JSON: ") + e.what());
    }
}

inline json mixture_to_json(const GaussianMixture& model) {
    json j;
    j["dim"] = model.dim();
    j["components"] = json::array();
    for (std::size_t i = 0; i < model.size(); ++i) {
        const auto c = model.component(i);
        json cj;
        cj["weight"] = c.weight;
        cj["mean"] = c.mean;
        std::vector<double> variance;
        variance.reserve(c.stddev.size());
        for (double s : c.stddev) variance.push_back(s * s);
        cj["variance"] = variance;
        j["components"].push_back(std::move(cj));
    }
    return j;
}

inline GaussianMixture load_mixture(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw std::runtime_error("model JSON parse error in " + path + ": " + e.what());
    }
    return mixture_from_json(j);
}

inline void save_mixture(const std::string& path, const GaussianMixture& model) {
    write_file(path, mixture_to_json(model).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Policy JSON: {"theta": [...], "lambda": x, "kappa_bar": k, "delta": d}.
// ---------------------------------------------------------------------------

struct PolicyFile {
    Policy policy;
    double kappa_bar = 0.0;
    double delta = 0.0;
};

inline json policy_to_json(const Policy& policy, double kappa_bar, double delta) {
    json j;
    j["theta"] = policy.theta;
    j["lambda"] = policy.lambda;
    j["kappa_bar"] = kappa_bar;
    j["delta"] = delta;
    return j;
}

inline PolicyFile load_policy(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw std::runtime_error("policy JSON parse error in " + path + ": " + e.what());
    }
    try {
        Policy p(j.at("theta").get<std::vector<double>>(), j.at("lambda").get<double>());
        return PolicyFile{std::move(p), j.at("kappa_bar").get<double>(),
                          j.at("delta").get<double>()};
    } catch (const json::exception& e) {
        throw std::runtime_error("policy JSON: missing or malformed field: " +
                                 std::string(e.what()));
    }
}

inline void save_policy(const std::string& path, const Policy& policy, double kappa_bar,
                        double delta) {
    write_file(path, policy_to_json(policy, kappa_bar, delta).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Sample batch CSV: one row per sample, d columns, no header.
// ---------------------------------------------------------------------------

inline SampleBatch load_samples_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::vector<double> data;
    int dim = -1;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        int cols = 0;
        std::size_t start = 0;
        while (start <= line.size()) {
            std::size_t comma = line.find(',', start);
            if (comma == std::string::npos) comma = line.size();
            data.push_back(parse_double(std::string_view(line).substr(start, comma - start)));
            ++cols;
            start = comma + 1;
            if (comma == line.size()) break;
        }
        if (dim == -1) {
            dim = cols;
        } else if (cols != dim) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": inconsistent column count");
        }
    }
    if (dim < 1 || data.empty()) throw std::runtime_error(path + ": no samples");
    try {
        return SampleBatch(dim, std::move(data), std::nullopt, path);
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

inline void save_samples_csv(const std::string& path, const SampleBatch& batch) {
    std::string out;
    for (std::size_t m = 0; m < batch.size(); ++m) {
        const auto row = batch.row(m);
        for (int j = 0; j < batch.dim; ++j) {
            if (j > 0) out += ',';
            out += format_double(row[j]);
        }
        out += '\n';
    }
    write_file(path, out);
}

// ---------------------------------------------------------------------------
// Solve trace CSV: iter, theta_0.., lambda, objective, constraint_residual.
// ---------------------------------------------------------------------------

inline void save_trace_csv(const std::string& path, const SolveTrace& trace, int dim) {
    std::string out = "iter";
    for (int j = 0; j < dim; ++j) out += ",theta_" + std::to_string(j);
    out += ",lambda,objective,constraint_residual\n";
    for (std::size_t k = 0; k < trace.outer.size(); ++k) {
        const auto& rec = trace.outer[k];
        out += std::to_string(k);
        for (double t : rec.theta) out += ',' + format_double(t);
        out += ',' + format_double(rec.lambda);
        out += ',' + format_double(rec.objective);
        out += ',' + format_double(rec.constraint_residual);
        out += '\n';
    }
    write_file(path, out);
}

// ---------------------------------------------------------------------------
// Simulation report: CSV row(s) and JSON equivalent.
// ---------------------------------------------------------------------------

inline std::string simulation_csv(const ChannelSpec& channel, const SimulationReport& report) {
    std::string out = "n,trials,nmse_mean,nmse_half_width,collision_freq,empirical_transmit_rate\n";
    out += std::to_string(channel.n) + ',' + std::to_string(report.trials) + ',' +
           format_double(report.nmse_mean) + ',' + format_double(report.nmse_half_width) + ',' +
           format_double(report.collision_freq) + ',' +
           format_double(report.empirical_transmit_rate) + '\n';
    return out;
}

inline json simulation_to_json(const ChannelSpec& channel, const SimulationReport& report) {
    json j;
    j["n"] = channel.n;
    j["capacity"] = channel.capacity;
    j["kappa_bar"] = channel.kappa_bar;
    j["trials"] = report.trials;
    j["nmse_mean"] = report.nmse_mean;
    j["nmse_half_width"] = report.nmse_half_width;
    j["collision_freq"] = report.collision_freq;
    j["empirical_transmit_rate"] = report.empirical_transmit_rate;
    return j;
}

// ---------------------------------------------------------------------------
// Experiment spec (JSON in) and report (CSV + JSON out).
// ---------------------------------------------------------------------------

inline ExperimentSpec load_experiment_spec(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw std::runtime_error("experiment spec parse error in " + path + ": " + e.what());
    }
    if (!j.contains("model") && !j.contains("model_file")) {
        throw std::runtime_error("experiment spec: needs 'model' (inline) or 'model_file'");
    }
    GaussianMixture model = j.contains("model")
                                ? mixture_from_json(j.at("model"))
                                : load_mixture(j.at("model_file").get<std::string>());
    ExperimentSpec spec{std::move(model)};
    try {
        spec.kappa_bar = j.at("kappa_bar").get<double>();
        spec.delta_list = j.at("delta_list").get<std::vector<double>>();
        spec.m_list = j.at("M_list").get<std::vector<long>>();
        spec.batches_per_cell = j.value("batches_per_cell", 50);
        spec.seed = j.at("seed").get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw std::runtime_error("experiment spec: missing or malformed field: " +
                                 std::string(e.what()));
    }
    if (j.contains("solver")) {
        const auto& sj = j.at("solver");
        spec.solver.theta_tol = sj.value("theta_tol", spec.solver.theta_tol);
        spec.solver.lambda_tol = sj.value("lambda_tol", spec.solver.lambda_tol);
        spec.solver.max_inner_iters = sj.value("max_inner_iters", spec.solver.max_inner_iters);
        spec.solver.max_outer_iters = sj.value("max_outer_iters", spec.solver.max_outer_iters);
    }
    spec.validate();
    return spec;
}

inline std::string experiment_csv(const ExperimentReport& report) {
    std::string out = "M,delta,violation_freq,nmse_mean,nmse_std,theory_rate\n";
    for (const auto& c : report.cells) {
        out += std::to_string(c.m) + ',' + format_double(c.delta) + ',' +
               format_double(c.violation_freq) + ',' + format_double(c.nmse_mean) + ',' +
               format_double(c.nmse_std) + ',' + format_double(c.theory_rate) + '\n';
    }
    return out;
}

inline json experiment_to_json(const ExperimentReport& report) {
    json j;
    j["kappa_bar"] = report.kappa_bar;
    j["seed"] = report.seed;
    j["batches_per_cell"] = report.batches_per_cell;
    j["cells"] = json::array();
    for (const auto& c : report.cells) {
        json cj;
        cj["M"] = c.m;
        cj["delta"] = c.delta;
        cj["violation_freq"] = c.violation_freq;
        cj["nmse_mean"] = c.nmse_mean;
        cj["nmse_std"] = c.nmse_std;
        cj["theory_rate"] = c.theory_rate;
        cj["degenerate_batches"] = c.degenerate_batches;
        cj["non_converged"] = c.non_converged;
        cj["max_design_residual"] = c.max_design_residual;
        j["cells"].push_back(std::move(cj));
    }
    j["violation_trend_in_M"] = json::array();
    for (const auto& t : report.violation_trend_in_m) {
        j["violation_trend_in_M"].push_back({{"delta", t.fixed_value},
                                             {"nonincreasing", t.nonincreasing}});
    }
    j["violation_trend_in_delta"] = json::array();
    for (const auto& t : report.violation_trend_in_delta) {
        j["violation_trend_in_delta"].push_back({{"M", t.fixed_value},
                                                 {"nonincreasing", t.nonincreasing}});
    }
    return j;
}

}  // namespace remest::io
