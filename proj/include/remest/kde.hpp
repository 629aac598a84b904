#pragma once

// Gaussian product-kernel density estimation. The fit returns an ordinary
// GaussianMixture (M equal-weight components, per-axis kernel stddev h), so
// everything downstream of a fit reuses the exact density machinery.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "remest/density.hpp"

namespace remest {

/// A batch of M observation vectors in R^d, row-major, with provenance.
struct SampleBatch {
    SampleBatch(int dim, std::vector<double> row_major_data,
                std::optional<std::uint64_t> seed = std::nullopt, std::string source = {})
        : dim(dim), data(std::move(row_major_data)), seed(seed), source(std::move(source)) {
        if (dim < 1) throw std::invalid_argument("SampleBatch: dim must be >= 1");
        if (data.size() % dim != 0) {
            throw std::invalid_argument("SampleBatch: data size not a multiple of dim");
        }
        if (size() < 2) throw std::invalid_argument("SampleBatch: needs at least 2 samples");
    }

    std::size_t size() const { return data.size() / dim; }

    std::span<const double> row(std::size_t m) const {
        return {data.data() + m * dim, static_cast<std::size_t>(dim)};
    }

    int dim;
    std::vector<double> data;
    std::optional<std::uint64_t> seed;
    std::string source;
};

/// Per-axis bandwidths with the statistics they came from.
struct BandwidthReport {
    std::vector<double> per_axis_h;
    std::vector<double> per_axis_s;  // sample stddev, (M-1) divisor
    std::vector<double> per_axis_q;  // interquartile range
};

namespace detail {

/// Type-7 quantile: linear interpolation at position (M-1)p.
inline double quantile_type7(const std::vector<double>& sorted, double p) {
    const std::size_t m = sorted.size();
    const double pos = static_cast<double>(m - 1) * p;
    const std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= m) return sorted.back();
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

}  // namespace detail

/// Rule-of-thumb bandwidth h_j = 1.06 / M^{1/5} * min{s_j, Q_j/1.34} per axis.
/// If exactly one of the two candidate scales is zero (heavy ties), the
/// positive one is used; an axis with s = Q = 0 is rejected.
inline BandwidthReport bandwidth(const SampleBatch& batch) {
    const std::size_t m = batch.size();
    const int d = batch.dim;
    const double prefactor = 1.06 / std::pow(static_cast<double>(m), 0.2);

    BandwidthReport report;
    report.per_axis_h.resize(d);
    report.per_axis_s.resize(d);
    report.per_axis_q.resize(d);

    std::vector<double> axis(m);
    for (int j = 0; j < d; ++j) {
        for (std::size_t i = 0; i < m; ++i) axis[i] = batch.data[i * d + j];

        double mean = 0.0;
        for (double v : axis) mean += v;
        mean /= static_cast<double>(m);
        double ss = 0.0;
        for (double v : axis) ss += (v - mean) * (v - mean);
        const double s = std::sqrt(ss / static_cast<double>(m - 1));

        std::sort(axis.begin(), axis.end());
        const double q =
            detail::quantile_type7(axis, 0.75) - detail::quantile_type7(axis, 0.25);

        report.per_axis_s[j] = s;
        report.per_axis_q[j] = q;

        const double cand_s = s;
        const double cand_q = q / 1.34;
        double scale;
        if (cand_s > 0.0 && cand_q > 0.0) {
            scale = std::min(cand_s, cand_q);
        } else if (cand_s > 0.0) {
            scale = cand_s;
        } else if (cand_q > 0.0) {
            scale = cand_q;
        } else {
            throw std::invalid_argument("bandwidth: degenerate sample axis " +
                                        std::to_string(j));
        }
        report.per_axis_h[j] = prefactor * scale;
    }
    return report;
}

/// Kernel density estimate: M components, weight 1/M, mean x_m, stddev h_j.
inline GaussianMixture fit(const SampleBatch& batch) {
    const BandwidthReport bw = bandwidth(batch);
    const std::size_t m = batch.size();
    const int d = batch.dim;
    std::vector<double> weights(m, 1.0 / static_cast<double>(m));
    std::vector<double> stddevs(m * d);
    for (std::size_t i = 0; i < m; ++i) {
        for (int j = 0; j < d; ++j) stddevs[i * d + j] = bw.per_axis_h[j];
    }
    return GaussianMixture(d, std::move(weights), std::vector<double>(batch.data),
                           std::move(stddevs));
}

}  // namespace remest
