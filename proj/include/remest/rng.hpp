#pragma once

// Counter-based random streams. Every stochastic routine derives one Stream
// per independent work unit (trial, batch) from (seed, index), so serial and
// parallel executions produce bit-identical results.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "remest/density.hpp"
#include "remest/math.hpp"

namespace remest {

namespace detail {

/// splitmix64 finalizer; also used as the stream mixer.
inline std::uint64_t mix_bits(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace detail

/// Derive a substream seed from (seed, index). Not invertible, well mixed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return detail::mix_bits(seed ^ detail::mix_bits(index + 0x632BE59BD9B4E019ULL));
}

/// splitmix64 stream.
class Stream {
public:
    explicit Stream(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in the open interval (0,1).
    double next_open01() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via inverse cdf (keeps draws implementation-independent).
    double next_normal() { return math::normal_quantile(next_open01()); }

private:
    std::uint64_t state_;
};

/// Draws iid vectors from a GaussianMixture: component by cumulative-weight
/// inversion, then one normal per axis.
class MixtureSampler {
public:
    explicit MixtureSampler(const GaussianMixture& model) : model_(&model) {
        cumw_.reserve(model.size());
        double acc = 0.0;
        for (double w : model.weights()) {
            acc += w;
            cumw_.push_back(acc);
        }
        cumw_.back() = 1.0;
    }

    void sample(Stream& stream, std::span<double> out) const {
        const int d = model_->dim();
        if (static_cast<int>(out.size()) != d) {
            throw std::invalid_argument("MixtureSampler: output span has wrong dimension");
        }
        const double u = stream.next_open01();
        const std::size_t c =
            std::lower_bound(cumw_.begin(), cumw_.end(), u) - cumw_.begin();
        const double* mu = model_->means_flat().data() + c * d;
        const double* sd = model_->stddevs_flat().data() + c * d;
        for (int j = 0; j < d; ++j) {
            out[j] = mu[j] + sd[j] * stream.next_normal();
        }
    }

    /// M samples flattened row-major.
    std::vector<double> sample_many(Stream& stream, std::size_t count) const {
        const int d = model_->dim();
        std::vector<double> data(count * d);
        for (std::size_t m = 0; m < count; ++m) {
            sample(stream, {data.data() + m * d, static_cast<std::size_t>(d)});
        }
        return data;
    }

private:
    const GaussianMixture* model_;
    std::vector<double> cumw_;
};

}  // namespace remest
