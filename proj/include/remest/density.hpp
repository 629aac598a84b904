#pragma once

// Axis-aligned Gaussian mixtures with exact moment computations over
// Euclidean balls. d=1 uses closed forms built on erf; d>1 falls back to a
// deterministic Halton quasi-Monte-Carlo average (no elementary closed form
// exists for a Euclidean ball against a product Gaussian).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "remest/math.hpp"

namespace remest {

struct GaussianComponent {
    double weight = 0.0;
    std::vector<double> mean;
    std::vector<double> stddev;
};

/// Weighted mixture of axis-aligned Gaussian components.
///
/// Parameters are stored flattened (component-major) so per-component loops
/// over large mixtures (e.g. kernel density estimates with 1e5 components)
/// stay cache-friendly. Instances are immutable after construction.
class GaussianMixture {
public:
    explicit GaussianMixture(const std::vector<GaussianComponent>& comps) {
        if (comps.empty()) {
            throw std::invalid_argument("GaussianMixture: no components");
        }
        dim_ = static_cast<int>(comps.front().mean.size());
        weights_.reserve(comps.size());
        means_.reserve(comps.size() * dim_);
        stddevs_.reserve(comps.size() * dim_);
        for (const auto& c : comps) {
            weights_.push_back(c.weight);
            means_.insert(means_.end(), c.mean.begin(), c.mean.end());
            stddevs_.insert(stddevs_.end(), c.stddev.begin(), c.stddev.end());
            if (static_cast<int>(c.mean.size()) != dim_ ||
                static_cast<int>(c.stddev.size()) != dim_) {
                throw std::invalid_argument("GaussianMixture: component dimension mismatch");
            }
        }
        finalize();
    }

    /// Flattened constructor (component-major means/stddevs), used by the
    /// KDE fit to avoid materializing per-component vectors.
    GaussianMixture(int dim, std::vector<double> weights, std::vector<double> means,
                    std::vector<double> stddevs)
        : dim_(dim),
          weights_(std::move(weights)),
          means_(std::move(means)),
          stddevs_(std::move(stddevs)) {
        if (dim_ < 1 || weights_.empty()) {
            throw std::invalid_argument("GaussianMixture: empty or zero-dimensional");
        }
        if (means_.size() != weights_.size() * dim_ || stddevs_.size() != means_.size()) {
            throw std::invalid_argument("GaussianMixture: flattened array size mismatch");
        }
        finalize();
    }

    int dim() const { return dim_; }
    std::size_t size() const { return weights_.size(); }

    std::span<const double> weights() const { return weights_; }
    std::span<const double> means_flat() const { return means_; }
    std::span<const double> stddevs_flat() const { return stddevs_; }
    std::span<const double> inv_stddevs_flat() const { return inv_stddevs_; }

    std::span<const double> mean_of(std::size_t i) const {
        return {means_.data() + i * dim_, static_cast<std::size_t>(dim_)};
    }
    std::span<const double> stddev_of(std::size_t i) const {
        return {stddevs_.data() + i * dim_, static_cast<std::size_t>(dim_)};
    }

    GaussianComponent component(std::size_t i) const {
        auto m = mean_of(i);
        auto s = stddev_of(i);
        return {weights_[i], {m.begin(), m.end()}, {s.begin(), s.end()}};
    }

    /// Mixture mean, sum_i w_i mu_i (cached).
    const std::vector<double>& mean() const { return mean_; }

    /// E[||X - E[X]||^2] (cached).
    double variance_total() const { return variance_total_; }

private:
    void finalize() {
        double wsum = 0.0;
        for (double w : weights_) {
            if (!(w >= 0.0) || w > 1.0 + 1e-9) {
                throw std::invalid_argument("GaussianMixture: component weight outside [0,1]");
            }
            wsum += w;
        }
        if (std::abs(wsum - 1.0) > 1e-9) {
            throw std::invalid_argument("GaussianMixture: weights sum to " +
                                        std::to_string(wsum) + ", expected 1");
        }
        // Tolerate text-file rounding: renormalize deviations below 1e-9.
        if (wsum != 1.0) {
            for (double& w : weights_) w /= wsum;
        }
        inv_stddevs_.resize(stddevs_.size());
        for (std::size_t k = 0; k < stddevs_.size(); ++k) {
            if (!(stddevs_[k] > 0.0) || !std::isfinite(stddevs_[k])) {
                throw std::invalid_argument("GaussianMixture: stddev entries must be positive");
            }
            inv_stddevs_[k] = 1.0 / stddevs_[k];
        }
        for (double m : means_) {
            if (!std::isfinite(m)) {
                throw std::invalid_argument("GaussianMixture: non-finite mean entry");
            }
        }
        mean_.assign(dim_, 0.0);
        for (std::size_t i = 0; i < size(); ++i) {
            const double* mu = means_.data() + i * dim_;
            for (int j = 0; j < dim_; ++j) mean_[j] += weights_[i] * mu[j];
        }
        variance_total_ = 0.0;
        for (std::size_t i = 0; i < size(); ++i) {
            const double* mu = means_.data() + i * dim_;
            const double* sd = stddevs_.data() + i * dim_;
            double term = 0.0;
            for (int j = 0; j < dim_; ++j) {
                const double dm = mu[j] - mean_[j];
                term += sd[j] * sd[j] + dm * dm;
            }
            variance_total_ += weights_[i] * term;
        }
    }

    int dim_ = 0;
    std::vector<double> weights_;
    std::vector<double> means_;    // component-major, size * dim
    std::vector<double> stddevs_;  // component-major, size * dim
    std::vector<double> inv_stddevs_;
    std::vector<double> mean_;
    double variance_total_ = 0.0;
};

/// Euclidean ball {x : ||x - center||^2 <= radius_sq}.
struct Ball {
    Ball(std::vector<double> c, double r2) : center(std::move(c)), radius_sq(r2) {
        if (!(radius_sq >= 0.0)) {
            throw std::invalid_argument("Ball: radius_sq must be >= 0");
        }
    }
    std::vector<double> center;
    double radius_sq;
};

namespace detail {

inline void check_dim(const GaussianMixture& model, std::size_t got, const char* what) {
    if (static_cast<std::size_t>(model.dim()) != got) {
        throw std::invalid_argument(std::string(what) + ": dimension mismatch (model d=" +
                                    std::to_string(model.dim()) + ", argument d=" +
                                    std::to_string(got) + ")");
    }
}

// ---------------------------------------------------------------------------
// Quasi-Monte-Carlo machinery for d > 1 ball integrals.
//
// Fixed, documented point set: Halton sequence in the first d prime bases,
// indices 1..65536, mapped through the normal quantile per axis. Purely
// deterministic, so all d>1 results are bit-for-bit reproducible.
// ---------------------------------------------------------------------------

inline constexpr int kQmcPoints = 1 << 16;
inline constexpr int kQmcBlocks = 8;

inline int nth_prime(int n) {
    static constexpr int primes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29,
                                     31, 37, 41, 43, 47, 53, 59, 61, 67, 71};
    if (n < 0 || n >= static_cast<int>(std::size(primes))) {
        throw std::invalid_argument("ball integrals support at most 20 dimensions");
    }
    return primes[n];
}

inline double radical_inverse(std::uint64_t index, int base) {
    double inv_base = 1.0 / base;
    double f = inv_base;
    double value = 0.0;
    while (index > 0) {
        value += f * static_cast<double>(index % base);
        index /= base;
        f *= inv_base;
    }
    return value;
}

/// Standard-normal QMC point set for dimension d, row-major (point-major).
inline const std::vector<double>& qmc_normal_points(int d) {
    thread_local std::unordered_map<int, std::vector<double>> cache;
    auto it = cache.find(d);
    if (it != cache.end()) return it->second;
    std::vector<double> pts(static_cast<std::size_t>(kQmcPoints) * d);
    for (int j = 0; j < d; ++j) {
        const int base = nth_prime(j);
        for (int i = 0; i < kQmcPoints; ++i) {
            pts[static_cast<std::size_t>(i) * d + j] =
                math::normal_quantile(radical_inverse(static_cast<std::uint64_t>(i) + 1, base));
        }
    }
    return cache.emplace(d, std::move(pts)).first->second;
}

// Fused closed-form moments for d = 1. Accumulates, per component,
//   I0 = Phi(beta) - Phi(alpha)
//   I1 = phi(alpha) - phi(beta)              (= int z phi over [alpha,beta])
//   I2 = I0 - (beta phi(beta) - alpha phi(alpha))   (= int z^2 phi)
// and assembles mass, E[X 1(ball)], E[(X-theta)^2 1(ball)] from them.
template <bool WantFirst, bool WantSecond>
inline void ball_moments_1d(const GaussianMixture& model, double theta, double radius_sq,
                            double& mass, double& first, double& second) {
    mass = 0.0;
    first = 0.0;
    second = 0.0;
    if (radius_sq <= 0.0) return;
    const double r = std::sqrt(radius_sq);
    const double a = theta - r;
    const double b = theta + r;
    const std::size_t n = model.size();
    const double* w = model.weights().data();
    const double* mu = model.means_flat().data();
    const double* sd = model.stddevs_flat().data();
    const double* inv_sd = model.inv_stddevs_flat().data();
    for (std::size_t i = 0; i < n; ++i) {
        const double alpha = (a - mu[i]) * inv_sd[i];
        const double beta = (b - mu[i]) * inv_sd[i];
        const double i0 = math::normal_cdf_interval(alpha, beta);
        mass += w[i] * i0;
        if constexpr (WantFirst || WantSecond) {
            const double pa = math::normal_pdf(alpha);
            const double pb = math::normal_pdf(beta);
            const double i1 = pa - pb;
            if constexpr (WantFirst) {
                first += w[i] * (mu[i] * i0 + sd[i] * i1);
            }
            if constexpr (WantSecond) {
                const double i2 = i0 - (beta * pb - alpha * pa);
                const double dm = mu[i] - theta;
                second += w[i] * (sd[i] * sd[i] * i2 + 2.0 * sd[i] * dm * i1 + dm * dm * i0);
            }
        }
    }
}

template <bool WantFirst, bool WantSecond>
inline void ball_moments_qmc(const GaussianMixture& model, std::span<const double> theta,
                             double radius_sq, double& mass, double* first, double& second,
                             double* mass_error = nullptr) {
    const int d = model.dim();
    mass = 0.0;
    second = 0.0;
    if (first != nullptr) std::fill(first, first + d, 0.0);
    double block_mass[kQmcBlocks] = {};
    if (radius_sq <= 0.0) {
        if (mass_error != nullptr) *mass_error = 0.0;
        return;
    }
    const auto& pts = qmc_normal_points(d);
    constexpr int block_len = kQmcPoints / kQmcBlocks;
    const double inv_n = 1.0 / kQmcPoints;
    std::vector<double> x(d);
    for (std::size_t c = 0; c < model.size(); ++c) {
        const double wc = model.weights()[c];
        const double* mu = model.means_flat().data() + c * d;
        const double* sd = model.stddevs_flat().data() + c * d;
        for (int i = 0; i < kQmcPoints; ++i) {
            const double* z = pts.data() + static_cast<std::size_t>(i) * d;
            double dist = 0.0;
            for (int j = 0; j < d; ++j) {
                x[j] = mu[j] + sd[j] * z[j];
                const double dj = x[j] - theta[j];
                dist += dj * dj;
            }
            if (dist <= radius_sq) {
                mass += wc;
                block_mass[i / block_len] += wc;
                if constexpr (WantFirst) {
                    for (int j = 0; j < d; ++j) first[j] += wc * x[j];
                }
                if constexpr (WantSecond) {
                    second += wc * dist;
                }
            }
        }
    }
    mass *= inv_n;
    second *= inv_n;
    if (first != nullptr) {
        for (int j = 0; j < d; ++j) first[j] *= inv_n;
    }
    if (mass_error != nullptr) {
        // Spread of block means as a conservative error estimate.
        double bsum = 0.0, bsq = 0.0;
        for (double bm : block_mass) {
            const double m = bm / block_len;
            bsum += m;
            bsq += m * m;
        }
        const double bmean = bsum / kQmcBlocks;
        const double bvar = std::max(0.0, bsq / kQmcBlocks - bmean * bmean);
        *mass_error = 3.0 * std::sqrt(bvar / kQmcBlocks);
    }
}

template <bool WantFirst, bool WantSecond>
inline void ball_moments(const GaussianMixture& model, std::span<const double> center,
                         double radius_sq, double& mass, double* first, double& second) {
    check_dim(model, center.size(), "ball moments");
    if (model.dim() == 1) {
        double f1 = 0.0;
        ball_moments_1d<WantFirst, WantSecond>(model, center[0], radius_sq, mass, f1, second);
        if (first != nullptr) first[0] = f1;
        return;
    }
    ball_moments_qmc<WantFirst, WantSecond>(model, center, radius_sq, mass, first, second);
}

}  // namespace detail

/// Mixture density at x.
inline double pdf(const GaussianMixture& model, std::span<const double> x) {
    detail::check_dim(model, x.size(), "pdf");
    const int d = model.dim();
    double total = 0.0;
    for (std::size_t i = 0; i < model.size(); ++i) {
        const double* mu = model.means_flat().data() + i * d;
        const double* inv_sd = model.inv_stddevs_flat().data() + i * d;
        double q = 0.0;
        double scale = 1.0;
        for (int j = 0; j < d; ++j) {
            const double z = (x[j] - mu[j]) * inv_sd[j];
            q += z * z;
            scale *= math::kInvSqrt2Pi * inv_sd[j];
        }
        total += model.weights()[i] * scale * std::exp(-0.5 * q);
    }
    return total;
}

inline double pdf(const GaussianMixture& model, double x) {
    return pdf(model, std::span<const double>(&x, 1));
}

/// Mixture cdf (d = 1 only).
inline double cdf(const GaussianMixture& model, double x) {
    if (model.dim() != 1) {
        throw std::invalid_argument("cdf: defined for d=1 models only");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < model.size(); ++i) {
        total += model.weights()[i] *
                 math::normal_cdf((x - model.means_flat()[i]) * model.inv_stddevs_flat()[i]);
    }
    return std::clamp(total, 0.0, 1.0);
}

inline std::vector<double> mean(const GaussianMixture& model) { return model.mean(); }

inline double variance_total(const GaussianMixture& model) { return model.variance_total(); }

/// P(||X - center||^2 <= radius_sq).
inline double mass_in_ball(const GaussianMixture& model, const Ball& ball) {
    double mass = 0.0, second = 0.0;
    detail::ball_moments<false, false>(model, ball.center, ball.radius_sq, mass, nullptr, second);
    return mass;
}

/// E[X 1(||X - center||^2 <= radius_sq)].
inline std::vector<double> partial_mean(const GaussianMixture& model, const Ball& ball) {
    std::vector<double> first(model.dim(), 0.0);
    double mass = 0.0, second = 0.0;
    detail::ball_moments<true, false>(model, ball.center, ball.radius_sq, mass, first.data(),
                                      second);
    return first;
}

/// E[||X - center||^2 1(||X - center||^2 <= radius_sq)].
inline double partial_second_moment(const GaussianMixture& model, const Ball& ball) {
    double mass = 0.0, second = 0.0;
    detail::ball_moments<false, true>(model, ball.center, ball.radius_sq, mass, nullptr, second);
    return second;
}

/// d>1 ball probability together with its quasi-Monte-Carlo error estimate.
struct QmcBallEstimate {
    double value = 0.0;
    double error_estimate = 0.0;
};

inline QmcBallEstimate mass_in_ball_qmc(const GaussianMixture& model, const Ball& ball) {
    detail::check_dim(model, ball.center.size(), "mass_in_ball_qmc");
    QmcBallEstimate est;
    double second = 0.0;
    if (model.dim() == 1) {
        double f1 = 0.0;
        detail::ball_moments_1d<false, false>(model, ball.center[0], ball.radius_sq, est.value,
                                              f1, second);
        est.error_estimate = 0.0;  // closed form
        return est;
    }
    detail::ball_moments_qmc<false, false>(model, ball.center, ball.radius_sq, est.value, nullptr,
                                           second, &est.error_estimate);
    return est;
}

}  // namespace remest
