#pragma once

// Scalar normal-distribution primitives shared by every module.

#include <cmath>
#include <limits>
#include <stdexcept>

namespace remest::math {

inline constexpr double kInvSqrt2Pi = 0.3989422804014326779399461;
inline constexpr double kInvSqrt2 = 0.7071067811865475244008444;

/// Standard normal density phi(z).
inline double normal_pdf(double z) {
    return kInvSqrt2Pi * std::exp(-0.5 * z * z);
}

/// Standard normal cdf Phi(z), computed through erfc for full tail accuracy.
inline double normal_cdf(double z) {
    return 0.5 * std::erfc(-z * kInvSqrt2);
}

/// Upper tail 1 - Phi(z).
inline double normal_cdf_upper(double z) {
    return 0.5 * std::erfc(z * kInvSqrt2);
}

/// Phi(beta) - Phi(alpha) for alpha <= beta, evaluated on the side of the
/// axis that avoids cancellation when both arguments sit in one tail.
inline double normal_cdf_interval(double alpha, double beta) {
    if (alpha >= 0.0) {
        return normal_cdf_upper(alpha) - normal_cdf_upper(beta);
    }
    if (beta <= 0.0) {
        return normal_cdf(beta) - normal_cdf(alpha);
    }
    return normal_cdf(beta) - normal_cdf(alpha);
}

/// Inverse standard normal cdf. Acklam's rational approximation polished
/// with one Halley step; accurate to ~1e-15 over (0,1).
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        if (p == 0.0) return -std::numeric_limits<double>::infinity();
        if (p == 1.0) return std::numeric_limits<double>::infinity();
        throw std::domain_error("normal_quantile: p outside [0,1]");
    }

    static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                    -2.759285104469687e+02, 1.383577518672690e+02,
                                    -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                    -1.556989798598866e+02, 6.680131188771972e+01,
                                    -1.328068155288572e+01};
    static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                    -2.400758277161838e+00, -2.549732539343734e+00,
                                    4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                    2.445134137142996e+00, 3.754408661907416e+00};

    constexpr double p_low = 0.02425;
    double q, x;
    if (p < p_low) {
        q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        q = p - 0.5;
        double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    // Halley refinement against the erfc-based cdf.
    double e = normal_cdf(x) - p;
    double u = e / normal_pdf(x);
    x -= u / (1.0 + 0.5 * x * u);
    return x;
}

}  // namespace remest::math
