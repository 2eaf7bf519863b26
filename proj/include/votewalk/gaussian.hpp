// Standard normal density/distribution primitives and the truncated-normal
// conditional mean. Everything downstream (expectations, optimal thresholds,
// the society system) reduces to these three evaluations, so they are kept
// tail-robust: the CDF goes through erfc and the conditional mean switches to
// a continued-fraction Mills ratio once the naive f/F quotient would hit
// underflow territory.

#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace votewalk::gaussian {

inline constexpr double kInvSqrt2Pi = 0.39894228040143267793994605993438;  // 1/sqrt(2*pi)
inline constexpr double kInvSqrt2 = 0.70710678118654752440084436210485;    // 1/sqrt(2)

namespace detail {

inline void require_finite(double x, const char* what) {
    if (!std::isfinite(x)) {
        throw std::domain_error(std::string(what) + ": non-finite argument");
    }
}

// Tail part of the lower-tail hazard f(-b)/F(-b) = b + c(b), via the Laplace
// continued fraction c(b) = 1/(b + 2/(b + 3/(b + ...))). Backward recurrence
// at depth 64 is converged to well below double precision for b >= 6.
inline double mills_hazard_excess(double b) {
    double v = 0.0;
    for (int k = 64; k >= 2; --k) {
        v = static_cast<double>(k) / (b + v);
    }
    return 1.0 / (b + v);
}

}  // namespace detail

/// Standard normal density f(z).
inline double std_pdf(double z) {
    detail::require_finite(z, "std_pdf");
    return kInvSqrt2Pi * std::exp(-0.5 * z * z);
}

/// Standard normal distribution function F(z), evaluated as erfc(-z/sqrt 2)/2
/// so both tails keep full relative accuracy.
inline double std_cdf(double z) {
    detail::require_finite(z, "std_cdf");
    return 0.5 * std::erfc(-z * kInvSqrt2);
}

/// Density and distribution function at one argument.
struct StdNormalEval {
    double z;
    double pdf;
    double cdf;
};

inline StdNormalEval evaluate(double z) {
    return StdNormalEval{z, std_pdf(z), std_cdf(z)};
}

/// Mean of N(mean, sd^2) conditioned on exceeding `threshold`:
///   mean + sd * f(a)/F(a),  a = (mean - threshold)/sd.
///
/// For a < -6 the quotient f(a)/F(a) is evaluated through the Mills
/// continued fraction as threshold + sd*c(-a), which stays finite and
/// strictly above the threshold for arbitrarily deep truncation.
inline double truncated_mean_above(double mean, double sd, double threshold) {
    detail::require_finite(mean, "truncated_mean_above");
    detail::require_finite(sd, "truncated_mean_above");
    detail::require_finite(threshold, "truncated_mean_above");
    if (sd <= 0.0) {
        throw std::domain_error("truncated_mean_above: sd must be positive");
    }
    const double a = (mean - threshold) / sd;
    if (a < -6.0) {
        return threshold + sd * detail::mills_hazard_excess(-a);
    }
    if (a > 38.0) {
        return mean;  // F(a) = 1 and f(a) underflows; truncation is vacuous
    }
    return mean + sd * (std_pdf(a) / std_cdf(a));
}

}  // namespace votewalk::gaussian
