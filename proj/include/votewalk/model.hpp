// Closed-form expected one-step capital increments for two cohesive groups
// voting on normally distributed proposals.
//
// A proposal assigns each participant an independent N(mu, sigma^2) capital
// increment. Group i (size g_i) supports the proposal iff its members'
// average increment is at least the group's claim threshold t_i. Under the
// unanimous-acceptance rule a proposal passes iff both groups support it;
// under unanimous rejection it passes iff at least one does. Rejected
// proposals contribute zero increments.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "votewalk/gaussian.hpp"

namespace votewalk {

enum class VotingRule {
    UnanimousAcceptance,  // pass iff both groups support (G1 and G2)
    UnanimousRejection,   // pass iff at least one group supports (G1 or G2)
};

/// Proposal-generating distribution: increments are i.i.d. N(mu, sigma^2).
struct EnvironmentParams {
    double mu = 0.0;
    double sigma = 1.0;
};

/// One cohesive group: member count and claim threshold.
struct GroupSpec {
    std::int64_t size = 1;
    double threshold = 0.0;
};

inline void validate(const EnvironmentParams& env) {
    if (!std::isfinite(env.mu) || !std::isfinite(env.sigma)) {
        throw std::domain_error("EnvironmentParams: mu and sigma must be finite");
    }
    if (env.sigma <= 0.0) {
        throw std::domain_error("EnvironmentParams: sigma must be positive");
    }
}

inline void validate(const GroupSpec& g) {
    if (g.size < 1) {
        throw std::domain_error("GroupSpec: size must be >= 1");
    }
    // +-inf thresholds are legal limits (never / always support); NaN is not
    if (std::isnan(g.threshold)) {
        throw std::domain_error("GroupSpec: threshold must not be NaN");
    }
}

/// Per-group derived quantities. sd is the std. dev. of the group-average
/// increment (sigma/sqrt g); z = (mu - t)/sd its standardized support margin;
/// cdf = F(z) is the support probability, pdf = f(z), ccdf = 1 - F(z)
/// evaluated directly on the mirrored tail.
struct GroupTerms {
    double sd;
    double z;
    double cdf;
    double pdf;
    double ccdf;
};

inline GroupTerms group_terms(const EnvironmentParams& env, const GroupSpec& g) {
    validate(env);
    validate(g);
    const double sd = env.sigma / std::sqrt(static_cast<double>(g.size));
    const double z = (env.mu - g.threshold) / sd;
    return GroupTerms{sd, z, gaussian::std_cdf(z), gaussian::std_pdf(z), gaussian::std_cdf(-z)};
}

namespace detail {

inline double member_expectation(double mu, const GroupTerms& own, const GroupTerms& other,
                                 VotingRule rule) {
    const double supported_mass = mu * own.cdf + own.sd * own.pdf;  // E[avg; avg >= t]
    if (rule == VotingRule::UnanimousAcceptance) {
        return supported_mass * other.cdf;
    }
    return mu * other.cdf + supported_mass * other.ccdf;
}

}  // namespace detail

/// Expected one-step increment of a member of group `which` (1 or 2).
inline double expected_increment(const EnvironmentParams& env, const GroupSpec& g1,
                                 const GroupSpec& g2, VotingRule rule, int which) {
    if (which != 1 && which != 2) {
        throw std::invalid_argument("expected_increment: which must be 1 or 2");
    }
    const GroupTerms a = group_terms(env, g1);
    const GroupTerms b = group_terms(env, g2);
    return which == 1 ? detail::member_expectation(env.mu, a, b, rule)
                      : detail::member_expectation(env.mu, b, a, rule);
}

/// Expected inter-member difference M(d1 - d2):
/// sigma1 f1 (1-F2) - sigma2 f2 (1-F1) under unanimous rejection,
/// sigma1 f1 F2 - sigma2 f2 F1 under unanimous acceptance.
inline double expected_difference(const EnvironmentParams& env, const GroupSpec& g1,
                                  const GroupSpec& g2, VotingRule rule) {
    const GroupTerms a = group_terms(env, g1);
    const GroupTerms b = group_terms(env, g2);
    if (rule == VotingRule::UnanimousAcceptance) {
        return a.sd * a.pdf * b.cdf - b.sd * b.pdf * a.cdf;
    }
    return a.sd * a.pdf * b.ccdf - b.sd * b.pdf * a.ccdf;
}

/// Expected one-step increment of the whole society, g1*M(d1) + g2*M(d2).
inline double society_increment(const EnvironmentParams& env, const GroupSpec& g1,
                                const GroupSpec& g2, VotingRule rule) {
    const double m1 = expected_increment(env, g1, g2, rule, 1);
    const double m2 = expected_increment(env, g1, g2, rule, 2);
    return static_cast<double>(g1.size) * m1 + static_cast<double>(g2.size) * m2;
}

struct ExpectationReport {
    double m1;       // expected increment per group-1 member
    double m2;       // expected increment per group-2 member
    double diff;     // M(d1 - d2), closed form
    double society;  // g1*m1 + g2*m2
    std::array<double, 2> support_prob;  // P(G_i) = F_i
    double accept_prob;                  // F1*F2 or 1 - (1-F1)(1-F2)
};

inline ExpectationReport full_report(const EnvironmentParams& env, const GroupSpec& g1,
                                     const GroupSpec& g2, VotingRule rule) {
    const GroupTerms a = group_terms(env, g1);
    const GroupTerms b = group_terms(env, g2);
    const double m1 = detail::member_expectation(env.mu, a, b, rule);
    const double m2 = detail::member_expectation(env.mu, b, a, rule);
    ExpectationReport rep;
    rep.m1 = m1;
    rep.m2 = m2;
    rep.diff = expected_difference(env, g1, g2, rule);
    rep.society = static_cast<double>(g1.size) * m1 + static_cast<double>(g2.size) * m2;
    rep.support_prob = {a.cdf, b.cdf};
    rep.accept_prob = rule == VotingRule::UnanimousAcceptance ? a.cdf * b.cdf
                                                              : 1.0 - a.ccdf * b.ccdf;
    return rep;
}

}  // namespace votewalk
