// Optimal claim thresholds. Closed forms:
//   unanimous acceptance: t2+ = mu + sigma1 f1/F1,   t20 = -(g1/g2) t2+
//   unanimous rejection:  t2+ = mu - sigma1 f1/(1-F1), t20 = -(g1/g2) t2+
// where t2+ maximizes group 2's expected advantage M(d2 - d1) over group 1
// and t20 maximizes the expected increment of the whole society, group 1's
// threshold held fixed. Maximizing the society total over both thresholds
// couples the two closed forms into a fixed-point system, solved here by a
// damped iteration with a bisection fallback for equal group sizes.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "votewalk/gaussian.hpp"
#include "votewalk/model.hpp"

namespace votewalk::optimize {

enum class Objective {
    GroupAdvantage,  // M(d2 - d1), group 2 against group 1
    SocietyTotal,    // g1*M(d1) + g2*M(d2)
};

struct OptimumResult {
    double threshold;        // optimal t2
    double objective_value;  // objective evaluated at the optimum
    Objective objective;
    VotingRule rule;
};

struct SystemSolution {
    double t1 = 0.0;
    double t2 = 0.0;
    double society_value = 0.0;
    int iterations = 0;
    double residual = 0.0;  // max coordinate defect of the threshold system
    bool converged = false;
};

struct SolverOptions {
    double damping = 0.5;
    double step_tol = 1e-12;
    double residual_tol = 1e-10;
    int max_iterations = 10000;
};

namespace detail {

// mu + sigma1 f1/F1 (acceptance) or mu - sigma1 f1/(1-F1) (rejection),
// routed through the truncated mean so deep tails stay finite. The rejection
// form is the acceptance form of the sign-flipped environment.
inline double optimal_claim_rhs(const EnvironmentParams& env, const GroupSpec& fixed,
                                VotingRule rule) {
    validate(env);
    validate(fixed);
    const double sd = env.sigma / std::sqrt(static_cast<double>(fixed.size));
    if (rule == VotingRule::UnanimousAcceptance) {
        return gaussian::truncated_mean_above(env.mu, sd, fixed.threshold);
    }
    return -gaussian::truncated_mean_above(-env.mu, sd, -fixed.threshold);
}

}  // namespace detail

/// Claim threshold of group 2 maximizing its expected advantage M(d2 - d1)
/// with group 1's threshold fixed. Independent of g2's size (the size enters
/// only through the attained objective value).
inline OptimumResult t2_plus(const EnvironmentParams& env, const GroupSpec& g1,
                             std::int64_t g2_size, VotingRule rule) {
    const double t2 = detail::optimal_claim_rhs(env, g1, rule);
    const double value = -expected_difference(env, g1, GroupSpec{g2_size, t2}, rule);
    return OptimumResult{t2, value, Objective::GroupAdvantage, rule};
}

/// Claim threshold of group 2 maximizing the society total, -(g1/g2)*t2+.
inline OptimumResult t2_society(const EnvironmentParams& env, const GroupSpec& g1,
                                std::int64_t g2_size, VotingRule rule) {
    const double ratio = static_cast<double>(g1.size) / static_cast<double>(g2_size);
    const double t2 = -ratio * detail::optimal_claim_rhs(env, g1, rule);
    const double value = society_increment(env, g1, GroupSpec{g2_size, t2}, rule);
    return OptimumResult{t2, value, Objective::SocietyTotal, rule};
}

/// Unique positive root of y = f(y)/F(y). Governs the equal-size
/// society-optimal threshold at mu = 0: t = -sigma*y0/sqrt(g) under
/// unanimous acceptance and its negation under unanimous rejection.
inline double solve_y0() {
    // y - f(y)/F(y) is increasing and changes sign on [0.3, 0.7]
    double lo = 0.3;
    double hi = 0.7;
    for (int i = 0; i < 200 && (hi - lo) > 1e-16; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double defect = mid - gaussian::std_pdf(mid) / gaussian::std_cdf(mid);
        (defect < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/// Numerical derivative of the chosen objective with respect to t2,
/// central difference with h = 1e-5*max(1, |t2|).
inline double stationarity_check(const EnvironmentParams& env, const GroupSpec& g1,
                                 const GroupSpec& g2, VotingRule rule, Objective objective,
                                 double t2) {
    const double h = 1e-5 * std::max(1.0, std::abs(t2));
    const auto eval = [&](double t) {
        const GroupSpec varied{g2.size, t};
        return objective == Objective::GroupAdvantage
                   ? -expected_difference(env, g1, varied, rule)
                   : society_increment(env, g1, varied, rule);
    };
    return (eval(t2 + h) - eval(t2 - h)) / (2.0 * h);
}

namespace detail {

struct SystemRhs {
    const EnvironmentParams& env;
    std::int64_t g1_size;
    std::int64_t g2_size;
    VotingRule rule;

    double t1_of(double t2) const {
        const double r = static_cast<double>(g2_size) / static_cast<double>(g1_size);
        return -r * optimal_claim_rhs(env, GroupSpec{g2_size, t2}, rule);
    }
    double t2_of(double t1) const {
        const double r = static_cast<double>(g1_size) / static_cast<double>(g2_size);
        return -r * optimal_claim_rhs(env, GroupSpec{g1_size, t1}, rule);
    }
    double residual(double t1, double t2) const {
        return std::max(std::abs(t1 - t1_of(t2)), std::abs(t2 - t2_of(t1)));
    }
};

inline SystemSolution damped_fixed_point(const SystemRhs& rhs, double t1, double t2,
                                         const SolverOptions& opts) {
    SystemSolution sol;
    sol.t1 = t1;
    sol.t2 = t2;
    sol.residual = rhs.residual(t1, t2);
    for (int iter = 1; iter <= opts.max_iterations; ++iter) {
        const double r1 = rhs.t1_of(t2);
        const double r2 = rhs.t2_of(t1);
        const double n1 = (1.0 - opts.damping) * t1 + opts.damping * r1;
        const double n2 = (1.0 - opts.damping) * t2 + opts.damping * r2;
        const double step = std::max(std::abs(n1 - t1), std::abs(n2 - t2));
        t1 = n1;
        t2 = n2;
        sol.iterations = iter;
        if (step <= opts.step_tol) {
            const double res = rhs.residual(t1, t2);
            sol.t1 = t1;
            sol.t2 = t2;
            sol.residual = res;
            if (res <= opts.residual_tol) {
                sol.converged = true;
                return sol;
            }
        }
    }
    const double res = rhs.residual(t1, t2);
    if (res < sol.residual) {
        sol.t1 = t1;
        sol.t2 = t2;
        sol.residual = res;
    }
    return sol;
}

// Equal sizes reduce the system to t = t2_of(t); t - t2_of(t) is increasing,
// so a bracketed bisection always lands.
inline SystemSolution equal_size_bisection(const SystemRhs& rhs, const SolverOptions& opts) {
    const auto defect = [&](double t) { return t - rhs.t2_of(t); };
    double lo = -1.0;
    double hi = 1.0;
    int iters = 0;
    for (int i = 0; i < 200 && defect(lo) > 0.0; ++i, ++iters) lo = lo * 2.0 - 1.0;
    for (int i = 0; i < 200 && defect(hi) < 0.0; ++i, ++iters) hi = hi * 2.0 + 1.0;
    for (int i = 0; i < 400 && (hi - lo) > 1e-15 * std::max(1.0, std::abs(lo)); ++i, ++iters) {
        const double mid = 0.5 * (lo + hi);
        (defect(mid) < 0.0 ? lo : hi) = mid;
    }
    const double t = 0.5 * (lo + hi);
    SystemSolution sol;
    sol.t1 = t;
    sol.t2 = t;
    sol.iterations = iters;
    sol.residual = rhs.residual(t, t);
    sol.converged = sol.residual <= opts.residual_tol;
    return sol;
}

}  // namespace detail

/// Solves the society-optimal threshold system
///   t1 = -(g2/g1) (mu +- sigma2 f2 / F2-or-(1-F2)),
///   t2 = -(g1/g2) (mu +- sigma1 f1 / F1-or-(1-F1)),
/// sign per rule. Damped fixed-point iteration from t = -mu and t = 0;
/// distinct converged fixed points are kept and the one with the highest
/// society value wins. Equal group sizes fall back to scalar bisection if
/// the iteration stalls.
inline SystemSolution solve_society_system(const EnvironmentParams& env, std::int64_t g1_size,
                                           std::int64_t g2_size, VotingRule rule,
                                           const SolverOptions& opts = SolverOptions{}) {
    validate(env);
    if (g1_size < 1 || g2_size < 1) {
        throw std::domain_error("solve_society_system: group sizes must be >= 1");
    }
    const detail::SystemRhs rhs{env, g1_size, g2_size, rule};

    std::vector<SystemSolution> found;
    SystemSolution best_attempt;
    bool have_attempt = false;
    for (const double start : {-env.mu, 0.0}) {
        SystemSolution sol = detail::damped_fixed_point(rhs, start, start, opts);
        if (sol.converged) {
            const bool duplicate =
                std::any_of(found.begin(), found.end(), [&](const SystemSolution& s) {
                    return std::abs(s.t1 - sol.t1) <= 1e-8 && std::abs(s.t2 - sol.t2) <= 1e-8;
                });
            if (!duplicate) found.push_back(sol);
        } else if (!have_attempt || sol.residual < best_attempt.residual) {
            best_attempt = sol;
            have_attempt = true;
        }
    }
    if (found.empty() && g1_size == g2_size) {
        SystemSolution sol = detail::equal_size_bisection(rhs, opts);
        if (sol.converged) found.push_back(sol);
        else if (!have_attempt || sol.residual < best_attempt.residual) best_attempt = sol;
    }
    if (found.empty()) {
        best_attempt.society_value = society_increment(
            env, GroupSpec{g1_size, best_attempt.t1}, GroupSpec{g2_size, best_attempt.t2}, rule);
        return best_attempt;
    }
    SystemSolution* best = &found.front();
    for (SystemSolution& sol : found) {
        sol.society_value = society_increment(env, GroupSpec{g1_size, sol.t1},
                                              GroupSpec{g2_size, sol.t2}, rule);
        if (sol.society_value > best->society_value) best = &sol;
    }
    return *best;
}

}  // namespace votewalk::optimize
