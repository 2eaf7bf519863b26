// Seedable Monte-Carlo walk of group capitals under the two voting rules.
// The generator is counter-based: draw i of a (seed, stream) pair is a pure
// function of (seed, stream, i), so any partition of the step range across
// threads replays the identical draw sequence. Aggregation runs over fixed
// 65536-step chunks whose partial sums are combined in chunk order, making
// every WalkResult field bitwise independent of the thread count.

#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <thread>
#include <vector>

#include "votewalk/model.hpp"

namespace votewalk::montecarlo {

enum class SimMode {
    FullVector,  // g1+g2 member draws per step; the structural oracle
    GroupMean,   // two group-mean draws per step; same decision law, O(1)
};

struct SimConfig {
    EnvironmentParams env;
    std::array<GroupSpec, 2> groups;
    VotingRule rule = VotingRule::UnanimousAcceptance;
    std::uint64_t steps = 1;
    std::uint64_t seed = 0;
    SimMode mode = SimMode::GroupMean;
};

inline void validate(const SimConfig& cfg) {
    votewalk::validate(cfg.env);
    votewalk::validate(cfg.groups[0]);
    votewalk::validate(cfg.groups[1]);
    if (cfg.steps < 1) {
        throw std::domain_error("SimConfig: steps must be >= 1");
    }
}

namespace detail {

// ALGORITHM AS 241 (PPND16): normal deviate with lower-tail area u,
// accurate to about 1 part in 1e16 on the open unit interval.
inline double inverse_std_cdf(double u) {
    if (u <= 0.0) return -std::numeric_limits<double>::infinity();
    if (u >= 1.0) return std::numeric_limits<double>::infinity();
    const double q = u - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                     6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
                   1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
                 1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
               (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                     3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
                   5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
                 4.2313330701600911252e+1) * r + 1.0);
    }
    double r = std::sqrt(-std::log(q < 0.0 ? u : 1.0 - u));
    double z;
    if (r <= 5.0) {
        r -= 1.6;
        z = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                  2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
                3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
              4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                  1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
              2.05319162663775882187e+0) * r + 1.0);
    } else {
        r -= 5.0;
        z = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                  1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
              5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                  1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
              5.99832206555887937690e-1) * r + 1.0);
    }
    return q < 0.0 ? -z : z;
}

}  // namespace detail

/// Counter-based generator (SplitMix64 finalizer over a keyed counter).
/// Stateless after construction: draw i is addressable in O(1), so threads
/// may consume disjoint index ranges in any order without coordination.
class CounterRng {
  public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : base_(mix(seed ^ mix(stream + kGamma))) {}

    std::uint64_t bits(std::uint64_t i) const { return mix(base_ + (i + 1) * kGamma); }

    // strictly inside (0, 1): (k + 1/2) * 2^-53 for k in [0, 2^53)
    double uniform01(std::uint64_t i) const {
        return (static_cast<double>(bits(i) >> 11) + 0.5) * 0x1p-53;
    }

    double normal(std::uint64_t i) const { return detail::inverse_std_cdf(uniform01(i)); }

  private:
    static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ull;

    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ull;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebull;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t base_;
};

struct StepOutcome {
    bool accepted = false;
    std::array<bool, 2> supports{};  // group average met its claim threshold
    std::array<double, 2> incs{};    // realized per-member increments, 0 if rejected
};

/// One proposal. Step k consumes counter indices [2k, 2k+2) in GroupMean
/// mode and [k(g1+g2), (k+1)(g1+g2)) in FullVector mode; the fixed budget
/// keeps every step directly addressable.
inline StepOutcome simulate_step(const CounterRng& rng, const SimConfig& cfg,
                                 std::uint64_t step) {
    std::array<double, 2> means;
    if (cfg.mode == SimMode::GroupMean) {
        const std::uint64_t i0 = 2 * step;
        for (int g = 0; g < 2; ++g) {
            const double sd = cfg.env.sigma / std::sqrt(static_cast<double>(cfg.groups[g].size));
            means[g] = cfg.env.mu + sd * rng.normal(i0 + static_cast<std::uint64_t>(g));
        }
    } else {
        const std::uint64_t per_step = static_cast<std::uint64_t>(cfg.groups[0].size) +
                                       static_cast<std::uint64_t>(cfg.groups[1].size);
        std::uint64_t i = step * per_step;
        for (int g = 0; g < 2; ++g) {
            double sum = 0.0;
            for (std::int64_t k = 0; k < cfg.groups[g].size; ++k) {
                sum += cfg.env.mu + cfg.env.sigma * rng.normal(i++);
            }
            means[g] = sum / static_cast<double>(cfg.groups[g].size);
        }
    }
    StepOutcome out;
    for (int g = 0; g < 2; ++g) {
        out.supports[g] = means[g] >= cfg.groups[g].threshold;
    }
    out.accepted = cfg.rule == VotingRule::UnanimousAcceptance
                       ? (out.supports[0] && out.supports[1])
                       : (out.supports[0] || out.supports[1]);
    if (out.accepted) {
        out.incs = means;
    }
    return out;
}

struct WalkResult {
    std::array<double, 2> mean_inc{};    // sample mean of per-step increment, 0s included
    std::array<double, 2> stderr_inc{};  // standard error of mean_inc
    double accept_rate = 0.0;
    double diff_mean = 0.0;    // mean_inc[0] - mean_inc[1], computed as exactly that
    double diff_stderr = 0.0;  // standard error of the per-step paired difference
    double society_mean = 0.0;
    std::array<double, 2> final_capital{};
    std::uint64_t steps = 0;
};

namespace detail {

struct ChunkStats {
    std::array<double, 2> sum{};
    std::array<double, 2> sumsq{};
    double dsum = 0.0;
    double dsumsq = 0.0;
    std::uint64_t accepted = 0;
};

inline ChunkStats accumulate_chunk(const CounterRng& rng, const SimConfig& cfg,
                                   std::uint64_t begin, std::uint64_t end) {
    ChunkStats s;
    for (std::uint64_t k = begin; k < end; ++k) {
        const StepOutcome o = simulate_step(rng, cfg, k);
        for (int g = 0; g < 2; ++g) {
            s.sum[g] += o.incs[g];
            s.sumsq[g] += o.incs[g] * o.incs[g];
        }
        const double d = o.incs[0] - o.incs[1];
        s.dsum += d;
        s.dsumsq += d * d;
        s.accepted += o.accepted ? 1 : 0;
    }
    return s;
}

inline double stderr_of(double sum, double sumsq, std::uint64_t n) {
    if (n < 2) return 0.0;
    const double dn = static_cast<double>(n);
    const double var = std::max(0.0, (sumsq - sum * sum / dn) / (dn - 1.0));
    return std::sqrt(var / dn);
}

struct StepMoments {
    std::array<double, 2> var{};  // Var of one step's realized increment
    double var_diff = 0.0;        // Var of the paired difference
};

// Closed-form per-step variances. With s_i = mu F_i + sigma_i f_i and
// q_i = E[mean^2; support] = (mu^2 + sigma_i^2) F_i + sigma_i (mu + t_i) f_i:
//   acceptance: E[inc_i^2] = q_i F_j,              E[inc_1 inc_2] = s_1 s_2
//   rejection:  E[inc_i^2] = q_i + F_j (w_i - q_i), E[inc_1 inc_2] = mu(s_1 + s_2) - s_1 s_2
// where w_i = mu^2 + sigma_i^2 and j is the other group.
inline StepMoments analytic_step_moments(const EnvironmentParams& env, const GroupSpec& g1,
                                         const GroupSpec& g2, VotingRule rule) {
    const GroupTerms terms[2] = {group_terms(env, g1), group_terms(env, g2)};
    const double thresh[2] = {g1.threshold, g2.threshold};
    double m[2];
    double s[2];
    double q[2];
    double w[2];
    for (int i = 0; i < 2; ++i) {
        const GroupTerms& own = terms[i];
        m[i] = votewalk::detail::member_expectation(env.mu, own, terms[1 - i], rule);
        s[i] = env.mu * own.cdf + own.sd * own.pdf;
        w[i] = env.mu * env.mu + own.sd * own.sd;
        // infinite thresholds give pdf == 0 with mu + t infinite; avoid 0 * inf
        q[i] = w[i] * own.cdf +
               (own.pdf == 0.0 ? 0.0 : own.sd * (env.mu + thresh[i]) * own.pdf);
    }
    double second[2];
    double cross;
    if (rule == VotingRule::UnanimousAcceptance) {
        second[0] = q[0] * terms[1].cdf;
        second[1] = q[1] * terms[0].cdf;
        cross = s[0] * s[1];
    } else {
        second[0] = q[0] + terms[1].cdf * (w[0] - q[0]);
        second[1] = q[1] + terms[0].cdf * (w[1] - q[1]);
        cross = env.mu * (s[0] + s[1]) - s[0] * s[1];
    }
    StepMoments out;
    for (int i = 0; i < 2; ++i) {
        out.var[i] = std::max(0.0, second[i] - m[i] * m[i]);
    }
    const double cov = cross - m[0] * m[1];
    out.var_diff = std::max(0.0, out.var[0] + out.var[1] - 2.0 * cov);
    return out;
}

// VOTE_WALK_THREADS caps parallelism for explicit and auto requests alike
inline unsigned resolve_threads(unsigned requested) {
    unsigned n = requested != 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
    if (const char* cap = std::getenv("VOTE_WALK_THREADS")) {
        char* end = nullptr;
        const unsigned long v = std::strtoul(cap, &end, 10);
        if (end != cap && v >= 1) {
            n = static_cast<unsigned>(std::min<unsigned long>(n, v));
        }
    }
    return std::max(1u, n);
}

}  // namespace detail

/// Runs the whole walk. threads = 0 picks the hardware concurrency; any
/// thread count yields bitwise-identical results for a fixed (cfg, seed).
inline WalkResult run_walk(const SimConfig& cfg, unsigned threads = 0) {
    validate(cfg);
    const CounterRng rng(cfg.seed);
    constexpr std::uint64_t kChunk = 65536;
    const std::uint64_t nchunks = (cfg.steps + kChunk - 1) / kChunk;
    std::vector<detail::ChunkStats> parts(nchunks);

    const unsigned nthreads = static_cast<unsigned>(std::min<std::uint64_t>(
        detail::resolve_threads(threads), nchunks));
    const auto fill = [&](std::uint64_t c) {
        parts[c] = detail::accumulate_chunk(rng, cfg, c * kChunk,
                                            std::min(cfg.steps, (c + 1) * kChunk));
    };
    if (nthreads <= 1) {
        for (std::uint64_t c = 0; c < nchunks; ++c) fill(c);
    } else {
        std::atomic<std::uint64_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(nthreads);
        for (unsigned t = 0; t < nthreads; ++t) {
            pool.emplace_back([&] {
                for (std::uint64_t c = next.fetch_add(1); c < nchunks; c = next.fetch_add(1)) {
                    fill(c);
                }
            });
        }
        for (std::thread& th : pool) th.join();
    }

    detail::ChunkStats total;  // combined in chunk order, not completion order
    for (const detail::ChunkStats& p : parts) {
        for (int g = 0; g < 2; ++g) {
            total.sum[g] += p.sum[g];
            total.sumsq[g] += p.sumsq[g];
        }
        total.dsum += p.dsum;
        total.dsumsq += p.dsumsq;
        total.accepted += p.accepted;
    }

    const double n = static_cast<double>(cfg.steps);
    WalkResult res;
    res.steps = cfg.steps;
    for (int g = 0; g < 2; ++g) {
        res.mean_inc[g] = total.sum[g] / n;
        res.stderr_inc[g] = detail::stderr_of(total.sum[g], total.sumsq[g], cfg.steps);
        res.final_capital[g] = total.sum[g];
    }
    res.accept_rate = static_cast<double>(total.accepted) / n;
    res.diff_mean = res.mean_inc[0] - res.mean_inc[1];
    res.diff_stderr = detail::stderr_of(total.dsum, total.dsumsq, cfg.steps);
    res.society_mean = static_cast<double>(cfg.groups[0].size) * res.mean_inc[0] +
                       static_cast<double>(cfg.groups[1].size) * res.mean_inc[1];
    return res;
}

struct CheckRow {
    const char* name = "";
    double simulated = 0.0;
    double analytic = 0.0;
    double stderr_est = 0.0;
    bool ok = false;
};

struct ValidationReport {
    WalkResult walk;
    ExpectationReport analytic;
    std::array<CheckRow, 4> checks{};  // m1, m2, diff, accept_rate
    bool all_ok = false;
    bool stderr_warning = false;  // some standard error is not below the analytic scale
};

/// Flags every statistic deviating from its analytic value by more than
/// tolerance_sigmas standard errors. The error scale is the larger of the
/// sample standard error and the closed-form one, so configurations whose
/// rare-event samples collapse to zero are still judged fairly; an absolute
/// floor of 1e-12 covers exactly degenerate cases.
inline ValidationReport compare_to_report(const WalkResult& walk, const SimConfig& cfg,
                                          const ExpectationReport& analytic,
                                          double tolerance_sigmas) {
    ValidationReport rep;
    rep.walk = walk;
    rep.analytic = analytic;
    const double n = static_cast<double>(walk.steps);
    const auto moments =
        detail::analytic_step_moments(cfg.env, cfg.groups[0], cfg.groups[1], cfg.rule);
    const double accept_se =
        std::sqrt(std::max(0.0, analytic.accept_prob * (1.0 - analytic.accept_prob) / n));
    const auto row = [&](const char* name, double mc, double truth, double se) {
        CheckRow r;
        r.name = name;
        r.simulated = mc;
        r.analytic = truth;
        r.stderr_est = se;
        r.ok = std::abs(mc - truth) <= tolerance_sigmas * se + 1e-12;
        return r;
    };
    rep.checks[0] = row("m1", walk.mean_inc[0], analytic.m1,
                        std::max(walk.stderr_inc[0], std::sqrt(moments.var[0] / n)));
    rep.checks[1] = row("m2", walk.mean_inc[1], analytic.m2,
                        std::max(walk.stderr_inc[1], std::sqrt(moments.var[1] / n)));
    rep.checks[2] = row("diff", walk.diff_mean, analytic.diff,
                        std::max(walk.diff_stderr, std::sqrt(moments.var_diff / n)));
    rep.checks[3] = row("accept_rate", walk.accept_rate, analytic.accept_prob, accept_se);
    rep.all_ok = true;
    for (const CheckRow& r : rep.checks) {
        rep.all_ok = rep.all_ok && r.ok;
        if (std::abs(r.analytic) > 0.0 && r.stderr_est >= std::abs(r.analytic)) {
            rep.stderr_warning = true;
        }
    }
    return rep;
}

inline ValidationReport validate_against_model(const SimConfig& cfg, double tolerance_sigmas,
                                               unsigned threads = 0) {
    const WalkResult walk = run_walk(cfg, threads);
    const ExpectationReport analytic =
        full_report(cfg.env, cfg.groups[0], cfg.groups[1], cfg.rule);
    return compare_to_report(walk, cfg, analytic, tolerance_sigmas);
}

}  // namespace votewalk::montecarlo
