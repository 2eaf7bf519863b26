// votewalk: expectation reports, threshold optimization, society-system
// solving, Monte-Carlo walks, and the parameter sweeps behind the capital
// increment curves, all emitted as self-describing CSV.
//
// Exit codes: 0 success, 1 domain error, 2 usage error, 3 solver
// non-convergence.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "votewalk/votewalk.hpp"

namespace {

using votewalk::EnvironmentParams;
using votewalk::ExpectationReport;
using votewalk::full_report;
using votewalk::GroupSpec;
using votewalk::society_increment;
using votewalk::VotingRule;

struct CommonParams {
    double mu = 0.0;
    double sigma = 1.0;
    std::int64_t g1 = 1;
    std::int64_t g2 = 1;
    double t1 = 0.0;
    double t2 = 0.0;
    std::string rule = "and";
};

struct SweepParams {
    double from = 0.0;
    double to = 0.0;
    std::size_t points = 2;
};

struct SimParams {
    std::uint64_t steps = 1;
    std::uint64_t seed = 0;
    std::string mode = "mean";
};

VotingRule parse_rule(const std::string& rule) {
    return rule == "or" ? VotingRule::UnanimousRejection : VotingRule::UnanimousAcceptance;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

// a malformed command line or config file; rendered as exit code 2
struct UsageError {
    std::string message;
};

// flat key=value config file; explicit flags take precedence
void add_config(CLI::App* sub, std::string& path) {
    sub->add_option("--config", path, "read defaults from a flat key=value file");
}

// Expands the config file into "--key value" tokens injected right after the
// subcommand name. Later (explicit) flags win through the take-last policy,
// and every injected token still passes the normal option validators.
std::vector<std::string> config_tokens(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw UsageError{"cannot read config file: " + path};
    }
    const auto trim = [](std::string s) {
        const auto from = s.find_first_not_of(" \t\r");
        const auto to = s.find_last_not_of(" \t\r");
        return from == std::string::npos ? std::string() : s.substr(from, to - from + 1);
    };
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) {
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw UsageError{"config file " + path + ": expected key=value, got \"" +
                             stripped + "\""};
        }
        const std::string key = trim(stripped.substr(0, eq));
        if (key == "config") {
            throw UsageError{"config file " + path + ": nested config is not allowed"};
        }
        tokens.push_back("--" + key);
        tokens.push_back(trim(stripped.substr(eq + 1)));
    }
    return tokens;
}

void inject_config(std::vector<std::string>& args) {
    static const std::vector<std::string> kSubcommands = {
        "expect", "sweep-t2", "sweep-mu", "optimize", "simulate", "solve-system"};
    if (args.empty() ||
        std::find(kSubcommands.begin(), kSubcommands.end(), args[0]) == kSubcommands.end()) {
        return;
    }
    std::string path;
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
        }
    }
    if (path.empty()) return;
    const auto tokens = config_tokens(path);
    args.insert(args.begin() + 1, tokens.begin(), tokens.end());
}

void add_env_options(CLI::App* sub, CommonParams& p, bool required) {
    auto* mu = sub->add_option("--mu", p.mu, "mean proposed increment");
    auto* sigma = sub->add_option("--sigma", p.sigma, "std. dev. of proposed increments");
    auto* g1 = sub->add_option("--g1", p.g1, "size of group 1");
    auto* g2 = sub->add_option("--g2", p.g2, "size of group 2");
    if (required) {
        mu->required();
        sigma->required();
        g1->required();
        g2->required();
    }
    sub->add_option("--rule", p.rule, "voting rule: and (unanimous acceptance), or (unanimous rejection)")
        ->check(CLI::IsMember({"and", "or"}));
}

double sweep_point(const SweepParams& sweep, std::size_t i) {
    const double span = sweep.to - sweep.from;
    return sweep.from + span * static_cast<double>(i) / static_cast<double>(sweep.points - 1);
}

void check_sweep(const SweepParams& sweep) {
    if (!(sweep.from < sweep.to)) {
        throw std::domain_error("sweep: --from must be below --to");
    }
}

class CsvSink {
  public:
    explicit CsvSink(const std::string& path) {
        if (!path.empty()) {
            file_.open(path, std::ios::binary);
            if (!file_) {
                throw std::domain_error("cannot open CSV output file: " + path);
            }
        }
    }
    std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

  private:
    std::ofstream file_;
};

int run_expect(const CommonParams& p) {
    const auto rep = full_report({p.mu, p.sigma}, {p.g1, p.t1}, {p.g2, p.t2},
                                 parse_rule(p.rule));
    std::cout << "m1 " << fmt(rep.m1) << '\n'
              << "m2 " << fmt(rep.m2) << '\n'
              << "diff " << fmt(rep.diff) << '\n'
              << "society " << fmt(rep.society) << '\n'
              << "support_prob1 " << fmt(rep.support_prob[0]) << '\n'
              << "support_prob2 " << fmt(rep.support_prob[1]) << '\n'
              << "accept_prob " << fmt(rep.accept_prob) << '\n';
    return 0;
}

int run_sweep_t2(const CommonParams& p, const SweepParams& sweep, const std::string& csv) {
    check_sweep(sweep);
    CsvSink sink(csv);
    std::ostream& out = sink.stream();
    out << "# params: mu=" << fmt(p.mu) << " sigma=" << fmt(p.sigma) << " g1=" << p.g1
        << " g2=" << p.g2 << " t1=" << fmt(p.t1) << " rule=" << p.rule
        << " from=" << fmt(sweep.from) << " to=" << fmt(sweep.to)
        << " points=" << sweep.points << '\n';
    out << "t2,m1,m2,diff,society,accept_prob\n";
    for (std::size_t i = 0; i < sweep.points; ++i) {
        const double t2 = sweep_point(sweep, i);
        const auto rep = full_report({p.mu, p.sigma}, {p.g1, p.t1}, {p.g2, t2},
                                     parse_rule(p.rule));
        out << fmt(t2) << ',' << fmt(rep.m1) << ',' << fmt(rep.m2) << ',' << fmt(rep.diff)
            << ',' << fmt(rep.society) << ',' << fmt(rep.accept_prob) << '\n';
    }
    return 0;
}

int run_sweep_mu(const CommonParams& p, const SweepParams& sweep, const std::string& csv) {
    check_sweep(sweep);
    CsvSink sink(csv);
    std::ostream& out = sink.stream();
    out << "# params: sigma=" << fmt(p.sigma) << " g1=" << p.g1 << " g2=" << p.g2
        << " rule=" << p.rule << " from=" << fmt(sweep.from) << " to=" << fmt(sweep.to)
        << " points=" << sweep.points << '\n';
    out << "mu,t1,t2,society_value,residual\n";
    int failures = 0;
    for (std::size_t i = 0; i < sweep.points; ++i) {
        const double mu = sweep_point(sweep, i);
        const auto sol = votewalk::optimize::solve_society_system({mu, p.sigma}, p.g1, p.g2,
                                                                  parse_rule(p.rule));
        if (!sol.converged) {
            ++failures;
            std::cerr << "warning: solver did not converge at mu=" << fmt(mu)
                      << " (residual " << fmt(sol.residual) << ")\n";
        }
        out << fmt(mu) << ',' << fmt(sol.t1) << ',' << fmt(sol.t2) << ','
            << fmt(sol.society_value) << ',' << fmt(sol.residual) << '\n';
    }
    return failures == 0 ? 0 : 3;
}

int run_optimize(const CommonParams& p, const std::string& objective) {
    const EnvironmentParams env{p.mu, p.sigma};
    const GroupSpec g1{p.g1, p.t1};
    const auto rule = parse_rule(p.rule);
    const auto which = objective == "society" ? votewalk::optimize::Objective::SocietyTotal
                                              : votewalk::optimize::Objective::GroupAdvantage;
    const auto res = which == votewalk::optimize::Objective::SocietyTotal
                         ? votewalk::optimize::t2_society(env, g1, p.g2, rule)
                         : votewalk::optimize::t2_plus(env, g1, p.g2, rule);
    const double slope = votewalk::optimize::stationarity_check(env, g1, {p.g2, res.threshold},
                                                                rule, which, res.threshold);
    std::cout << "threshold " << fmt(res.threshold) << '\n'
              << "objective_value " << fmt(res.objective_value) << '\n'
              << "stationarity " << fmt(slope) << '\n';
    return 0;
}

int run_solve_system(const CommonParams& p) {
    const auto sol = votewalk::optimize::solve_society_system({p.mu, p.sigma}, p.g1, p.g2,
                                                              parse_rule(p.rule));
    std::cout << "t1 " << fmt(sol.t1) << '\n'
              << "t2 " << fmt(sol.t2) << '\n'
              << "society_value " << fmt(sol.society_value) << '\n'
              << "iterations " << sol.iterations << '\n'
              << "residual " << fmt(sol.residual) << '\n'
              << "converged " << (sol.converged ? "yes" : "no") << '\n';
    if (!sol.converged) {
        std::cerr << "warning: solver did not converge (best residual " << fmt(sol.residual)
                  << ")\n";
        return 3;
    }
    return 0;
}

int run_simulate(const CommonParams& p, const SimParams& sim, const std::string& csv) {
    votewalk::montecarlo::SimConfig cfg;
    cfg.env = {p.mu, p.sigma};
    cfg.groups = {GroupSpec{p.g1, p.t1}, GroupSpec{p.g2, p.t2}};
    cfg.rule = parse_rule(p.rule);
    cfg.steps = sim.steps;
    cfg.seed = sim.seed;
    cfg.mode = sim.mode == "full" ? votewalk::montecarlo::SimMode::FullVector
                                  : votewalk::montecarlo::SimMode::GroupMean;

    const auto res = votewalk::montecarlo::run_walk(cfg);
    std::cout << "mean_inc1 " << fmt(res.mean_inc[0]) << '\n'
              << "mean_inc2 " << fmt(res.mean_inc[1]) << '\n'
              << "stderr1 " << fmt(res.stderr_inc[0]) << '\n'
              << "stderr2 " << fmt(res.stderr_inc[1]) << '\n'
              << "accept_rate " << fmt(res.accept_rate) << '\n'
              << "diff_mean " << fmt(res.diff_mean) << '\n'
              << "diff_stderr " << fmt(res.diff_stderr) << '\n'
              << "society_mean " << fmt(res.society_mean) << '\n'
              << "final_capital1 " << fmt(res.final_capital[0]) << '\n'
              << "final_capital2 " << fmt(res.final_capital[1]) << '\n'
              << "steps " << res.steps << '\n';

    if (!csv.empty()) {
        CsvSink sink(csv);
        std::ostream& out = sink.stream();
        out << "# params: mu=" << fmt(p.mu) << " sigma=" << fmt(p.sigma) << " g1=" << p.g1
            << " g2=" << p.g2 << " t1=" << fmt(p.t1) << " t2=" << fmt(p.t2)
            << " rule=" << p.rule << " steps=" << sim.steps << " seed=" << sim.seed
            << " mode=" << sim.mode << '\n';
        out << "step,cap1,cap2\n";
        const votewalk::montecarlo::CounterRng rng(cfg.seed);
        double cap1 = 0.0;
        double cap2 = 0.0;
        for (std::uint64_t k = 0; k < cfg.steps; ++k) {
            const auto step = votewalk::montecarlo::simulate_step(rng, cfg, k);
            cap1 += step.incs[0];
            cap2 += step.incs[1];
            out << (k + 1) << ',' << fmt(cap1) << ',' << fmt(cap2) << '\n';
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-group voting walk: analytic expectations, optimal claim "
                 "thresholds, and Monte-Carlo verification"};
    app.require_subcommand(1);
    // config-injected tokens come first, so explicit flags must take the slot
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    CommonParams p;
    SweepParams sweep;
    SimParams sim;
    std::string csv;
    std::string objective = "advantage";
    std::string config_path;

    auto* expect = app.add_subcommand("expect", "analytic one-step expectation report");
    add_env_options(expect, p, true);
    expect->get_option("--rule")->required();
    expect->add_option("--t1", p.t1, "claim threshold of group 1")->required();
    expect->add_option("--t2", p.t2, "claim threshold of group 2")->required();
    add_config(expect, config_path);

    auto* sweep_t2 = app.add_subcommand("sweep-t2", "sweep the second claim threshold");
    add_env_options(sweep_t2, p, false);
    sweep_t2->add_option("--t1", p.t1, "claim threshold of group 1");
    sweep_t2->add_option("--from", sweep.from, "sweep start")->required();
    sweep_t2->add_option("--to", sweep.to, "sweep end")->required();
    sweep_t2->add_option("--points", sweep.points, "grid points (>= 2)")
        ->required()
        ->check(CLI::Range(std::size_t{2}, std::numeric_limits<std::size_t>::max()));
    sweep_t2->add_option("--csv", csv, "write CSV here instead of stdout");
    add_config(sweep_t2, config_path);

    auto* sweep_mu = app.add_subcommand("sweep-mu",
                                        "sweep the environment mean, solving the "
                                        "society-optimal thresholds at each point");
    add_env_options(sweep_mu, p, false);
    sweep_mu->get_option("--rule")->required();
    sweep_mu->add_option("--from", sweep.from, "sweep start")->required();
    sweep_mu->add_option("--to", sweep.to, "sweep end")->required();
    sweep_mu->add_option("--points", sweep.points, "grid points (>= 2)")
        ->required()
        ->check(CLI::Range(std::size_t{2}, std::numeric_limits<std::size_t>::max()));
    sweep_mu->add_option("--csv", csv, "write CSV here instead of stdout");
    add_config(sweep_mu, config_path);

    auto* optimize = app.add_subcommand("optimize", "closed-form optimal second claim");
    add_env_options(optimize, p, false);
    optimize->get_option("--rule")->required();
    optimize->add_option("--t1", p.t1, "fixed claim threshold of group 1")->required();
    optimize->add_option("--objective", objective, "advantage or society")
        ->required()
        ->check(CLI::IsMember({"advantage", "society"}));
    add_config(optimize, config_path);

    auto* solve = app.add_subcommand("solve-system", "society-optimal threshold pair");
    add_env_options(solve, p, false);
    solve->get_option("--rule")->required();
    add_config(solve, config_path);

    auto* simulate = app.add_subcommand("simulate", "seeded Monte-Carlo capital walk");
    add_env_options(simulate, p, false);
    simulate->add_option("--t1", p.t1, "claim threshold of group 1");
    simulate->add_option("--t2", p.t2, "claim threshold of group 2");
    simulate->add_option("--steps", sim.steps, "number of proposals")
        ->required()
        ->check(CLI::PositiveNumber);
    simulate->add_option("--seed", sim.seed, "random seed")->required();
    simulate->add_option("--mode", sim.mode, "mean (group means) or full (member draws)")
        ->check(CLI::IsMember({"mean", "full"}));
    simulate->add_option("--csv", csv, "write the per-step capital trajectory here");
    add_config(simulate, config_path);

    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        inject_config(args);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.message << '\n';
        return 2;
    }
    std::reverse(args.begin(), args.end());  // CLI11 consumes tokens back to front
    try {
        app.parse(std::move(args));
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (app.got_subcommand(expect)) return run_expect(p);
        if (app.got_subcommand(sweep_t2)) return run_sweep_t2(p, sweep, csv);
        if (app.got_subcommand(sweep_mu)) return run_sweep_mu(p, sweep, csv);
        if (app.got_subcommand(optimize)) return run_optimize(p, objective);
        if (app.got_subcommand(solve)) return run_solve_system(p);
        if (app.got_subcommand(simulate)) return run_simulate(p, sim, csv);
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
