// Acceptance gate: seven checks, one [PASS]/[FAIL] line each, exit code equal
// to the number of failed checks. The heavy Monte Carlo check prints progress
// lines while it runs; the verdict lines always appear in order 1..7.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cqr/distributions.hpp"
#include "cqr/efficiency.hpp"
#include "cqr/estimators.hpp"
#include "cqr/lp.hpp"
#include "cqr/numerics.hpp"
#include "cqr/simulation.hpp"
#include "oracles.hpp"

namespace {

struct Criterion {
    bool ok = true;
    std::string detail;

    void fail(const std::string& why) {
        ok = false;
        if (!detail.empty()) detail += "; ";
        detail += why;
    }
    void require(bool condition, const std::string& why) {
        if (!condition) fail(why);
    }
};

void print_verdict(int index, const std::string& name, const Criterion& c) {
    if (c.ok) {
        std::printf("[PASS] criterion %d: %s\n", index, name.c_str());
    } else {
        std::printf("[FAIL] criterion %d: %s (%s)\n", index, name.c_str(), c.detail.c_str());
    }
    std::fflush(stdout);
}

std::string fmt(double x) {
    std::ostringstream out;
    out.precision(6);
    out << x;
    return out.str();
}

// ---------------------------------------------------------------- criterion 1
Criterion pinned_limits() {
    Criterion c;
    const double pi = M_PI;
    c.require(std::abs(cqr::delta_limit(cqr::ErrorDistribution::normal(0.0, 1.0)) - 3.0 / pi) <
                  1e-12,
              "normal limit != 3/pi");
    c.require(std::abs(cqr::delta_limit(cqr::ErrorDistribution::double_exponential()) - 1.5) <
                  1e-12,
              "double exponential limit != 1.5");
    c.require(std::abs(cqr::delta_limit(cqr::ErrorDistribution::logistic()) - pi * pi / 9.0) <
                  1e-12,
              "logistic limit != pi^2/9");
    const double t3 = cqr::delta_closed_form(cqr::ErrorDistribution::student_t(3.0));
    c.require(std::abs(t3 - 18.75 / (pi * pi)) < 1e-12, "t(3) closed form != 18.75/pi^2");
    c.require(std::abs(t3 - 1.9) < 1e-3, "t(3) value not 1.9 to printed precision");
    return c;
}

// ------------------------------------------------------- criteria 2 and 3
void family_sweep(Criterion& agreement, Criterion& bound, std::vector<double>* deltas) {
    const double floor = cqr::universal_lower_bound();
    auto probe = [&](const cqr::ErrorDistribution& d, const std::string& label) {
        const double closed = cqr::delta_closed_form(d);
        const double quad = cqr::delta_limit(d);
        if (std::abs(closed - quad) > 1e-4 * std::abs(closed)) {
            agreement.fail(label + ": closed " + fmt(closed) + " vs quadrature " + fmt(quad));
        }
        if (!(closed > floor)) bound.fail(label + ": delta " + fmt(closed) + " <= bound");
        deltas->push_back(closed);
    };
    for (double v : {2.5, 3.0, 5.0, 10.0, 50.0}) {
        probe(cqr::ErrorDistribution::student_t(v), "t(v=" + fmt(v) + ")");
    }
    for (int i = 1; i <= 9; ++i) {
        const double r = 0.1 * i;
        probe(cqr::ErrorDistribution::normal_mixture(r), "mixnormal(r=" + fmt(r) + ")");
    }
    for (double alpha : {0.0, 1.0, 5.0, 14.0, 40.0}) {
        probe(cqr::ErrorDistribution::double_gamma_mixture(alpha),
              "dgamma(alpha=" + fmt(alpha) + ")");
    }
}

// ---------------------------------------------------------------- criterion 4
Criterion grid_convergence() {
    Criterion c;
    const std::vector<std::pair<std::string, cqr::ErrorDistribution>> laws = {
        {"normal", cqr::ErrorDistribution::normal(0.0, 1.0)},
        {"logistic", cqr::ErrorDistribution::logistic()},
        {"double_exponential", cqr::ErrorDistribution::double_exponential()},
        {"t(3)", cqr::ErrorDistribution::student_t(3.0)},
    };
    for (const auto& [label, d] : laws) {
        for (int k = 9; k <= 29; ++k) {
            const double ratio = cqr::convergence_ratio(k, d);
            if (std::abs(ratio - 1.0) >= 0.05) {
                c.fail(label + " K=" + std::to_string(k) + " ratio " + fmt(ratio));
            }
        }
    }
    return c;
}

// ---------------------------------------------------------------- criterion 5
Criterion brute_force_equivalence() {
    Criterion c;
    std::mt19937_64 gen(20240815);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<int> n_pick(2, 6);
    std::uniform_int_distribution<int> p_pick(0, 1);
    std::uniform_int_distribution<int> k_pick(1, 2);

    for (int rep = 0; rep < 20; ++rep) {
        const int n = n_pick(gen);
        const int p = p_pick(gen);
        const int k = k_pick(gen);
        cqr::Matrix x(n, p);
        cqr::Vector y(n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < p; ++j) x(i, j) = normal(gen);
            y(i) = 0.5 + (p > 0 ? 1.2 * x(i, 0) : 0.0) + normal(gen);
        }
        const auto data = cqr::Dataset::from_raw(x, y);
        const auto grid = cqr::QuantileGrid::equally_spaced(k);
        double lp_objective = 0.0;
        try {
            lp_objective = cqr::fit_cqr(data, grid).objective;
        } catch (const std::exception& err) {
            c.fail("instance " + std::to_string(rep) + ": fit failed: " + err.what());
            continue;
        }
        const std::vector<double> levels(grid.levels.data(), grid.levels.data() + k);
        const auto lattice = testutil::lattice_cqr_minimum(data.X, data.y, levels);
        if (std::abs(lp_objective - lattice.objective) > 1e-4) {
            c.fail("instance " + std::to_string(rep) + ": lp " + fmt(lp_objective) +
                   " vs lattice " + fmt(lattice.objective));
        }
        if (lattice.objective < lp_objective - 1e-9) {
            c.fail("instance " + std::to_string(rep) + ": lattice undercuts the lp optimum");
        }
    }

    // intercept-only quantile fits must land inside the optimal interval
    std::uniform_real_distribution<double> tau_pick(0.15, 0.85);
    for (int rep = 0; rep < 20; ++rep) {
        const int n = n_pick(gen);
        cqr::Matrix x(n, 0);
        cqr::Vector y(n);
        std::vector<double> values;
        for (int i = 0; i < n; ++i) {
            y(i) = 3.0 * normal(gen);
            values.push_back(y(i));
        }
        const double tau = (rep % 4 == 0) ? 0.5 : tau_pick(gen);
        const auto fit = cqr::fit_qr(cqr::Dataset::from_raw(x, y), tau);
        const auto interval = testutil::sample_quantile_interval(values, tau);
        if (fit.intercepts(0) < interval.lo - 1e-9 || fit.intercepts(0) > interval.hi + 1e-9) {
            c.fail("quantile case " + std::to_string(rep) + ": intercept " +
                   fmt(fit.intercepts(0)) + " outside [" + fmt(interval.lo) + ", " +
                   fmt(interval.hi) + "]");
        }
    }
    return c;
}

// ---------------------------------------------------------------- criterion 6
struct StudyOutcome {
    double ls_me = 0.0;
    double cqr_me = 0.0;
    double acqr_me = 0.0;
    double acqr_nc = 0.0;
    double acqr_nic = 0.0;
};

StudyOutcome run_benchmark_study(const std::string& preset, std::uint64_t seed, Criterion& c) {
    cqr::SimulationConfig config = cqr::SimulationConfig::preset(preset);
    config.methods = {"ls_oracle", "cqr_oracle", "acqr"};
    config.seed = seed;
    const auto start = std::chrono::steady_clock::now();
    const cqr::SimulationReport report = cqr::run_study(config);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    StudyOutcome outcome;
    const std::string tag = preset + " seed " + std::to_string(seed);
    for (const char* method : {"ls_oracle", "cqr_oracle", "acqr"}) {
        const auto& summary = report.summary.at(method);
        if (summary.failures != 0 || summary.successes != config.replications) {
            c.fail(tag + ": " + method + " had " + std::to_string(summary.failures) +
                   " failures");
        }
        if (!std::isfinite(summary.mean_me)) {
            c.fail(tag + ": " + method + " mean model error not finite");
        }
    }
    outcome.ls_me = report.summary.at("ls_oracle").mean_me;
    outcome.cqr_me = report.summary.at("cqr_oracle").mean_me;
    outcome.acqr_me = report.summary.at("acqr").mean_me;
    outcome.acqr_nc = report.summary.at("acqr").mean_nc;
    outcome.acqr_nic = report.summary.at("acqr").mean_nic;
    std::printf(
        "  .. %s seed %llu: mean ME ls=%.4g cqr=%.4g acqr=%.4g, acqr (NC, NIC)=(%.2f, %.2f) "
        "[%.0f s]\n",
        preset.c_str(), static_cast<unsigned long long>(seed), outcome.ls_me, outcome.cqr_me,
        outcome.acqr_me, outcome.acqr_nc, outcome.acqr_nic, seconds);
    std::fflush(stdout);
    return outcome;
}

Criterion benchmark_orderings() {
    Criterion c;
    const std::vector<std::uint64_t> seeds = {1, 2, 3};

    for (std::uint64_t seed : seeds) {
        const std::string tag = "ex1 seed " + std::to_string(seed);
        const StudyOutcome r = run_benchmark_study("ex1", seed, c);
        c.require(r.ls_me < r.cqr_me && r.cqr_me < r.acqr_me,
                  tag + ": expected ls < cqr < acqr, got " + fmt(r.ls_me) + ", " +
                      fmt(r.cqr_me) + ", " + fmt(r.acqr_me));
        c.require(r.ls_me >= 0.04 && r.ls_me <= 0.16,
                  tag + ": ls mean ME " + fmt(r.ls_me) + " outside [0.04, 0.16]");
        c.require(r.acqr_nc >= 2.9, tag + ": acqr mean NC " + fmt(r.acqr_nc) + " < 2.9");
        c.require(r.acqr_nic <= 1.2, tag + ": acqr mean NIC " + fmt(r.acqr_nic) + " > 1.2");
    }

    for (const std::string preset : {"ex2", "ex3", "ex4"}) {
        for (std::uint64_t seed : seeds) {
            const std::string tag = preset + " seed " + std::to_string(seed);
            const StudyOutcome r = run_benchmark_study(preset, seed, c);
            c.require(r.cqr_me < r.ls_me, tag + ": expected cqr-oracle " + fmt(r.cqr_me) +
                                              " < ls-oracle " + fmt(r.ls_me));
            c.require(r.acqr_nc >= 2.9, tag + ": acqr mean NC " + fmt(r.acqr_nc) + " < 2.9");
            c.require(r.acqr_nic <= 1.2, tag + ": acqr mean NIC " + fmt(r.acqr_nic) + " > 1.2");
        }
    }

    for (std::uint64_t seed : seeds) {
        const std::string tag = "ex5 seed " + std::to_string(seed);
        const StudyOutcome r = run_benchmark_study("ex5", seed, c);
        c.require(r.ls_me > 100.0 * r.cqr_me, tag + ": ls-oracle " + fmt(r.ls_me) +
                                                  " not > 100x cqr-oracle " + fmt(r.cqr_me));
        c.require(r.cqr_me < 1.0, tag + ": cqr-oracle mean ME " + fmt(r.cqr_me) + " >= 1");
        c.require(r.acqr_nc >= 2.9, tag + ": acqr mean NC " + fmt(r.acqr_nc) + " < 2.9");
        c.require(r.acqr_nic <= 1.2, tag + ": acqr mean NIC " + fmt(r.acqr_nic) + " > 1.2");
    }
    return c;
}

// ---------------------------------------------------------------- criterion 7
Criterion property_suite() {
    Criterion c;
    std::mt19937_64 gen(777);
    std::normal_distribution<double> normal(0.0, 1.0);

    // check-loss identities and convexity
    c.require(cqr::check_loss(0.0, 0.3) == 0.0, "check loss at zero");
    c.require(std::abs(cqr::check_loss(2.0, 0.5) - 1.0) < 1e-15, "check loss (2, 0.5)");
    c.require(std::abs(cqr::check_loss(-4.0, 0.25) - 3.0) < 1e-15, "check loss (-4, 0.25)");
    {
        std::uniform_real_distribution<double> ts(-20.0, 20.0);
        std::uniform_real_distribution<double> taus(0.01, 0.99);
        std::uniform_real_distribution<double> mix(0.0, 1.0);
        for (int rep = 0; rep < 300; ++rep) {
            const double a = ts(gen), b = ts(gen), tau = taus(gen), w = mix(gen);
            const double lhs = cqr::check_loss(w * a + (1.0 - w) * b, tau);
            const double rhs =
                w * cqr::check_loss(a, tau) + (1.0 - w) * cqr::check_loss(b, tau);
            if (lhs > rhs + 1e-12) {
                c.fail("check-loss convexity violated");
                break;
            }
        }
        for (int rep = 0; rep < 100; ++rep) {
            const double t = ts(gen);
            if (std::abs(cqr::check_loss(t, 0.5) - 0.5 * std::abs(t)) > 1e-14) {
                c.fail("check-loss |t|/2 identity violated");
                break;
            }
        }
    }

    // complementary slackness and quantile counts at LP optima
    {
        const int n = 30;
        cqr::Matrix x(n, 3);
        cqr::Vector y(n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < 3; ++j) x(i, j) = normal(gen);
            y(i) = 1.0 + 2.0 * x(i, 0) - x(i, 1) + normal(gen);
        }
        const auto grid = cqr::QuantileGrid::equally_spaced(5);
        const auto problem = cqr::build_cqr_lp(x, y, grid);
        const auto sol = cqr::solve_lp(problem);
        if (sol.status != cqr::LpStatus::optimal) {
            c.fail("composite LP did not reach optimality");
        } else {
            const double slack =
                (sol.x.array() * sol.reduced_costs.array()).abs().maxCoeff();
            c.require(slack < 1e-7,
                      "complementary slackness residual " + fmt(slack) + " >= 1e-7");
            cqr::CqrColumnMap map{n, 5, 3};
            const cqr::Vector beta = cqr::cqr_extract_beta(map, sol.x);
            const cqr::Vector intercepts = cqr::cqr_extract_intercepts(map, sol.x);
            for (int k = 0; k < 5; ++k) {
                int below = 0, at_or_below = 0;
                for (int i = 0; i < n; ++i) {
                    const double r = y(i) - intercepts(k) - x.row(i).dot(beta);
                    if (r < -1e-9) ++below;
                    if (r <= 1e-9) ++at_or_below;
                }
                const double target = n * grid.levels(k);
                if (below > target + 1e-9 || at_or_below < target - 1e-9) {
                    c.fail("quantile count property violated at level " +
                           fmt(grid.levels(k)));
                }
            }
        }
    }

    // penalty limits: zero penalty reproduces the plain fit; a huge penalty
    // kills every slope and leaves per-level sample quantiles
    {
        const int n = 30;
        cqr::Matrix x(n, 3);
        cqr::Vector y(n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < 3; ++j) x(i, j) = normal(gen);
            y(i) = 2.0 * x(i, 0) - 0.5 * x(i, 2) + normal(gen);
        }
        const auto train = cqr::Dataset::from_raw(x, y);
        cqr::Matrix xv(n, 3);
        cqr::Vector yv(n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < 3; ++j) xv(i, j) = normal(gen);
            yv(i) = 2.0 * xv(i, 0) - 0.5 * xv(i, 2) + normal(gen);
        }
        const auto validation = cqr::Dataset::from_raw(xv, yv);
        const auto grid = cqr::QuantileGrid::equally_spaced(3);

        cqr::Vector zero(1);
        zero << 0.0;
        const auto plain = cqr::fit_cqr(train, grid);
        const auto unpenalized = cqr::fit_acqr(train, validation, grid, zero);
        c.require((unpenalized.beta - plain.beta).cwiseAbs().maxCoeff() < 1e-10,
                  "zero-penalty fit drifted from the plain fit");

        cqr::Vector huge(1);
        huge << 1e9 * n;
        const auto shrunk = cqr::fit_acqr(train, validation, grid, huge);
        c.require(shrunk.beta.cwiseAbs().maxCoeff() < 1e-10,
                  "infinite-penalty limit kept a nonzero slope");
        std::vector<double> values(y.data(), y.data() + n);
        for (int k = 0; k < 3; ++k) {
            const auto interval =
                testutil::sample_quantile_interval(values, grid.levels(k));
            if (shrunk.intercepts(k) < interval.lo - 1e-8 ||
                shrunk.intercepts(k) > interval.hi + 1e-8) {
                c.fail("infinite-penalty intercept escaped the sample quantile interval");
            }
        }
    }

    // scale invariance of the efficiency limit
    for (const auto& base :
         {cqr::ErrorDistribution::normal(0.0, 1.0), cqr::ErrorDistribution::logistic(),
          cqr::ErrorDistribution::student_t(3.0), cqr::ErrorDistribution::normal_mixture(0.5),
          cqr::ErrorDistribution::double_gamma_mixture(14.0)}) {
        cqr::ErrorDistribution scaled = base;
        const double reference = cqr::delta_limit(base);
        for (double s : {0.1, 10.0}) {
            scaled.scale = s;
            if (std::abs(cqr::delta_limit(scaled) - reference) >= 1e-10) {
                c.fail(std::string("delta not scale-invariant for ") +
                       cqr::kind_name(base.kind));
            }
        }
    }

    // sampler / cdf agreement
    {
        cqr::RngStream rng(9001);
        std::uint64_t index = 0;
        for (const auto& d :
             {cqr::ErrorDistribution::normal(0.0, 3.0), cqr::ErrorDistribution::double_exponential(),
              cqr::ErrorDistribution::logistic(), cqr::ErrorDistribution::student_t(3.0),
              cqr::ErrorDistribution::cauchy(), cqr::ErrorDistribution::normal_mixture(0.5),
              cqr::ErrorDistribution::double_gamma_mixture(14.0)}) {
            auto stream = rng.split(index++);
            const cqr::Vector draws = cqr::sample(d, stream, 100000);
            std::vector<double> values(draws.data(), draws.data() + draws.size());
            const double ks =
                testutil::ks_statistic(values, [&](double t) { return cqr::cdf(d, t); });
            if (ks >= 0.01) {
                c.fail(std::string("KS distance ") + fmt(ks) + " for " +
                       cqr::kind_name(d.kind));
            }
        }
    }

    // byte-exact determinism of a seeded study
    {
        cqr::SimulationConfig config;
        cqr::Vector beta(4);
        beta << 2.0, 0.0, 1.0, 0.0;
        cqr::Matrix sigma(4, 4);
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) sigma(i, j) = std::pow(0.5, std::abs(i - j));
        }
        config.spec = cqr::LinearModelSpec::make(beta, sigma,
                                                 cqr::ErrorDistribution::normal(0.0, 1.0));
        config.n_train = 40;
        config.n_validation = 40;
        config.replications = 4;
        config.grid = cqr::QuantileGrid::equally_spaced(5);
        config.seed = 12;
        const std::string a = cqr::simulation_report_to_json(cqr::run_study(config));
        const std::string b = cqr::simulation_report_to_json(cqr::run_study(config));
        c.require(a == b, "seeded study reports are not byte-identical");
    }

    return c;
}

}  // namespace

int main() {
    int failures = 0;
    auto record = [&](int index, const std::string& name, const Criterion& c) {
        print_verdict(index, name, c);
        if (!c.ok) ++failures;
    };

    record(1, "pinned efficiency limits match closed forms", pinned_limits());

    Criterion agreement;
    Criterion bound;
    std::vector<double> deltas;
    family_sweep(agreement, bound, &deltas);
    record(2, "quadrature agrees with closed forms across parameter grids", agreement);
    record(3, "every efficiency limit exceeds the universal bound", bound);

    record(4, "grid-convergence ratios stay within 5% of one", grid_convergence());
    record(5, "tiny fits match brute-force search", brute_force_equivalence());

    std::printf("  running the benchmark studies (15 runs of 100 replications)...\n");
    std::fflush(stdout);
    record(6, "benchmark study orderings and selection", benchmark_orderings());

    record(7, "property suite", property_suite());

    if (failures == 0) {
        std::printf("all acceptance checks passed\n");
    } else {
        std::printf("%d acceptance check(s) failed\n", failures);
    }
    return failures;
}
