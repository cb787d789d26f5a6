// Acceptance suite: every release criterion with its pinned tolerance,
// one pass/fail line per criterion. Exit status is the failure count.
// Run with no arguments for the full gate or with criterion numbers.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "mbtq/error_bound.hpp"
#include "mbtq/io.hpp"
#include "mbtq/perturbation.hpp"
#include "mbtq/qve.hpp"
#include "mbtq/simulation.hpp"
#include "mbtq/solve.hpp"
#include "mbtq/tables.hpp"

using namespace mbtq;

namespace {

struct Checker {
    std::vector<std::string> failures;

    void expect(bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    }
    void within_abs(double got, double want, double tol, const std::string& what) {
        if (!(std::abs(got - want) <= tol))
            failures.push_back(what + ": got " + std::to_string(got) + ", want " +
                               std::to_string(want) + " +/- " + std::to_string(tol));
    }
    void within_rel(double got, double want, double rel, const std::string& what) {
        if (!(std::abs(got - want) <= rel * std::abs(want)))
            failures.push_back(what + ": got " + std::to_string(got) + ", want " +
                               std::to_string(want) + " within " +
                               std::to_string(100.0 * rel) + "%");
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

constexpr double kPGrid[] = {20.0, 10.0, 5.0, 2.0, 0.9};

// Reference values from the experiment tables.
constexpr double kRhoRef[] = {1.0095, 1.0084, 1.0065, 1.0028, 1.0001};
constexpr double kEllRef[] = {1.29e2, 1.64e2, 2.44e2, 7.36e2, 1.78e4};
constexpr double kGapRef[] = {0.99, 0.96, 0.85, 0.54, 3.86e-2};
constexpr double kKappaRef[] = {1.29e2, 1.59e2, 2.09e2, 3.95e2, 6.85e2};
constexpr double kXiRef[][2] = {{1.30e-6, 1.29e-7},
                                {1.59e-6, 1.59e-7},
                                {2.09e-6, 2.09e-7},
                                {3.96e-6, 3.95e-7},
                                {7.99e-6, 6.94e-7}};
constexpr double kActualRef[][2] = {{1.02e-6, 1.02e-7},
                                    {1.01e-6, 1.01e-7},
                                    {9.85e-7, 9.85e-8},
                                    {1.16e-6, 1.16e-7},
                                    {1.43e-6, 1.43e-7}};
constexpr double kTable2Ref[][2] = {{1.06e-6, 1.10e-7},
                                    {1.32e-6, 1.27e-7},
                                    {1.60e-6, 1.74e-7},
                                    {2.89e-6, 2.71e-7},
                                    {4.40e-6, 4.67e-7}};
constexpr double kT3PGrid[] = {2.0, 4.0, 6.0, 8.0, 10.0};
constexpr double kT3EllRef[] = {736.0, 289.0, 215.0, 182.0, 163.0};

Checker criterion1() {
    Checker c;
    const auto t0 = std::chrono::steady_clock::now();
    for (int k = 0; k < 50; ++k) {
        const double b = 0.5 + 0.49 * (k + 1) / 51.0;
        const double a = 1.0 - b;
        const double xstar = a / b;
        const Qve q = Qve::scalar(a, b);
        const std::string tag = "b=" + std::to_string(b);

        const SolveReport newton = newton_iteration(q, 1e-15, 200);
        c.expect(newton.converged, "newton converged, " + tag);
        c.within_abs(newton.x[0], xstar, 1e-12, "newton limit, " + tag);

        const SolveReport depth = depth_iteration(q, 1e-15, 2000000);
        c.expect(depth.converged, "depth converged, " + tag);
        c.within_abs(depth.x[0], xstar, 1e-12, "depth limit, " + tag);

        c.within_abs(spectral_radius(offspring_matrix(q)), 2.0 * b, 1e-12,
                     "rho(R), " + tag);
        c.within_abs(stability_matrix(q, Vector{xstar})(0, 0), 1.0 - 2.0 * a, 1e-14,
                     "L at the solution, " + tag);
    }
    const double dt = seconds_since(t0);
    c.expect(dt < 1.0, "runtime " + std::to_string(dt) + "s < 1s");
    return c;
}

Checker criterion2() {
    Checker c;
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < 5; ++i) {
        const Qve q = from_rates(paper_family(kPGrid[i]));
        const std::string tag = "p=" + std::to_string(kPGrid[i]);
        c.within_abs(classify(q).rho_R, kRhoRef[i], 5e-5, "rho(R), " + tag);
        const SolveReport sol = newton_iteration(q, 1e-14);
        const PerturbationInputs in =
            perturbation_inputs(q, sol.x, Matrix(q.n, q.n * q.n, 0.0));
        c.within_rel(in.ell, kEllRef[i], 0.01, "ell, " + tag);
        c.within_rel(in.gap_norm, kGapRef[i], 0.01, "d, " + tag);
        c.within_rel(condition_estimate(q, sol.x), kKappaRef[i], 0.01, "kappa~, " + tag);
    }
    // The other death scale must NOT match: the canonical choice is real.
    const double rho_milli = classify(from_rates(paper_family(20.0, DeathScale::Milli))).rho_R;
    c.expect(std::abs(rho_milli - kRhoRef[0]) > 5e-5, "milli scale is non-canonical");
    const double dt = seconds_since(t0);
    c.expect(dt < 10.0, "runtime " + std::to_string(dt) + "s < 10s");
    return c;
}

Checker criterion3() {
    Checker c;
    for (int i = 0; i < 5; ++i) {
        const Qve q = from_rates(paper_family(kPGrid[i]));
        const SolveReport sol = newton_iteration(q, 1e-14);
        const double xnorm = inf_norm(sol.x);
        const double etas[] = {1e-8, 1e-9};
        for (int e = 0; e < 2; ++e) {
            const std::string tag =
                "p=" + std::to_string(kPGrid[i]) + " eta=" + std::to_string(etas[e]);
            const PerturbationPair pert = structured_perturbation(q, etas[e]);
            const PerturbationReport rep = perturbation_report(q, sol.x, pert.dB);
            c.expect(rep.cond1_ok && rep.xi_star.has_value(), "admissible, " + tag);
            if (!rep.xi_star) continue;
            c.within_rel(*rep.xi_star / xnorm, kXiRef[i][e], 0.05,
                         "xi*/||x*|| (2 significant digits), " + tag);
            const SolveReport tilde = newton_iteration(apply_perturbation(q, pert), 1e-14);
            const double actual = inf_norm(add(tilde.x, sol.x, -1.0)) / xnorm;
            const double ref = kActualRef[i][e];
            c.expect(actual <= 1.5 * ref && actual >= ref / 1.5,
                     "measured shift within 1.5x, " + tag + ": got " + std::to_string(actual));
            c.expect(actual <= *rep.xi_star / xnorm, "bound certifies shift, " + tag);
        }
    }
    return c;
}

Checker criterion4() {
    Checker c;
    const std::uint64_t base_seed = 20260810;
    for (int i = 0; i < 5; ++i) {
        const Qve q = from_rates(paper_family(kPGrid[i]));
        const SolveReport sol = newton_iteration(q, 1e-14);
        const double xnorm = inf_norm(sol.x);
        const double etas[] = {1e-8, 1e-9};
        for (int e = 0; e < 2; ++e) {
            const std::string tag =
                "p=" + std::to_string(kPGrid[i]) + " eta=" + std::to_string(etas[e]);
            int admissible = 0, certified_held = 0, order_ok = 0;
            for (int rep_i = 0; rep_i < 100; ++rep_i) {
                const std::uint64_t seed =
                    rng::episode_seed(base_seed, static_cast<std::size_t>(10 * i + e), rep_i);
                const PerturbationPair pert = random_perturbation(q, etas[e], seed);
                const PerturbationReport rep = perturbation_report(q, sol.x, pert.dB);
                if (!rep.cond1_ok || !rep.xi_star) continue;
                ++admissible;
                const SolveReport tilde =
                    newton_iteration(apply_perturbation(q, pert), 1e-14);
                const double shift = inf_norm(add(tilde.x, sol.x, -1.0));
                if (shift <= *rep.xi_star) ++certified_held;
                const double rel = shift / xnorm;
                if (rel <= 10.0 * kTable2Ref[i][e] && rel >= kTable2Ref[i][e] / 10.0)
                    ++order_ok;
            }
            c.expect(admissible == 100, "all 100 draws admissible, " + tag);
            c.expect(certified_held == admissible,
                     "bound held in 100% of admissible draws, " + tag);
            c.expect(order_ok == admissible,
                     "measured change within 10x of the reference, " + tag);
        }
    }
    return c;
}

Checker criterion5() {
    Checker c;
    for (int i = 0; i < 5; ++i) {
        const double p = kT3PGrid[i];
        const Qve q = from_rates(paper_family(p));
        const SolveReport sol = newton_iteration(q, 1e-14);
        const std::string tag = "p=" + std::to_string(p);
        const double ell = inf_norm_inverse(stability_matrix(q, sol.x));
        c.within_rel(ell, kT3EllRef[i], 0.01, "ell at convergence, " + tag);

        for (std::size_t k = 0; k < sol.iterates.size(); ++k) {
            const Vector& xhat = sol.iterates[k];
            if (xhat == sol.x) continue;  // zero-error coincidence: ratio undefined
            const ErrorBoundReport eb = error_bound(q, xhat);
            if (!(eb.con1_ok && eb.con21_ok && eb.con22_ok) || eb.gamma > 1e-4) continue;
            const double err = inf_norm(add(xhat, sol.x, -1.0));
            const std::string itag = tag + " iterate " + std::to_string(k);
            c.expect(eb.omega_star.has_value() && err <= *eb.omega_star,
                     "certified bound holds, " + itag);
            if (eb.omega_star && err > 0.0) {
                const double ratio = *eb.omega_star / err;
                c.expect(ratio >= 1.0 && ratio <= 10.0,
                         "omega*/error in [1, 10], " + itag + ": got " + std::to_string(ratio));
            }
        }
    }
    return c;
}

Checker criterion6() {
    Checker c;
    auto check_instance = [&](const Qve& q, const std::string& tag, double sum_tol) {
        const SolveReport sol = newton_iteration(q, 1e-14);
        const RemarkDiagnostics d = remark_diagnostics(q, sol.x);
        c.within_abs(d.rho_two, 2.0, 1e-8, "rho of the combined operator, " + tag);
        if (sum_tol > 0.0)
            c.within_abs(d.rho_R + d.rho_IL, 2.0, sum_tol, "rho(R) + rho(I-L), " + tag);
        else
            c.expect(d.rho_R + d.rho_IL >= 2.0 - 1e-10,
                     "rho(R) + rho(I-L) >= 2, " + tag);
    };
    for (double p : kPGrid)
        check_instance(from_rates(paper_family(p)), "p=" + std::to_string(p), 0.0);
    check_instance(Qve::scalar(0.2, 0.8), "scalar fixture", 1e-14);
    return c;
}

Checker criterion7() {
    Checker c;
    const Qve q = from_rates(paper_family(2.0));
    const SolveReport sol = newton_iteration(q, 1e-14);
    const auto t0 = std::chrono::steady_clock::now();
    const SimulationReport rep = estimate_extinction(q, 200000, 10000, 87123049);
    const double dt = seconds_since(t0);
    for (std::size_t i = 0; i < q.n; ++i)
        c.within_abs(rep.estimates[i], sol.x[i], 0.01,
                     "estimate, phase " + std::to_string(i));
    c.expect(dt < 60.0, "runtime " + std::to_string(dt) + "s < 60s single-threaded");
    std::printf("    (monte carlo: %.1fs, censored %llu of %llu episodes)\n", dt,
                static_cast<unsigned long long>(rep.censored),
                static_cast<unsigned long long>(9 * rep.trials));
    return c;
}

Checker criterion8() {
    Checker c;
    // delta = 0 gives a zero bound.
    const Qve scalar = Qve::scalar(0.2, 0.8);
    const PerturbationInputs zero =
        perturbation_inputs(scalar, {0.25}, Matrix(1, 1, 0.0));
    c.expect(perturbation_bound(zero) == 0.0, "xi*(delta = 0) = 0, scalar");
    const Qve q5 = from_rates(paper_family(5.0));
    const SolveReport s5 = newton_iteration(q5, 1e-14);
    const PerturbationInputs zero5 =
        perturbation_inputs(q5, s5.x, Matrix(q5.n, q5.n * q5.n, 0.0));
    c.expect(perturbation_bound(zero5) == 0.0, "xi*(delta = 0) = 0, family");

    // xhat = x* gives omega* at solver-tolerance scale.
    const double tol = 1e-14;
    const ErrorBoundReport eb = error_bound(q5, s5.x);
    c.expect(eb.omega_star.has_value(), "omega* defined at the solution");
    if (eb.omega_star)
        c.expect(*eb.omega_star <= 2.0 * eb.ell_hat * tol,
                 "omega* <= 2 ell tol at the solution");

    // The critical scalar is classified Critical and the solver reports
    // the degenerate stability matrix instead of a certified solution.
    const Qve critical = Qve::scalar(0.5, 0.5);
    c.expect(classify(critical).regime == Regime::Critical, "critical classification");
    bool flagged = false;
    try {
        const SolveReport rep = newton_iteration(critical, 1e-14);
        flagged = rep.near_singular;
    } catch (const SingularMatrix&) {
        flagged = true;
    }
    c.expect(flagged, "newton flags the near-singular stability matrix");
    return c;
}

struct Criterion {
    int number;
    const char* title;
    std::function<Checker()> run;
};

const Criterion kCriteria[] = {
    {1, "scalar oracle suite", criterion1},
    {2, "death-scale resolution and table 1 statics", criterion2},
    {3, "table 1 structured-perturbation bounds", criterion3},
    {4, "table 2 stochastic bounds (100 seeds per cell)", criterion4},
    {5, "table 3 residual bound properties", criterion5},
    {6, "combined-operator spectral identity", criterion6},
    {7, "monte carlo cross-check", criterion7},
    {8, "degenerate-input suite", criterion8},
};

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));
    int failures = 0;
    for (const Criterion& crit : kCriteria) {
        if (!wanted.empty() &&
            std::find(wanted.begin(), wanted.end(), crit.number) == wanted.end())
            continue;
        Checker c;
        try {
            c = crit.run();
        } catch (const std::exception& e) {
            c.failures.push_back(std::string("exception: ") + e.what());
        }
        if (c.failures.empty()) {
            std::printf("PASS  criterion %d: %s\n", crit.number, crit.title);
        } else {
            ++failures;
            std::printf("FAIL  criterion %d: %s\n", crit.number, crit.title);
            for (const std::string& f : c.failures)
                std::printf("      %s\n", f.c_str());
        }
        std::fflush(stdout);
    }
    return failures;
}
