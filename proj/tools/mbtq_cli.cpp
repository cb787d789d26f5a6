// mbtq -- extinction probabilities of Markovian binary trees and the
// certified perturbation/error bounds around them.
//
// Exit codes: 0 success, 1 a certificate or convergence check failed
// (results were still produced), 2 malformed input.

#include <cmath>
#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mbtq/error_bound.hpp"
#include "mbtq/io.hpp"
#include "mbtq/perturbation.hpp"
#include "mbtq/qve.hpp"
#include "mbtq/simulation.hpp"
#include "mbtq/solve.hpp"
#include "mbtq/tables.hpp"

namespace {

int g_digits = 0;  // 0 = full double precision

double round_sig(double v, int digits) {
    if (v == 0.0 || !std::isfinite(v)) return v;
    const double mag = std::pow(10.0, digits - 1 - std::floor(std::log10(std::abs(v))));
    return std::round(v * mag) / mag;
}

void round_numbers(mbtq::json& j) {
    if (j.is_number_float())
        j = round_sig(j.get<double>(), g_digits);
    else if (j.is_object() || j.is_array())
        for (auto& el : j) round_numbers(el);
}

void emit(mbtq::json j) {
    if (g_digits > 0) round_numbers(j);
    std::cout << j.dump(2) << '\n';
}

constexpr double kSolveTol = 1e-14;

}  // namespace

int main(int argc, char** argv) {
    using namespace mbtq;

    CLI::App app{"extinction probabilities of Markovian binary trees"};
    app.require_subcommand(1);
    app.add_option("--digits", g_digits, "round printed numbers to this many significant digits");

    // classify
    auto* classify_cmd = app.add_subcommand("classify", "criticality and regularity of an instance");
    std::string classify_path;
    classify_cmd->add_option("instance", classify_path, "instance or rates JSON file")->required();

    // solve
    auto* solve_cmd = app.add_subcommand("solve", "compute the minimal nonnegative solution");
    std::string solve_path, solve_method = "newton", trace_path;
    double solve_tol = kSolveTol;
    std::size_t solve_maxit = 0;
    solve_cmd->add_option("instance", solve_path)->required();
    solve_cmd->add_option("--method", solve_method, "newton or depth")
        ->check(CLI::IsMember({"newton", "depth"}));
    solve_cmd->add_option("--tol", solve_tol, "residual tolerance");
    solve_cmd->add_option("--max-it", solve_maxit, "iteration budget");
    solve_cmd->add_option("--trace", trace_path, "write the full iterate trace to this file");

    // bounds perturb / bounds error
    auto* bounds_cmd = app.add_subcommand("bounds", "certified perturbation and error bounds");
    bounds_cmd->require_subcommand(1);
    auto* perturb_cmd = bounds_cmd->add_subcommand("perturb", "perturbation bound xi*");
    std::string perturb_path, delta_b_path;
    double structured_eta = -1.0, random_eta = -1.0;
    std::uint64_t perturb_seed = 1;
    perturb_cmd->add_option("instance", perturb_path)->required();
    auto* opt_structured =
        perturb_cmd->add_option("--structured", structured_eta, "structured perturbation dB = eta B");
    auto* opt_random =
        perturb_cmd->add_option("--random", random_eta, "random perturbation with ||dB|| = eta ||B||");
    perturb_cmd->add_option("--seed", perturb_seed, "generator seed")->envname("MBT_QVE_SEED");
    auto* opt_file = perturb_cmd->add_option("--delta-b", delta_b_path, "explicit dB from a JSON file");
    opt_structured->excludes(opt_random)->excludes(opt_file);
    opt_random->excludes(opt_file);

    auto* error_cmd = bounds_cmd->add_subcommand("error", "residual error bound omega*");
    std::string error_path, xhat_path;
    error_cmd->add_option("instance", error_path)->required();
    error_cmd->add_option("--xhat", xhat_path, "approximate solution JSON file")->required();

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo extinction estimate");
    std::string sim_path;
    std::uint64_t sim_trials = 10000, sim_max_pop = 10000, sim_seed = 1;
    sim_cmd->add_option("instance", sim_path)->required();
    sim_cmd->add_option("--trials", sim_trials, "episodes per starting phase");
    sim_cmd->add_option("--max-pop", sim_max_pop, "live-population censoring cap");
    sim_cmd->add_option("--seed", sim_seed, "simulation seed")->envname("MBT_QVE_SEED");

    // family
    auto* family_cmd = app.add_subcommand("family", "emit a member of the nine-phase test family");
    double family_p = 0.0;
    std::string death_scale = "unit", emit_path, emit_rates_path;
    family_cmd->add_option("--p", family_p, "family parameter")->required();
    family_cmd->add_option("--death-scale", death_scale)->check(CLI::IsMember({"unit", "milli"}));
    family_cmd->add_option("--emit", emit_path, "write the instance JSON here");
    family_cmd->add_option("--emit-rates", emit_rates_path, "write the raw rates JSON here");

    // reproduce
    auto* repro_cmd = app.add_subcommand("reproduce", "reproduce an experiment table as CSV");
    int repro_table = 0;
    std::uint64_t repro_seed = 1;
    std::string repro_out;
    repro_cmd->add_option("--table", repro_table, "1, 2, or 3")
        ->required()
        ->check(CLI::Range(1, 3));
    repro_cmd->add_option("--seed", repro_seed, "seed for table 2")->envname("MBT_QVE_SEED");
    repro_cmd->add_option("--out", repro_out, "CSV output file (stdout when omitted)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (classify_cmd->parsed()) {
            emit(to_json(classify(load_model(classify_path))));
            return 0;
        }

        if (solve_cmd->parsed()) {
            const Qve q = load_model(solve_path);
            SolveReport rep;
            if (solve_method == "newton")
                rep = newton_iteration(q, solve_tol, solve_maxit ? solve_maxit : 200);
            else
                rep = depth_iteration(q, solve_tol, solve_maxit ? solve_maxit : 2000000);
            if (!trace_path.empty()) write_file(trace_path, to_json(rep, true).dump(2));
            emit(to_json(rep));
            return rep.converged ? 0 : 1;
        }

        if (perturb_cmd->parsed()) {
            const Qve q = load_model(perturb_path);
            const SolveReport sol = newton_iteration(q, kSolveTol);
            if (!sol.converged) {
                std::cerr << "solver did not converge on the base instance\n";
                return 1;
            }
            PerturbationReport rep;
            if (*opt_structured) {
                const PerturbationPair pert = structured_perturbation(q, structured_eta);
                rep = perturbation_report(q, sol.x, pert.dB);
            } else if (*opt_random) {
                const PerturbationPair pert = random_perturbation(q, random_eta, perturb_seed);
                rep = perturbation_report(q, sol.x, pert.dB);
                rep.seed = perturb_seed;
                rep.generator = "mt19937_64";
            } else if (*opt_file) {
                const Matrix dB = load_matrix(delta_b_path, "dB", q.n, q.n * q.n);
                rep = perturbation_report(q, sol.x, dB);
            } else {
                std::cerr << "one of --structured, --random, --delta-b is required\n";
                return 2;
            }
            emit(to_json(rep));
            return rep.cond1_ok && rep.cond2_ok ? 0 : 1;
        }

        if (error_cmd->parsed()) {
            const Qve q = load_model(error_path);
            const Vector xhat = load_vector(xhat_path, "xhat", q.n);
            const ErrorBoundReport rep = error_bound(q, xhat);
            emit(to_json(rep));
            return rep.con1_ok && rep.con21_ok && rep.con22_ok ? 0 : 1;
        }

        if (sim_cmd->parsed()) {
            const Qve q = load_model(sim_path);
            emit(to_json(estimate_extinction(q, sim_trials, sim_max_pop, sim_seed)));
            return 0;
        }

        if (family_cmd->parsed()) {
            const MbtRates rates =
                paper_family(family_p, death_scale == "milli" ? DeathScale::Milli : DeathScale::Unit);
            if (!emit_rates_path.empty()) write_file(emit_rates_path, to_json(rates).dump(2));
            const Qve q = from_rates(rates);
            if (!emit_path.empty())
                write_file(emit_path, to_json(q).dump(2));
            else if (emit_rates_path.empty())
                emit(to_json(q));
            return 0;
        }

        if (repro_cmd->parsed()) {
            const std::vector<TableRow> rows = reproduce_table(repro_table, repro_seed);
            const std::string csv = to_csv(rows, repro_table);
            if (!repro_out.empty())
                write_file(repro_out, csv);
            else
                std::cout << csv;
            for (const TableRow& r : rows)
                if (!r.certified) return 1;
            return 0;
        }
    } catch (const mbtq::InvalidDimension& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return 2;
    } catch (const mbtq::InvalidRates& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "run failed: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
