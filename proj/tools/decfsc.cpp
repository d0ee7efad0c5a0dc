// decfsc: command-line front end for the controller solvers.
//
// Exit codes: 0 success, 2 bad flags or unreadable input files, 1 solver
// failures.

#include "decfsc/decbpi.hpp"
#include "decfsc/domains.hpp"
#include "decfsc/evaluation.hpp"
#include "decfsc/io.hpp"
#include "decfsc/nlp_export.hpp"
#include "decfsc/optimizer.hpp"
#include "decfsc/simulate.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

namespace {

using namespace decfsc;
using nlohmann::json;

/// A bad flag value or input file; reported with exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

struct Source {
    std::string domain;
    std::string instance;
    std::string recursion = "next-state";

    void add(CLI::App& cmd) {
        auto* d = cmd.add_option("--domain", domain, "Built-in domain")
                      ->check(CLI::IsMember({"broadcast", "recycling", "tiger"}));
        auto* i = cmd.add_option("--instance", instance, "Instance file")->check(CLI::ExistingFile);
        d->excludes(i);
        cmd.add_option("--recursion", recursion, "Device index of the continuation value")
            ->check(CLI::IsMember({"next-state", "printed"}))
            ->capture_default_str();
    }

    DecPomdp load() const {
        if (!domain.empty()) return domains::by_name(domain);
        if (instance.empty()) throw UsageError("one of --domain or --instance is required");
        try {
            return parse_instance(read_file(instance));
        } catch (const std::exception& e) {
            throw UsageError("--instance " + instance + ": " + e.what());
        }
    }

    EvaluationOptions options() const {
        EvaluationOptions opts;
        opts.recursion = recursion == "printed" ? DeviceRecursion::printed : DeviceRecursion::next_state;
        return opts;
    }
};

JointPolicy load_policy(const std::string& path, const DecPomdp& model) {
    try {
        JointPolicy policy = parse_policy(read_file(path));
        check_dimensions(model, policy);
        return policy;
    } catch (const std::exception& e) {
        throw UsageError("--policy " + path + ": " + e.what());
    }
}

struct SolveFlags {
    Source source;
    std::string method = "nlp";
    std::size_t device = 1;
    std::size_t restarts = 10;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    std::optional<std::size_t> max_iterations;
    std::string report = "text";

    void add(CLI::App& cmd) {
        source.add(cmd);
        cmd.add_option("--method", method, "Solver")->check(CLI::IsMember({"nlp", "bpi"}))->capture_default_str();
        cmd.add_option("--device", device, "Correlation device size")->check(CLI::PositiveNumber)->capture_default_str();
        cmd.add_option("--restarts", restarts, "Random starts")->check(CLI::PositiveNumber)->capture_default_str();
        cmd.add_option("--seed", seed, "Seed of the first restart")->capture_default_str();
        cmd.add_option("--threads", threads, "Restart workers")->check(CLI::PositiveNumber)->capture_default_str();
        cmd.add_option("--max-iterations", max_iterations, "NLP iterations or BPI sweeps per restart")
            ->check(CLI::PositiveNumber);
        cmd.add_option("--report", report, "Report format")
            ->check(CLI::IsMember({"text", "csv", "json"}))
            ->capture_default_str();
    }
};

struct Run {
    std::size_t size = 0;
    JointPolicy policy;
    SolveReport report;
};

Run solve_once(const DecPomdp& model, const SolveFlags& f, std::size_t nodes) {
    Run run;
    run.size = nodes;
    if (f.method == "nlp") {
        NlpConfig cfg;
        cfg.restarts = f.restarts;
        cfg.seed = f.seed;
        cfg.device_size = f.device;
        cfg.threads = f.threads;
        cfg.evaluation = f.source.options();
        if (f.max_iterations) cfg.max_iterations = *f.max_iterations;
        std::tie(run.policy, run.report) = solve_nlp(model, nodes, cfg);
    } else {
        BpiConfig cfg;
        cfg.restarts = f.restarts;
        cfg.seed = f.seed;
        cfg.threads = f.threads;
        cfg.evaluation = f.source.options();
        if (f.max_iterations) cfg.max_sweeps = *f.max_iterations;
        std::tie(run.policy, run.report) = solve_bpi(model, nodes, f.device, cfg);
    }
    return run;
}

const char* kCsvHeader = "size,method,device,mean,best,mean_time_s";

std::string csv_row(const Run& r, const SolveFlags& f) {
    return std::to_string(r.size) + "," + f.method + "," + std::to_string(f.device) + "," +
           num(r.report.mean_objective) + "," + num(r.report.best_objective) + "," + num(r.report.mean_seconds);
}

json json_run(const Run& r, const SolveFlags& f) {
    json j{{"size", r.size},
           {"method", f.method},
           {"device", f.device},
           {"mean", r.report.mean_objective},
           {"best", r.report.best_objective},
           {"min", r.report.min_objective},
           {"max", r.report.max_objective},
           {"mean_time_s", r.report.mean_seconds},
           {"best_restart", r.report.best_restart}};
    j["restarts"] = json::array();
    for (const RestartStats& s : r.report.restarts)
        j["restarts"].push_back({{"seed", s.seed},
                                 {"initial_objective", s.initial_objective},
                                 {"objective", s.objective},
                                 {"iterations", s.iterations},
                                 {"stationarity", s.stationarity},
                                 {"bellman_residual", s.bellman_residual},
                                 {"converged", s.converged},
                                 {"time_s", s.seconds}});
    return j;
}

void print_text(std::ostream& out, const std::vector<Run>& runs, const SolveFlags& f) {
    char line[160];
    std::snprintf(line, sizeof line, "%-6s %-6s %-6s %14s %14s %12s\n", "size", "method", "device", "mean", "best",
                  "mean_time_s");
    out << line;
    for (const Run& r : runs) {
        std::snprintf(line, sizeof line, "%-6zu %-6s %-6zu %14.6f %14.6f %12.4f\n", r.size, f.method.c_str(),
                      f.device, r.report.mean_objective, r.report.best_objective, r.report.mean_seconds);
        out << line;
    }
}

void print_runs(std::ostream& out, const std::vector<Run>& runs, const SolveFlags& f) {
    if (f.report == "csv") {
        out << kCsvHeader << "\n";
        for (const Run& r : runs) out << csv_row(r, f) << "\n";
    } else if (f.report == "json") {
        if (runs.size() == 1) {
            out << json_run(runs[0], f).dump(2) << "\n";
        } else {
            json arr = json::array();
            for (const Run& r : runs) arr.push_back(json_run(r, f));
            out << arr.dump(2) << "\n";
        }
    } else {
        print_text(out, runs, f);
    }
}

int run_cli(int argc, char** argv) {
    CLI::App app{"Finite-state controller solvers for decentralized POMDPs", "decfsc"};
    app.require_subcommand(1);

    // solve
    SolveFlags solve_flags;
    std::size_t solve_nodes = 1;
    std::string solve_out;
    auto* solve = app.add_subcommand("solve", "Optimize fixed-size controllers and report mean/best values");
    solve_flags.add(*solve);
    solve->add_option("--nodes", solve_nodes, "Nodes per agent")->check(CLI::PositiveNumber)->capture_default_str();
    solve->add_option("--out", solve_out, "Write the best policy here");

    // sweep
    SolveFlags sweep_flags;
    sweep_flags.report = "csv";
    std::size_t nodes_min = 1, nodes_max = 4;
    auto* sweep = app.add_subcommand("sweep", "Solve a range of controller sizes; one row per size");
    sweep_flags.add(*sweep);
    sweep->add_option("--nodes-min", nodes_min, "Smallest size")->check(CLI::PositiveNumber)->capture_default_str();
    sweep->add_option("--nodes-max", nodes_max, "Largest size")->check(CLI::PositiveNumber)->capture_default_str();

    // evaluate
    Source eval_source;
    std::string eval_policy, eval_report = "text";
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Exact value of a policy");
    eval_source.add(*evaluate_cmd);
    evaluate_cmd->add_option("--policy", eval_policy, "Policy file")->required()->check(CLI::ExistingFile);
    evaluate_cmd->add_option("--report", eval_report, "Report format")
        ->check(CLI::IsMember({"text", "json"}))
        ->capture_default_str();

    // simulate
    Source sim_source;
    std::string sim_policy, sim_report = "text";
    RolloutConfig rollout;
    auto* simulate_cmd = app.add_subcommand("simulate", "Monte Carlo estimate of a policy's value");
    sim_source.add(*simulate_cmd);
    simulate_cmd->add_option("--policy", sim_policy, "Policy file")->required()->check(CLI::ExistingFile);
    simulate_cmd->add_option("--episodes", rollout.episodes, "Episodes")->check(CLI::PositiveNumber)->capture_default_str();
    simulate_cmd->add_option("--tol", rollout.truncation_tolerance, "Truncation tolerance")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    simulate_cmd->add_option("--horizon", rollout.horizon, "Fixed horizon (0 derives it from --tol)")
        ->capture_default_str();
    simulate_cmd->add_option("--seed", rollout.seed, "Seed")->capture_default_str();
    simulate_cmd->add_option("--confidence", rollout.confidence, "Interval confidence")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    simulate_cmd->add_option("--threads", rollout.threads, "Episode workers")->check(CLI::PositiveNumber)->capture_default_str();
    simulate_cmd->add_option("--report", sim_report, "Report format")
        ->check(CLI::IsMember({"text", "json"}))
        ->capture_default_str();

    // export-nlp
    Source export_source;
    std::size_t export_nodes = 1, export_device = 1;
    std::string export_out;
    auto* export_cmd = app.add_subcommand("export-nlp", "Write the full-variable program as an AMPL model");
    export_source.add(*export_cmd);
    export_cmd->add_option("--nodes", export_nodes, "Nodes per agent")->check(CLI::PositiveNumber)->capture_default_str();
    export_cmd->add_option("--device", export_device, "Device size")->check(CLI::PositiveNumber)->capture_default_str();
    export_cmd->add_option("--out", export_out, "Output file (default stdout)");

    // write-instance
    Source dump_source;
    std::string dump_out;
    auto* dump_cmd = app.add_subcommand("write-instance", "Write a domain in the instance format");
    dump_source.add(*dump_cmd);
    dump_cmd->add_option("--out", dump_out, "Output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (*solve) {
            const DecPomdp model = solve_flags.source.load();
            Run run;
            try {
                run = solve_once(model, solve_flags, solve_nodes);
            } catch (const std::exception& e) {
                std::cerr << "solver error: " << e.what() << "\n";
                return 1;
            }
            print_runs(std::cout, {run}, solve_flags);
            if (!solve_out.empty()) write_file(solve_out, write_policy(run.policy));
        } else if (*sweep) {
            if (nodes_min > nodes_max) throw UsageError("--nodes-min must not exceed --nodes-max");
            const DecPomdp model = sweep_flags.source.load();
            std::vector<Run> runs;
            try {
                for (std::size_t k = nodes_min; k <= nodes_max; ++k) runs.push_back(solve_once(model, sweep_flags, k));
            } catch (const std::exception& e) {
                std::cerr << "solver error: " << e.what() << "\n";
                return 1;
            }
            print_runs(std::cout, runs, sweep_flags);
        } else if (*evaluate_cmd) {
            const DecPomdp model = eval_source.load();
            const JointPolicy policy = load_policy(eval_policy, model);
            const Evaluator ev(model, eval_source.options());
            const ValueTable values = ev.evaluate(policy);
            const double obj = ev.objective(policy, values);
            const double res = ev.bellman_residual(policy, values);
            if (eval_report == "json") {
                std::cout << json{{"objective", obj}, {"bellman_residual", res}}.dump(2) << "\n";
            } else {
                std::cout << "objective " << num(obj) << "\n"
                          << "bellman_residual " << num(res) << "\n";
            }
        } else if (*simulate_cmd) {
            const DecPomdp model = sim_source.load();
            const JointPolicy policy = load_policy(sim_policy, model);
            if (rollout.confidence <= 0.0 || rollout.confidence >= 1.0)
                throw UsageError("--confidence must lie strictly between 0 and 1");
            const double analytic = policy_value(model, policy, sim_source.options());
            ValueEstimate est;
            try {
                est = estimate_value(model, policy, rollout);
            } catch (const std::exception& e) {
                std::cerr << "simulation error: " << e.what() << "\n";
                return 1;
            }
            const double band = 3.0 * est.standard_error + est.truncation_bound;
            const bool inside = std::abs(est.mean - analytic) <= band;
            if (sim_report == "json") {
                std::cout << json{{"estimate", est.mean},
                                  {"standard_error", est.standard_error},
                                  {"half_width", est.half_width},
                                  {"confidence", rollout.confidence},
                                  {"truncation_bound", est.truncation_bound},
                                  {"horizon", est.horizon},
                                  {"episodes", est.episodes},
                                  {"analytic", analytic},
                                  {"within_band", inside}}
                                 .dump(2)
                          << "\n";
            } else {
                std::cout << "estimate " << num(est.mean) << " +/- " << num(est.half_width) << " ("
                          << num(100.0 * rollout.confidence) << "% CI)\n"
                          << "standard_error " << num(est.standard_error) << "\n"
                          << "truncation_bound " << num(est.truncation_bound) << " (horizon " << est.horizon
                          << ")\n"
                          << "analytic " << num(analytic) << "\n"
                          << "within_3se_band " << (inside ? "yes" : "no") << "\n";
            }
        } else if (*export_cmd) {
            const DecPomdp model = export_source.load();
            NlpExport ex;
            try {
                ex = export_nlp(model, export_nodes, export_device, export_source.options().recursion);
            } catch (const std::exception& e) {
                std::cerr << "export error: " << e.what() << "\n";
                return 1;
            }
            if (export_out.empty()) {
                std::cout << ex.text;
            } else {
                write_file(export_out, ex.text);
                const NlpSummary& s = ex.summary;
                std::cout << "x " << s.x_variables << "\ny " << s.y_variables << "\nz " << s.z_variables << "\nw "
                          << s.w_variables << "\nbellman " << s.bellman_constraints << "\nindependence "
                          << s.independence_constraints << "\nprobability " << s.probability_constraints << "\n";
            }
        } else if (*dump_cmd) {
            const DecPomdp model = dump_source.load();
            const std::string text = write_instance(model);
            if (dump_out.empty()) std::cout << text;
            else write_file(dump_out, text);
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) { return run_cli(argc, argv); }
