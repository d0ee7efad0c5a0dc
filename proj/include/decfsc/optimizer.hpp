#pragma once

#include "decfsc/controller.hpp"
#include "decfsc/evaluation.hpp"
#include "decfsc/model.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace decfsc {

/// Euclidean projection onto the probability simplex (sort-based; ties keep
/// the largest entries). Throws std::invalid_argument on an empty vector.
std::vector<double> project_simplex(std::span<const double> v);
void project_simplex_in_place(std::span<double> v);

struct NlpConfig {
    std::size_t max_iterations = 2000;
    /// Stop when the projected-gradient norm falls below this.
    double gradient_tolerance = 1e-6;
    /// Optional stall threshold on the per-iteration objective gain; 0 disables it.
    double objective_tolerance = 0.0;
    double initial_step = 1.0;
    double backtracking = 0.5;
    double armijo = 1e-4;
    /// Line search gives up below this step; the restart then ends unconverged.
    double min_step = 1e-14;
    std::size_t restarts = 10;
    std::uint64_t seed = 0;
    std::size_t device_size = 1;
    /// Worker threads for restarts; results do not depend on it.
    std::size_t threads = 1;
    bool record_trace = false;
    EvaluationOptions evaluation{};
};

/// Throws std::invalid_argument when a field is out of range.
void check_config(const NlpConfig& config);

struct RestartStats {
    std::uint64_t seed = 0;
    double initial_objective = 0.0;
    double objective = 0.0;
    std::size_t iterations = 0;
    double stationarity = 0.0;
    double bellman_residual = 0.0;
    bool converged = false;
    double seconds = 0.0;
    /// Objective after every accepted iterate (when recording); for DEC-BPI,
    /// after every sweep.
    std::vector<double> trace;
};

struct SolveReport {
    std::size_t best_restart = 0;
    double best_objective = 0.0;
    double mean_objective = 0.0;
    double min_objective = 0.0;
    double max_objective = 0.0;
    double mean_seconds = 0.0;
    double total_seconds = 0.0;
    std::vector<RestartStats> restarts;

    std::vector<double> objectives() const;
    const RestartStats& best() const { return restarts.at(best_restart); }
};

/// Norm of P(x + g) - x over every simplex row; zero exactly at KKT points.
double projected_gradient_norm(const JointPolicy& policy, const PolicyGradient& gradient);

/**
 * Local ascent from a given start: exact gradient, projection-arc Armijo
 * backtracking, row-wise simplex projection. The objective sequence is
 * non-decreasing.
 */
std::pair<JointPolicy, RestartStats> optimize_policy(const DecPomdp& model, JointPolicy start,
                                                     const NlpConfig& config);

/// Best of config.restarts local ascents from random deterministic starts;
/// restart k is seeded with config.seed + k.
std::pair<JointPolicy, SolveReport> solve_nlp(const DecPomdp& model, std::size_t nodes_per_agent,
                                              const NlpConfig& config);

/// Same runs as solve_nlp, returning only the per-seed breakdown.
SolveReport solve_restarts(const DecPomdp& model, std::size_t nodes_per_agent, const NlpConfig& config);

/// Shared restart driver: runs `run(seed)` for seeds base..base+count-1 on
/// `threads` workers and merges into a report.
using RestartRun = std::function<std::pair<JointPolicy, RestartStats>(std::uint64_t seed)>;
std::pair<JointPolicy, SolveReport> run_restarts(std::size_t count, std::uint64_t base_seed, std::size_t threads,
                                                 const RestartRun& run);

}  // namespace decfsc
