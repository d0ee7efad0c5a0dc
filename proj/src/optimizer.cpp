#include "decfsc/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace decfsc {

std::vector<double> project_simplex(std::span<const double> v) {
    std::vector<double> out(v.begin(), v.end());
    project_simplex_in_place(out);
    return out;
}

void project_simplex_in_place(std::span<double> v) {
    if (v.empty()) throw std::invalid_argument("project_simplex: empty vector");
    std::vector<double> sorted(v.begin(), v.end());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double prefix = 0.0;
    double tau = 0.0;
    for (std::size_t j = 0; j < sorted.size(); ++j) {
        prefix += sorted[j];
        const double candidate = (prefix - 1.0) / static_cast<double>(j + 1);
        if (sorted[j] - candidate > 0.0) tau = candidate;
    }
    for (double& x : v) x = std::max(x - tau, 0.0);
}

void check_config(const NlpConfig& config) {
    if (!(config.gradient_tolerance > 0.0)) throw std::invalid_argument("gradient_tolerance must be positive");
    if (config.objective_tolerance < 0.0) throw std::invalid_argument("objective_tolerance must be non-negative");
    if (!(config.initial_step > 0.0)) throw std::invalid_argument("initial_step must be positive");
    if (!(config.backtracking > 0.0 && config.backtracking < 1.0))
        throw std::invalid_argument("backtracking factor must lie in (0, 1)");
    if (!(config.armijo > 0.0 && config.armijo < 1.0)) throw std::invalid_argument("armijo constant must lie in (0, 1)");
    if (!(config.min_step > 0.0)) throw std::invalid_argument("min_step must be positive");
    if (config.restarts == 0) throw std::invalid_argument("restarts must be at least 1");
    if (config.device_size == 0) throw std::invalid_argument("device_size must be at least 1");
}

std::vector<double> SolveReport::objectives() const {
    std::vector<double> out;
    for (const auto& r : restarts) out.push_back(r.objective);
    return out;
}

namespace {

/// x + step * g projected row-wise; `trial` must have the same shape as `base`.
void projected_step(const JointPolicy& base, const PolicyGradient& g, double step, JointPolicy& trial) {
    trial = base;
    auto blocks = parameter_blocks(trial);
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        auto values = blocks[b].values;
        const auto& grad = g.blocks[b];
        for (std::size_t k = 0; k < values.size(); ++k) values[k] += step * grad[k];
        for (std::size_t r = 0; r * blocks[b].row_length < values.size(); ++r)
            project_simplex_in_place(values.subspan(r * blocks[b].row_length, blocks[b].row_length));
    }
}

/// <g, trial - base> and ||trial - base||.
std::pair<double, double> directional(const JointPolicy& base, const JointPolicy& trial, const PolicyGradient& g) {
    const auto from = parameter_blocks(base);
    const auto to = parameter_blocks(trial);
    double inner = 0.0;
    double norm2 = 0.0;
    for (std::size_t b = 0; b < from.size(); ++b) {
        for (std::size_t k = 0; k < from[b].values.size(); ++k) {
            const double d = to[b].values[k] - from[b].values[k];
            inner += g.blocks[b][k] * d;
            norm2 += d * d;
        }
    }
    return {inner, std::sqrt(norm2)};
}

}  // namespace

double projected_gradient_norm(const JointPolicy& policy, const PolicyGradient& gradient) {
    JointPolicy trial;
    projected_step(policy, gradient, 1.0, trial);
    return directional(policy, trial, gradient).second;
}

std::pair<JointPolicy, RestartStats> optimize_policy(const DecPomdp& model, JointPolicy start,
                                                     const NlpConfig& config) {
    check_config(config);
    const auto t0 = std::chrono::steady_clock::now();
    const Evaluator evaluator(model, config.evaluation);

    RestartStats stats;
    JointPolicy current = std::move(start);
    Sensitivity sens = evaluator.sensitivity(current);
    double value = sens.objective;
    stats.initial_objective = value;
    if (config.record_trace) stats.trace.push_back(value);

    JointPolicy trial;
    for (;;) {
        stats.stationarity = projected_gradient_norm(current, sens.gradient);
        if (stats.stationarity <= config.gradient_tolerance) {
            stats.converged = true;
            break;
        }
        if (stats.iterations >= config.max_iterations) break;

        double step = config.initial_step;
        bool accepted = false;
        double trial_value = value;
        while (step >= config.min_step) {
            projected_step(current, sens.gradient, step, trial);
            const double ascent = directional(current, trial, sens.gradient).first;
            trial_value = evaluator.objective(trial, evaluator.evaluate(trial));
            if (trial_value >= value + config.armijo * ascent) {
                accepted = true;
                break;
            }
            step *= config.backtracking;
        }
        if (!accepted) break;

        const double gain = trial_value - value;
        std::swap(current, trial);
        sens = evaluator.sensitivity(current);
        value = sens.objective;
        ++stats.iterations;
        if (config.record_trace) stats.trace.push_back(value);
        if (config.objective_tolerance > 0.0 && gain < config.objective_tolerance) {
            stats.stationarity = projected_gradient_norm(current, sens.gradient);
            stats.converged = stats.stationarity <= config.gradient_tolerance;
            break;
        }
    }

    stats.objective = value;
    stats.bellman_residual = evaluator.bellman_residual(current, sens.values);
    stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {std::move(current), std::move(stats)};
}

std::pair<JointPolicy, SolveReport> run_restarts(std::size_t count, std::uint64_t base_seed, std::size_t threads,
                                                 const RestartRun& run) {
    if (count == 0) throw std::invalid_argument("restarts must be at least 1");
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::pair<JointPolicy, RestartStats>> results(count);
    std::vector<std::exception_ptr> errors(count);

    auto work = [&](std::size_t k) {
        try {
            results[k] = run(base_seed + k);
            results[k].second.seed = base_seed + k;
        } catch (...) {
            errors[k] = std::current_exception();
        }
    };
    const std::size_t workers = std::clamp<std::size_t>(threads, 1, count);
    if (workers == 1) {
        for (std::size_t k = 0; k < count; ++k) work(k);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < workers; ++t)
            pool.emplace_back([&] {
                for (std::size_t k = next++; k < count; k = next++) work(k);
            });
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    SolveReport report;
    report.best_restart = 0;
    double sum = 0.0;
    double seconds = 0.0;
    report.min_objective = results[0].second.objective;
    report.max_objective = results[0].second.objective;
    for (std::size_t k = 0; k < count; ++k) {
        const double v = results[k].second.objective;
        sum += v;
        seconds += results[k].second.seconds;
        report.min_objective = std::min(report.min_objective, v);
        report.max_objective = std::max(report.max_objective, v);
        if (v > results[report.best_restart].second.objective) report.best_restart = k;
    }
    report.best_objective = results[report.best_restart].second.objective;
    report.mean_objective = sum / static_cast<double>(count);
    report.mean_seconds = seconds / static_cast<double>(count);
    report.total_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    JointPolicy best = std::move(results[report.best_restart].first);
    for (auto& r : results) report.restarts.push_back(std::move(r.second));
    return {std::move(best), std::move(report)};
}

std::pair<JointPolicy, SolveReport> solve_nlp(const DecPomdp& model, std::size_t nodes_per_agent,
                                              const NlpConfig& config) {
    check_config(config);
    if (nodes_per_agent == 0) throw std::invalid_argument("nodes_per_agent must be at least 1");
    return run_restarts(config.restarts, config.seed, config.threads, [&](std::uint64_t seed) {
        return optimize_policy(model, random_deterministic(model, nodes_per_agent, config.device_size, seed), config);
    });
}

SolveReport solve_restarts(const DecPomdp& model, std::size_t nodes_per_agent, const NlpConfig& config) {
    return solve_nlp(model, nodes_per_agent, config).second;
}

}  // namespace decfsc
