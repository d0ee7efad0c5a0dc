#pragma once

#include <limits>
#include <vector>

namespace decfsc {

/**
 * Dense linear program
 *
 *   maximize    c^T x
 *   subject to  A_ub x <= b_ub,  A_eq x = b_eq,  lower <= x <= upper.
 *
 * Empty `lower`/`upper` mean 0 and +inf for every variable. Infinite bounds
 * are allowed on either side.
 */
struct LpProblem {
    std::vector<double> objective;
    std::vector<std::vector<double>> inequality_lhs;
    std::vector<double> inequality_rhs;
    std::vector<std::vector<double>> equality_lhs;
    std::vector<double> equality_rhs;
    std::vector<double> lower;
    std::vector<double> upper;

    std::size_t num_variables() const { return objective.size(); }
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class LpStatus { optimal, infeasible, unbounded };

struct LpResult {
    LpStatus status = LpStatus::infeasible;
    double value = 0.0;
    std::vector<double> x;
};

/// Two-phase revised primal simplex (dense LU refactorization per pivot) with
/// Bland's anti-cycling rule.
/// Infeasibility and unboundedness are reported through `status`; malformed
/// problems (inconsistent dimensions, non-finite data) throw std::invalid_argument.
LpResult solve_lp(const LpProblem& problem);

/// Largest violation of any constraint or bound at x.
double max_violation(const LpProblem& problem, const std::vector<double>& x);

}  // namespace decfsc
