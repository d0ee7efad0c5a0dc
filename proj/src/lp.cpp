#include "decfsc/lp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace decfsc {

namespace {

constexpr double kPivotTolerance = 1e-9;
constexpr double kOptimalityTolerance = 1e-9;
constexpr std::size_t kMaxPivots = 100000;

/// x_j = offset + sign * y[first] (- y[first + 1] when free).
struct VariableMap {
    double offset = 0.0;
    double sign = 1.0;
    std::size_t first = 0;
    bool split = false;
};

/// Standard form  A y = b, y >= 0, b >= 0, with a starting basis made of
/// slacks and artificials. Columns >= num_structural are artificial.
struct StandardForm {
    Eigen::MatrixXd a;
    Eigen::VectorXd b;
    std::vector<std::size_t> basis;
    std::size_t num_structural = 0;
};

enum class Outcome { optimal, unbounded };

/**
 * Revised primal simplex with Bland's rule. The basis is refactorized from
 * the original columns at every pivot, so round-off does not accumulate.
 * Only columns below `allowed` may enter; basic artificials are held at 0.
 */
Outcome run_simplex(const StandardForm& form, const Eigen::VectorXd& cost, std::size_t allowed,
                    std::vector<std::size_t>& basis) {
    const Eigen::Index m = form.a.rows();
    std::vector<char> is_basic(static_cast<std::size_t>(form.a.cols()), 0);
    Eigen::MatrixXd b_mat(m, m);
    Eigen::VectorXd cb(m);
    for (std::size_t pivots = 0; pivots < kMaxPivots; ++pivots) {
        std::fill(is_basic.begin(), is_basic.end(), 0);
        for (Eigen::Index i = 0; i < m; ++i) {
            const auto col = basis[static_cast<std::size_t>(i)];
            b_mat.col(i) = form.a.col(static_cast<Eigen::Index>(col));
            cb(i) = cost(static_cast<Eigen::Index>(col));
            is_basic[col] = 1;
        }
        const Eigen::PartialPivLU<Eigen::MatrixXd> lu(b_mat);
        const Eigen::VectorXd xb = lu.solve(form.b);
        const Eigen::VectorXd y = lu.transpose().solve(cb);

        // Reduced costs carry round-off proportional to |y| |A_j|; an
        // absolute threshold alone lets near-parallel columns swap forever.
        const double dual_scale = 1e-3 * y.cwiseAbs().maxCoeff();
        std::size_t entering = allowed;
        for (std::size_t j = 0; j < allowed; ++j) {
            if (is_basic[j]) continue;
            const auto jj = static_cast<Eigen::Index>(j);
            const double tol =
                kOptimalityTolerance * std::max(1.0, dual_scale * form.a.col(jj).cwiseAbs().maxCoeff());
            if (cost(jj) - y.dot(form.a.col(jj)) > tol) {
                entering = j;
                break;
            }
        }
        if (entering == allowed) return Outcome::optimal;

        const Eigen::VectorXd dir = lu.solve(form.a.col(static_cast<Eigen::Index>(entering)));
        const double pivot_tol = kPivotTolerance * std::max(1.0, dir.cwiseAbs().maxCoeff());
        Eigen::Index leaving = -1;
        double best = 0.0;
        for (Eigen::Index i = 0; i < m; ++i) {
            const auto col = basis[static_cast<std::size_t>(i)];
            double ratio;
            if (col >= allowed && std::abs(dir(i)) > pivot_tol) ratio = 0.0;
            else if (dir(i) > pivot_tol) ratio = (xb(i) > kPivotTolerance ? xb(i) : 0.0) / dir(i);
            else continue;
            const double tie = 1e-12 * std::max(1.0, best);
            if (leaving < 0 || ratio < best - tie ||
                (ratio <= best + tie && col < basis[static_cast<std::size_t>(leaving)])) {
                leaving = i;
                best = ratio;
            }
        }
        if (leaving < 0) return Outcome::unbounded;
        basis[static_cast<std::size_t>(leaving)] = entering;
    }
    throw std::runtime_error("solve_lp: pivot limit exceeded");
}

Eigen::VectorXd basic_solution(const StandardForm& form, const std::vector<std::size_t>& basis) {
    const Eigen::Index m = form.a.rows();
    Eigen::MatrixXd b_mat(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        b_mat.col(i) = form.a.col(static_cast<Eigen::Index>(basis[static_cast<std::size_t>(i)]));
    const Eigen::VectorXd xb = Eigen::PartialPivLU<Eigen::MatrixXd>(b_mat).solve(form.b);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(form.a.cols());
    for (Eigen::Index i = 0; i < m; ++i)
        y(static_cast<Eigen::Index>(basis[static_cast<std::size_t>(i)])) = std::max(xb(i), 0.0);
    return y;
}

void check_problem(const LpProblem& p) {
    const std::size_t n = p.num_variables();
    auto finite = [](double v) { return std::isfinite(v); };
    if (p.inequality_lhs.size() != p.inequality_rhs.size() || p.equality_lhs.size() != p.equality_rhs.size())
        throw std::invalid_argument("solve_lp: constraint rows and right-hand sides disagree");
    for (const auto* rows : {&p.inequality_lhs, &p.equality_lhs})
        for (const auto& row : *rows) {
            if (row.size() != n) throw std::invalid_argument("solve_lp: constraint row has wrong length");
            if (!std::all_of(row.begin(), row.end(), finite))
                throw std::invalid_argument("solve_lp: non-finite coefficient");
        }
    if (!std::all_of(p.objective.begin(), p.objective.end(), finite) ||
        !std::all_of(p.inequality_rhs.begin(), p.inequality_rhs.end(), finite) ||
        !std::all_of(p.equality_rhs.begin(), p.equality_rhs.end(), finite))
        throw std::invalid_argument("solve_lp: non-finite objective or right-hand side");
    if ((!p.lower.empty() && p.lower.size() != n) || (!p.upper.empty() && p.upper.size() != n))
        throw std::invalid_argument("solve_lp: bound vectors have wrong length");
    for (const auto* bounds : {&p.lower, &p.upper})
        if (std::any_of(bounds->begin(), bounds->end(), [](double v) { return std::isnan(v); }))
            throw std::invalid_argument("solve_lp: NaN bound");
}

}  // namespace

LpResult solve_lp(const LpProblem& problem) {
    check_problem(problem);
    const std::size_t n = problem.num_variables();
    auto lower = [&](std::size_t j) { return problem.lower.empty() ? 0.0 : problem.lower[j]; };
    auto upper = [&](std::size_t j) { return problem.upper.empty() ? kInfinity : problem.upper[j]; };

    std::vector<VariableMap> maps(n);
    std::size_t ny = 0;
    std::vector<std::pair<std::size_t, double>> bound_rows;  // y[col] <= value
    for (std::size_t j = 0; j < n; ++j) {
        const double lo = lower(j);
        const double hi = upper(j);
        if (lo > hi || lo == kInfinity || hi == -kInfinity) return {LpStatus::infeasible, 0.0, {}};
        auto& m = maps[j];
        m.first = ny;
        if (std::isfinite(lo)) {
            m.offset = lo;
            ++ny;
            if (std::isfinite(hi)) bound_rows.emplace_back(m.first, hi - lo);
        } else if (std::isfinite(hi)) {
            m.offset = hi;
            m.sign = -1.0;
            ++ny;
        } else {
            m.split = true;
            ny += 2;
        }
    }

    struct Row {
        std::vector<double> coef;
        double rhs;
        bool has_slack;
    };
    std::vector<Row> rows;
    auto substitute = [&](const std::vector<double>& a, double b, bool slack) {
        Row row{std::vector<double>(ny, 0.0), b, slack};
        for (std::size_t j = 0; j < n; ++j) {
            if (a[j] == 0.0) continue;
            const auto& m = maps[j];
            row.rhs -= a[j] * m.offset;
            row.coef[m.first] += a[j] * m.sign;
            if (m.split) row.coef[m.first + 1] -= a[j];
        }
        rows.push_back(std::move(row));
    };
    for (std::size_t i = 0; i < problem.inequality_lhs.size(); ++i)
        substitute(problem.inequality_lhs[i], problem.inequality_rhs[i], true);
    for (const auto& [col, value] : bound_rows) {
        Row row{std::vector<double>(ny, 0.0), value, true};
        row.coef[col] = 1.0;
        rows.push_back(std::move(row));
    }
    for (std::size_t i = 0; i < problem.equality_lhs.size(); ++i)
        substitute(problem.equality_lhs[i], problem.equality_rhs[i], false);

    const std::size_t m = rows.size();
    std::size_t n_slack = 0;
    std::size_t n_art = 0;
    for (const auto& r : rows) {
        n_slack += r.has_slack ? 1 : 0;
        n_art += (r.has_slack && r.rhs >= 0.0) ? 0 : 1;
    }

    StandardForm form;
    form.num_structural = ny + n_slack;
    const std::size_t n_total = form.num_structural + n_art;
    form.a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n_total));
    form.b.resize(static_cast<Eigen::Index>(m));
    form.basis.resize(m);
    std::size_t slack_col = ny;
    std::size_t art_col = form.num_structural;
    for (std::size_t i = 0; i < m; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        const double sign = rows[i].rhs < 0.0 ? -1.0 : 1.0;
        for (std::size_t j = 0; j < ny; ++j) form.a(ii, static_cast<Eigen::Index>(j)) = sign * rows[i].coef[j];
        form.b(ii) = sign * rows[i].rhs;
        if (rows[i].has_slack) {
            form.a(ii, static_cast<Eigen::Index>(slack_col)) = sign;
            if (sign > 0.0) form.basis[i] = slack_col;
            ++slack_col;
        }
        if (!(rows[i].has_slack && sign > 0.0)) {
            form.a(ii, static_cast<Eigen::Index>(art_col)) = 1.0;
            form.basis[i] = art_col;
            ++art_col;
        }
    }

    std::vector<std::size_t> basis = form.basis;
    if (n_art > 0) {
        Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_total));
        for (std::size_t j = form.num_structural; j < n_total; ++j) phase1(static_cast<Eigen::Index>(j)) = -1.0;
        run_simplex(form, phase1, n_total, basis);
        const Eigen::VectorXd y = basic_solution(form, basis);
        const double residual = y.tail(static_cast<Eigen::Index>(n_art)).sum();
        const double scale = std::max(1.0, form.b.cwiseAbs().maxCoeff());
        if (residual > 1e-9 * scale) return {LpStatus::infeasible, 0.0, {}};
    }

    Eigen::VectorXd phase2 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_total));
    for (std::size_t j = 0; j < n; ++j) {
        const auto& mp = maps[j];
        phase2(static_cast<Eigen::Index>(mp.first)) += problem.objective[j] * mp.sign;
        if (mp.split) phase2(static_cast<Eigen::Index>(mp.first + 1)) -= problem.objective[j];
    }
    if (run_simplex(form, phase2, form.num_structural, basis) == Outcome::unbounded)
        return {LpStatus::unbounded, 0.0, {}};

    const Eigen::VectorXd y = basic_solution(form, basis);
    LpResult result;
    result.status = LpStatus::optimal;
    result.x.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        const auto& mp = maps[j];
        double v = mp.offset + mp.sign * y(static_cast<Eigen::Index>(mp.first));
        if (mp.split) v -= y(static_cast<Eigen::Index>(mp.first + 1));
        result.x[j] = v;
    }
    result.value = 0.0;
    for (std::size_t j = 0; j < n; ++j) result.value += problem.objective[j] * result.x[j];
    return result;
}

double max_violation(const LpProblem& problem, const std::vector<double>& x) {
    double worst = 0.0;
    auto dot = [&](const std::vector<double>& a) {
        double s = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) s += a[j] * x[j];
        return s;
    };
    for (std::size_t i = 0; i < problem.inequality_lhs.size(); ++i)
        worst = std::max(worst, dot(problem.inequality_lhs[i]) - problem.inequality_rhs[i]);
    for (std::size_t i = 0; i < problem.equality_lhs.size(); ++i)
        worst = std::max(worst, std::abs(dot(problem.equality_lhs[i]) - problem.equality_rhs[i]));
    for (std::size_t j = 0; j < x.size(); ++j) {
        worst = std::max(worst, (problem.lower.empty() ? 0.0 : problem.lower[j]) - x[j]);
        if (!problem.upper.empty()) worst = std::max(worst, x[j] - problem.upper[j]);
    }
    return worst;
}

}  // namespace decfsc
