#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "qsed/linalg.hpp"

namespace qsed::lp {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class Sense { Minimize, Maximize };
enum class RowSense { LessEqual, GreaterEqual, Equal };

/// optimize objective^T x  s.t.  constraints x (row_senses) rhs,  lower <= x <= upper.
struct LinearProgram {
    Sense sense = Sense::Minimize;
    VectorXd objective;
    MatrixXd constraints;
    VectorXd rhs;
    std::vector<RowSense> row_senses;
    VectorXd lower;
    VectorXd upper;

    /// Non-negative variables, no upper bounds.
    static LinearProgram nonnegative(Sense sense, VectorXd objective, MatrixXd constraints,
                                     VectorXd rhs, std::vector<RowSense> senses);

    Eigen::Index num_vars() const { return objective.size(); }
    Eigen::Index num_rows() const { return constraints.rows(); }
    void validate() const;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, Failed };

struct LpOutcome {
    LpStatus status = LpStatus::Failed;
    double objective = 0.0;
    /// Optimal: solution. Unbounded: a feasible point.
    VectorXd primal;
    /// Optimal: d objective / d rhs per row.
    VectorXd dual;
    VectorXd reduced_costs;
    /// Unbounded: recession direction improving the objective.
    VectorXd ray;
    /// Infeasible: multipliers w over the constraint rows followed by one per
    /// finite-range variable. For LPs with x >= 0 only they satisfy
    /// w^T A <= 0, w^T b > 0 with w <= 0 on <= rows and w >= 0 on >= rows.
    VectorXd farkas;
    std::size_t iterations = 0;
    std::string message;

    bool optimal() const { return status == LpStatus::Optimal; }
};

struct SimplexOptions {
    double feasibility_tol = 1e-8;
    double optimality_tol = 1e-7;
    double pivot_tol = 1e-10;
    /// Switch from Dantzig pricing to Bland's rule after this many pivots.
    std::size_t bland_after = 500;
    std::size_t refactor_every = 50;
    std::size_t max_iterations = 100000;
};

/// Two-phase dense revised simplex. Never reports Optimal for a point that
/// fails the primal residual check; such cases come back as Failed.
LpOutcome solve(const LinearProgram &lp, const SimplexOptions &opts = {});

/// Dual objective for row duals `dual` (bound terms included).
double dual_objective(const LinearProgram &lp, const VectorXd &dual);

struct Residuals {
    double primal = 0.0;          ///< worst row/bound violation
    double dual = 0.0;            ///< worst reduced-cost sign violation
    double duality_gap = 0.0;     ///< |primal obj - dual obj|
    double complementarity = 0.0; ///< worst |y_i * slack_i| or |d_j * (x_j - bound)|
};

Residuals residuals(const LinearProgram &lp, const LpOutcome &outcome);

/// Plain-text tableau dump: a header line "lp <rows> <vars> <min|max>", the
/// objective row "c ...", one line per row "r <sense> <rhs> : coeffs...", then
/// "bounds" lines "x<j> <lower> <upper>".
void dump(std::ostream &os, const LinearProgram &lp);

} // namespace qsed::lp
