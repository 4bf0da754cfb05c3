#include "qsed/lp.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace qsed::lp {

LinearProgram LinearProgram::nonnegative(Sense sense, VectorXd objective, MatrixXd constraints,
                                         VectorXd rhs, std::vector<RowSense> senses) {
    LinearProgram lp;
    lp.sense = sense;
    const auto n = objective.size();
    lp.objective = std::move(objective);
    lp.constraints = std::move(constraints);
    lp.rhs = std::move(rhs);
    lp.row_senses = std::move(senses);
    lp.lower = VectorXd::Zero(n);
    lp.upper = VectorXd::Constant(n, kInfinity);
    return lp;
}

void LinearProgram::validate() const {
    const auto n = objective.size();
    const auto m = constraints.rows();
    if (constraints.cols() != n && m > 0) {
        throw std::invalid_argument("lp: constraint matrix column count differs from objective");
    }
    if (rhs.size() != m || static_cast<Eigen::Index>(row_senses.size()) != m) {
        throw std::invalid_argument("lp: rhs/sense length differs from row count");
    }
    if (lower.size() != n || upper.size() != n) {
        throw std::invalid_argument("lp: bound vectors differ from variable count");
    }
    if (!objective.allFinite() || !constraints.allFinite() || !rhs.allFinite()) {
        throw std::invalid_argument("lp: non-finite coefficient");
    }
    for (Eigen::Index j = 0; j < n; ++j) {
        if (std::isnan(lower[j]) || std::isnan(upper[j]) || lower[j] > upper[j] ||
            lower[j] == kInfinity || upper[j] == -kInfinity) {
            throw std::invalid_argument("lp: invalid bounds on variable " + std::to_string(j));
        }
    }
}

namespace {

// x_j = offset + sign * xhat[col] - (split >= 0 ? xhat[split] : 0)
struct ColumnMap {
    double offset = 0.0;
    double sign = 1.0;
    Eigen::Index col = -1;
    Eigen::Index split = -1;
    Eigen::Index range_row = -1;
};

enum class PhaseResult { Optimal, Unbounded, IterationLimit };

class Simplex {
  public:
    Simplex(const LinearProgram &lp, const SimplexOptions &opts) : lp_(lp), opts_(opts) { build(); }

    LpOutcome run();

  private:
    void build();
    void refactor();
    PhaseResult iterate(const VectorXd &cost, bool phase_one);
    VectorXd duals(const VectorXd &cost) const;
    VectorXd map_primal() const;
    VectorXd map_direction(const VectorXd &xhat) const;
    void drive_out_artificials();

    const LinearProgram &lp_;
    SimplexOptions opts_;

    std::vector<ColumnMap> maps_;
    Eigen::Index structural_ = 0;
    Eigen::Index first_artificial_ = 0;
    Eigen::Index rows_ = 0;
    Eigen::Index cols_ = 0;
    MatrixXd a_;
    VectorXd b_;
    VectorXd cost_;
    std::vector<double> row_sign_;

    std::vector<Eigen::Index> basis_;
    std::vector<Eigen::Index> position_; // basis position or -1
    MatrixXd binv_;
    VectorXd xb_;
    std::size_t iterations_ = 0;
    std::size_t since_refactor_ = 0;
    Eigen::Index unbounded_col_ = -1;
    VectorXd unbounded_dir_;
};

void Simplex::build() {
    const auto n = lp_.num_vars();
    const auto m = lp_.num_rows();
    maps_.resize(static_cast<std::size_t>(n));
    Eigen::Index next = 0;
    Eigen::Index range_rows = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
        auto &mp = maps_[static_cast<std::size_t>(j)];
        const double l = lp_.lower[j], u = lp_.upper[j];
        if (std::isfinite(l)) {
            mp.offset = l;
            mp.col = next++;
            if (std::isfinite(u)) {
                mp.range_row = m + range_rows++;
            }
        } else if (std::isfinite(u)) {
            mp.offset = u;
            mp.sign = -1.0;
            mp.col = next++;
        } else {
            mp.col = next++;
            mp.split = next++;
        }
    }
    structural_ = next;
    rows_ = m + range_rows;

    Eigen::Index slacks = range_rows;
    for (auto s : lp_.row_senses) {
        if (s != RowSense::Equal) {
            ++slacks;
        }
    }
    const Eigen::Index pre_art = structural_ + slacks;
    // Worst case one artificial per row.
    a_ = MatrixXd::Zero(rows_, pre_art + rows_);
    b_ = VectorXd::Zero(rows_);
    row_sign_.assign(static_cast<std::size_t>(rows_), 1.0);
    std::vector<Eigen::Index> slack_of_row(static_cast<std::size_t>(rows_), -1);

    Eigen::Index slack_col = structural_;
    for (Eigen::Index i = 0; i < m; ++i) {
        double rhs = lp_.rhs[i];
        for (Eigen::Index j = 0; j < n; ++j) {
            const double aij = lp_.constraints(i, j);
            if (aij == 0.0) {
                continue;
            }
            const auto &mp = maps_[static_cast<std::size_t>(j)];
            rhs -= aij * mp.offset;
            a_(i, mp.col) += aij * mp.sign;
            if (mp.split >= 0) {
                a_(i, mp.split) -= aij;
            }
        }
        if (lp_.row_senses[static_cast<std::size_t>(i)] == RowSense::LessEqual) {
            a_(i, slack_col) = 1.0;
            slack_of_row[static_cast<std::size_t>(i)] = slack_col++;
        } else if (lp_.row_senses[static_cast<std::size_t>(i)] == RowSense::GreaterEqual) {
            a_(i, slack_col) = -1.0;
            slack_of_row[static_cast<std::size_t>(i)] = slack_col++;
        }
        b_[i] = rhs;
    }
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto &mp = maps_[static_cast<std::size_t>(j)];
        if (mp.range_row >= 0) {
            a_(mp.range_row, mp.col) = 1.0;
            a_(mp.range_row, slack_col) = 1.0;
            slack_of_row[static_cast<std::size_t>(mp.range_row)] = slack_col++;
            b_[mp.range_row] = lp_.upper[j] - lp_.lower[j];
        }
    }
    for (Eigen::Index i = 0; i < rows_; ++i) {
        if (b_[i] < 0.0) {
            a_.row(i) *= -1.0;
            b_[i] = -b_[i];
            row_sign_[static_cast<std::size_t>(i)] = -1.0;
        }
    }

    first_artificial_ = pre_art;
    basis_.assign(static_cast<std::size_t>(rows_), -1);
    Eigen::Index art = pre_art;
    for (Eigen::Index i = 0; i < rows_; ++i) {
        const auto s = slack_of_row[static_cast<std::size_t>(i)];
        if (s >= 0 && a_(i, s) > 0.0) {
            basis_[static_cast<std::size_t>(i)] = s;
        } else {
            a_(i, art) = 1.0;
            basis_[static_cast<std::size_t>(i)] = art++;
        }
    }
    cols_ = art;
    a_.conservativeResize(rows_, cols_);

    cost_ = VectorXd::Zero(cols_);
    const double dir = lp_.sense == Sense::Minimize ? 1.0 : -1.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto &mp = maps_[static_cast<std::size_t>(j)];
        cost_[mp.col] += dir * lp_.objective[j] * mp.sign;
        if (mp.split >= 0) {
            cost_[mp.split] -= dir * lp_.objective[j];
        }
    }
    position_.assign(static_cast<std::size_t>(cols_), -1);
    for (Eigen::Index i = 0; i < rows_; ++i) {
        position_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])] = i;
    }
    refactor();
}

void Simplex::refactor() {
    since_refactor_ = 0;
    if (rows_ == 0) {
        binv_.resize(0, 0);
        xb_.resize(0);
        return;
    }
    MatrixXd bm(rows_, rows_);
    for (Eigen::Index i = 0; i < rows_; ++i) {
        bm.col(i) = a_.col(basis_[static_cast<std::size_t>(i)]);
    }
    binv_ = bm.partialPivLu().inverse();
    xb_ = binv_ * b_;
    for (Eigen::Index i = 0; i < rows_; ++i) {
        if (xb_[i] < 0.0 && xb_[i] > -opts_.feasibility_tol) {
            xb_[i] = 0.0;
        }
    }
}

VectorXd Simplex::duals(const VectorXd &cost) const {
    VectorXd cb(rows_);
    for (Eigen::Index i = 0; i < rows_; ++i) {
        cb[i] = cost[basis_[static_cast<std::size_t>(i)]];
    }
    return binv_.transpose() * cb;
}

PhaseResult Simplex::iterate(const VectorXd &cost, bool phase_one) {
    const Eigen::Index enterable = phase_one ? cols_ : first_artificial_;
    std::size_t phase_pivots = 0;
    while (true) {
        if (iterations_ >= opts_.max_iterations) {
            return PhaseResult::IterationLimit;
        }
        const bool bland = phase_pivots >= opts_.bland_after;
        const VectorXd y = duals(cost);
        const VectorXd d = cost.head(enterable) - a_.leftCols(enterable).transpose() * y;

        Eigen::Index q = -1;
        double best = -opts_.optimality_tol;
        for (Eigen::Index j = 0; j < enterable; ++j) {
            if (position_[static_cast<std::size_t>(j)] >= 0) {
                continue;
            }
            if (bland) {
                if (d[j] < -opts_.optimality_tol) {
                    q = j;
                    break;
                }
            } else {
                // Scaled Dantzig pricing.
                const double scaled = d[j] / std::max(1.0, a_.col(j).lpNorm<Eigen::Infinity>());
                if (scaled < best) {
                    best = scaled;
                    q = j;
                }
            }
        }
        if (q < 0) {
            return PhaseResult::Optimal;
        }

        const VectorXd alpha = binv_ * a_.col(q);
        Eigen::Index r = -1;
        if (bland) {
            double min_ratio = kInfinity;
            for (Eigen::Index i = 0; i < rows_; ++i) {
                if (alpha[i] > opts_.pivot_tol) {
                    const double ratio = std::max(0.0, xb_[i]) / alpha[i];
                    if (ratio < min_ratio - 1e-12 ||
                        (ratio <= min_ratio + 1e-12 && r >= 0 &&
                         basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(r)])) {
                        min_ratio = std::min(min_ratio, ratio);
                        r = i;
                    }
                }
            }
        } else {
            // Harris two-pass ratio test.
            double bound = kInfinity;
            for (Eigen::Index i = 0; i < rows_; ++i) {
                if (alpha[i] > opts_.pivot_tol) {
                    bound = std::min(bound, (std::max(0.0, xb_[i]) + opts_.feasibility_tol) / alpha[i]);
                }
            }
            double largest = 0.0;
            for (Eigen::Index i = 0; i < rows_; ++i) {
                if (alpha[i] > opts_.pivot_tol && std::max(0.0, xb_[i]) / alpha[i] <= bound &&
                    alpha[i] > largest) {
                    largest = alpha[i];
                    r = i;
                }
            }
        }
        if (r < 0) {
            unbounded_col_ = q;
            unbounded_dir_ = alpha;
            return PhaseResult::Unbounded;
        }

        const double theta = std::max(0.0, xb_[r]) / alpha[r];
        xb_ -= theta * alpha;
        xb_[r] = theta;
        for (Eigen::Index i = 0; i < rows_; ++i) {
            if (xb_[i] < 0.0 && xb_[i] > -opts_.feasibility_tol) {
                xb_[i] = 0.0;
            }
        }
        const VectorXd pivot_row = binv_.row(r) / alpha[r];
        for (Eigen::Index i = 0; i < rows_; ++i) {
            if (i != r && alpha[i] != 0.0) {
                binv_.row(i) -= alpha[i] * pivot_row.transpose();
            }
        }
        binv_.row(r) = pivot_row.transpose();

        position_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(r)])] = -1;
        basis_[static_cast<std::size_t>(r)] = q;
        position_[static_cast<std::size_t>(q)] = r;
        ++iterations_;
        ++phase_pivots;
        if (++since_refactor_ >= opts_.refactor_every) {
            refactor();
        }
    }
}

void Simplex::drive_out_artificials() {
    for (Eigen::Index r = 0; r < rows_; ++r) {
        if (basis_[static_cast<std::size_t>(r)] < first_artificial_) {
            continue;
        }
        const VectorXd row = binv_.row(r) * a_.leftCols(first_artificial_);
        Eigen::Index q = -1;
        double best = 1e-7;
        for (Eigen::Index j = 0; j < first_artificial_; ++j) {
            if (position_[static_cast<std::size_t>(j)] < 0 && std::abs(row[j]) > best) {
                best = std::abs(row[j]);
                q = j;
            }
        }
        if (q < 0) {
            continue; // redundant row: the artificial stays basic at zero
        }
        position_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(r)])] = -1;
        basis_[static_cast<std::size_t>(r)] = q;
        position_[static_cast<std::size_t>(q)] = r;
        refactor();
    }
}

VectorXd Simplex::map_primal() const {
    VectorXd xhat = VectorXd::Zero(cols_);
    for (Eigen::Index i = 0; i < rows_; ++i) {
        xhat[basis_[static_cast<std::size_t>(i)]] = std::max(0.0, xb_[i]);
    }
    VectorXd x(lp_.num_vars());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        const auto &mp = maps_[static_cast<std::size_t>(j)];
        x[j] = mp.offset + mp.sign * xhat[mp.col] - (mp.split >= 0 ? xhat[mp.split] : 0.0);
    }
    return x;
}

VectorXd Simplex::map_direction(const VectorXd &xhat) const {
    VectorXd x(lp_.num_vars());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        const auto &mp = maps_[static_cast<std::size_t>(j)];
        x[j] = mp.sign * xhat[mp.col] - (mp.split >= 0 ? xhat[mp.split] : 0.0);
    }
    return x;
}

LpOutcome Simplex::run() {
    LpOutcome out;
    const bool needs_phase_one = cols_ > first_artificial_;
    if (needs_phase_one) {
        VectorXd c1 = VectorXd::Zero(cols_);
        c1.tail(cols_ - first_artificial_).setOnes();
        const auto res = iterate(c1, true);
        if (res == PhaseResult::IterationLimit) {
            out.message = "iteration limit in phase one";
            out.iterations = iterations_;
            return out;
        }
        refactor();
        double infeas = 0.0;
        for (Eigen::Index i = 0; i < rows_; ++i) {
            if (basis_[static_cast<std::size_t>(i)] >= first_artificial_) {
                infeas += std::max(0.0, xb_[i]);
            }
        }
        if (infeas > opts_.feasibility_tol * (1.0 + b_.lpNorm<Eigen::Infinity>())) {
            out.status = LpStatus::Infeasible;
            const VectorXd y = duals(c1);
            out.farkas = VectorXd(rows_);
            for (Eigen::Index i = 0; i < rows_; ++i) {
                out.farkas[i] = row_sign_[static_cast<std::size_t>(i)] * y[i];
            }
            out.iterations = iterations_;
            out.message = "phase one infeasibility " + std::to_string(infeas);
            return out;
        }
        drive_out_artificials();
    }

    const auto res = iterate(cost_, false);
    out.iterations = iterations_;
    if (res == PhaseResult::IterationLimit) {
        out.message = "iteration limit in phase two";
        return out;
    }
    const double dir = lp_.sense == Sense::Minimize ? 1.0 : -1.0;
    if (res == PhaseResult::Unbounded) {
        VectorXd dhat = VectorXd::Zero(cols_);
        dhat[unbounded_col_] = 1.0;
        for (Eigen::Index i = 0; i < rows_; ++i) {
            dhat[basis_[static_cast<std::size_t>(i)]] -= unbounded_dir_[i];
        }
        out.status = LpStatus::Unbounded;
        out.primal = map_primal();
        out.ray = map_direction(dhat);
        out.objective = dir * -kInfinity;
        return out;
    }

    refactor();
    out.primal = map_primal();
    out.objective = lp_.objective.dot(out.primal);
    const VectorXd y = duals(cost_);
    const auto m = lp_.num_rows();
    out.dual = VectorXd(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        out.dual[i] = dir * row_sign_[static_cast<std::size_t>(i)] * y[i];
    }
    out.reduced_costs = lp_.objective - (m > 0 ? VectorXd(lp_.constraints.transpose() * out.dual)
                                               : VectorXd::Zero(lp_.num_vars()));

    // Primal residual gate.
    double worst = 0.0;
    if (m > 0) {
        const VectorXd ax = lp_.constraints * out.primal;
        for (Eigen::Index i = 0; i < m; ++i) {
            const double scale = 1.0 + std::abs(lp_.rhs[i]);
            double v = 0.0;
            switch (lp_.row_senses[static_cast<std::size_t>(i)]) {
            case RowSense::LessEqual: v = ax[i] - lp_.rhs[i]; break;
            case RowSense::GreaterEqual: v = lp_.rhs[i] - ax[i]; break;
            case RowSense::Equal: v = std::abs(ax[i] - lp_.rhs[i]); break;
            }
            worst = std::max(worst, v / scale);
        }
    }
    if (worst > 1e-6) {
        out.status = LpStatus::Failed;
        out.message = "primal residual " + std::to_string(worst) + " after optimal basis";
        return out;
    }
    out.status = LpStatus::Optimal;
    return out;
}

} // namespace

LpOutcome solve(const LinearProgram &lp, const SimplexOptions &opts) {
    lp.validate();
    Simplex s(lp, opts);
    return s.run();
}

double dual_objective(const LinearProgram &lp, const VectorXd &dual) {
    const bool minimize = lp.sense == Sense::Minimize;
    double v = lp.num_rows() > 0 ? lp.rhs.dot(dual) : 0.0;
    const VectorXd d = lp.objective - (lp.num_rows() > 0 ? VectorXd(lp.constraints.transpose() * dual)
                                                         : VectorXd::Zero(lp.num_vars()));
    for (Eigen::Index j = 0; j < d.size(); ++j) {
        if (std::abs(d[j]) <= 1e-12) {
            continue;
        }
        // A minimizer sits at the lower bound when d > 0; a maximizer when d < 0.
        const bool at_lower = minimize ? d[j] > 0.0 : d[j] < 0.0;
        const double bound = at_lower ? lp.lower[j] : lp.upper[j];
        if (!std::isfinite(bound)) {
            return minimize ? -kInfinity : kInfinity;
        }
        v += d[j] * bound;
    }
    return v;
}

Residuals residuals(const LinearProgram &lp, const LpOutcome &outcome) {
    Residuals r;
    if (outcome.status != LpStatus::Optimal) {
        return r;
    }
    const auto &x = outcome.primal;
    const auto &y = outcome.dual;
    const bool minimize = lp.sense == Sense::Minimize;
    const VectorXd ax = lp.num_rows() > 0 ? VectorXd(lp.constraints * x) : VectorXd();
    for (Eigen::Index i = 0; i < lp.num_rows(); ++i) {
        const double slack = ax[i] - lp.rhs[i];
        const auto s = lp.row_senses[static_cast<std::size_t>(i)];
        if (s == RowSense::LessEqual) {
            r.primal = std::max(r.primal, slack);
        } else if (s == RowSense::GreaterEqual) {
            r.primal = std::max(r.primal, -slack);
        } else {
            r.primal = std::max(r.primal, std::abs(slack));
        }
        // Row dual signs: min problem -> y <= 0 on <=, y >= 0 on >=.
        double wrong = 0.0;
        if (s == RowSense::LessEqual) {
            wrong = minimize ? std::max(0.0, y[i]) : std::max(0.0, -y[i]);
        } else if (s == RowSense::GreaterEqual) {
            wrong = minimize ? std::max(0.0, -y[i]) : std::max(0.0, y[i]);
        }
        r.dual = std::max(r.dual, wrong);
        if (s != RowSense::Equal) {
            r.complementarity = std::max(r.complementarity, std::abs(y[i] * slack));
        }
    }
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        r.primal = std::max({r.primal, lp.lower[j] - x[j], x[j] - lp.upper[j]});
        const double d = outcome.reduced_costs[j];
        const double gap_low = std::isfinite(lp.lower[j]) ? x[j] - lp.lower[j] : kInfinity;
        const double gap_up = std::isfinite(lp.upper[j]) ? lp.upper[j] - x[j] : kInfinity;
        const double comp = std::abs(d) * std::min(gap_low, gap_up);
        if (std::isfinite(comp)) {
            r.complementarity = std::max(r.complementarity, comp);
        } else if (std::abs(d) > 0.0) {
            r.dual = std::max(r.dual, std::abs(d));
        }
    }
    r.duality_gap = std::abs(outcome.objective - dual_objective(lp, y));
    (void)minimize;
    return r;
}

void dump(std::ostream &os, const LinearProgram &lp) {
    os << "lp " << lp.num_rows() << ' ' << lp.num_vars() << ' '
       << (lp.sense == Sense::Minimize ? "min" : "max") << '\n';
    os << 'c';
    for (Eigen::Index j = 0; j < lp.num_vars(); ++j) {
        os << ' ' << lp.objective[j];
    }
    os << '\n';
    for (Eigen::Index i = 0; i < lp.num_rows(); ++i) {
        const auto s = lp.row_senses[static_cast<std::size_t>(i)];
        os << "r " << (s == RowSense::LessEqual ? "<=" : s == RowSense::GreaterEqual ? ">=" : "=")
           << ' ' << lp.rhs[i] << " :";
        for (Eigen::Index j = 0; j < lp.num_vars(); ++j) {
            os << ' ' << lp.constraints(i, j);
        }
        os << '\n';
    }
    os << "bounds\n";
    for (Eigen::Index j = 0; j < lp.num_vars(); ++j) {
        os << 'x' << j << ' ' << lp.lower[j] << ' ' << lp.upper[j] << '\n';
    }
}

} // namespace qsed::lp
