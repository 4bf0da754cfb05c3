#include <gtest/gtest.h>

#include <sstream>

#include "qsed/lp.hpp"
#include "support.hpp"

using namespace qsed;
using namespace qsed::lp;
using qsed::fixture::Gen;
using qsed::fixture::unbounded_lp;
using qsed::fixture::worst_violation;

namespace {

LinearProgram make(Sense sense, std::vector<double> c, std::vector<std::vector<double>> rows,
                   std::vector<double> rhs, std::vector<RowSense> senses) {
    const auto m = static_cast<Eigen::Index>(rows.size());
    const auto n = static_cast<Eigen::Index>(c.size());
    MatrixXd a(m, n);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            a(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
    }
    return LinearProgram::nonnegative(sense, Eigen::Map<VectorXd>(c.data(), n), a,
                                      Eigen::Map<VectorXd>(rhs.data(), m), std::move(senses));
}

} // namespace

TEST(LpExamples, TwoVariableMaximum) {
    const auto p = make(Sense::Maximize, {3, 2}, {{1, 1}, {1, 3}, {1, 0}}, {4, 9, 3},
                        {RowSense::LessEqual, RowSense::LessEqual, RowSense::LessEqual});
    const auto out = solve(p);
    ASSERT_EQ(out.status, LpStatus::Optimal);
    EXPECT_NEAR(out.objective, 11.0, 1e-9);
    EXPECT_NEAR(out.primal[0], 3.0, 1e-9);
    EXPECT_NEAR(out.primal[1], 1.0, 1e-9);
    EXPECT_NEAR(out.dual[0], 2.0, 1e-9);
    EXPECT_NEAR(out.dual[1], 0.0, 1e-9);
    EXPECT_NEAR(out.dual[2], 1.0, 1e-9);
    EXPECT_NEAR(dual_objective(p, out.dual), 11.0, 1e-9);
}

TEST(LpExamples, EqualityAndGreaterRows) {
    // min x + 2y + 3z  s.t. x + y + z = 6, y + z >= 4, z >= 1.
    const auto p = make(Sense::Minimize, {1, 2, 3}, {{1, 1, 1}, {0, 1, 1}, {0, 0, 1}}, {6, 4, 1},
                        {RowSense::Equal, RowSense::GreaterEqual, RowSense::GreaterEqual});
    const auto out = solve(p);
    ASSERT_EQ(out.status, LpStatus::Optimal);
    EXPECT_NEAR(out.objective, 2.0 + 6.0 + 3.0, 1e-9);
}

TEST(LpExamples, InfeasibleWithFarkasCertificate) {
    const auto p = make(Sense::Minimize, {1}, {{1}, {1}}, {2, 1}, {RowSense::GreaterEqual, RowSense::LessEqual});
    const auto out = solve(p);
    ASSERT_EQ(out.status, LpStatus::Infeasible);
    ASSERT_GE(out.farkas.size(), 2);
    const VectorXd w = out.farkas.head(2);
    EXPECT_GT(w.dot(p.rhs), 1e-9);
    EXPECT_LE((p.constraints.transpose() * w).maxCoeff(), 1e-9);
    EXPECT_GE(w[0], -1e-12);
    EXPECT_LE(w[1], 1e-12);
}

TEST(LpExamples, UnboundedWithRay) {
    const auto p = make(Sense::Maximize, {1, 0}, {{1, -1}}, {1}, {RowSense::LessEqual});
    const auto out = solve(p);
    ASSERT_EQ(out.status, LpStatus::Unbounded);
    EXPECT_GT(p.objective.dot(out.ray), 1e-9);
    for (double t : {1.0, 10.0, 100.0}) {
        EXPECT_LE(worst_violation(p, out.primal + t * out.ray), 1e-7);
    }
}

TEST(LpExamples, BealeCyclingInstance) {
    const auto p = make(Sense::Minimize, {-0.75, 20, -0.5, 6},
                        {{0.25, -8, -1, 9}, {0.5, -12, -0.5, 3}, {0, 0, 1, 0}}, {0, 0, 1},
                        {RowSense::LessEqual, RowSense::LessEqual, RowSense::LessEqual});
    const auto out = solve(p);
    ASSERT_EQ(out.status, LpStatus::Optimal);
    EXPECT_NEAR(out.objective, -1.25, 1e-9);
}

TEST(LpExamples, BoundedVariables) {
    LinearProgram p = make(Sense::Maximize, {1, 1}, {{1, 2}}, {10}, {RowSense::LessEqual});
    p.lower << 1.0, -2.0;
    p.upper << 3.0, 2.5;
    const auto out = solve(p);
    ASSERT_EQ(out.status, LpStatus::Optimal);
    EXPECT_NEAR(out.objective, 5.5, 1e-9);
    const auto r = residuals(p, out);
    EXPECT_LE(r.duality_gap, 1e-9);
}

TEST(LpExamples, RejectsMalformedInput) {
    auto p = make(Sense::Minimize, {1, 1}, {{1, 1}}, {1}, {RowSense::LessEqual});
    p.row_senses.clear();
    EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(LpDump, Format) {
    const auto p = make(Sense::Maximize, {3, 2}, {{1, 1}}, {4}, {RowSense::LessEqual});
    std::ostringstream os;
    dump(os, p);
    EXPECT_EQ(os.str(), "lp 1 2 max\nc 3 2\nr <= 4 : 1 1\nbounds\nx0 0 inf\nx1 0 inf\n");
}

TEST(LpProperty, StrongDualityOnRandomFeasibleLps) {
    Gen g(101);
    for (int trial = 0; trial < 500; ++trial) {
        const auto p = g.feasible_lp();
        const auto out = solve(p);
        ASSERT_EQ(out.status, LpStatus::Optimal) << "trial " << trial << ": " << out.message;
        const auto r = residuals(p, out);
        EXPECT_LE(r.primal, 1e-7) << trial;
        EXPECT_LE(r.dual, 1e-7) << trial;
        EXPECT_LE(r.duality_gap, 1e-7 * (1.0 + std::abs(out.objective))) << trial;
        EXPECT_LE(r.complementarity, 1e-6 * (1.0 + std::abs(out.objective))) << trial;
        EXPECT_NEAR(p.objective.dot(out.primal), out.objective, 1e-9 * (1.0 + std::abs(out.objective)));
    }
}

TEST(LpProperty, DualObjectiveBoundsEveryFeasiblePoint) {
    Gen g(55);
    for (int trial = 0; trial < 100; ++trial) {
        const auto p = g.feasible_lp(10, 8);
        const auto out = solve(p);
        ASSERT_EQ(out.status, LpStatus::Optimal);
        // Every vertex reachable by perturbing the objective is feasible and no better.
        auto q = p;
        for (auto &c : q.objective) c += g.uniform(-3.0, 3.0);
        const auto other = solve(q);
        if (other.status != LpStatus::Optimal) continue;
        const double v = p.objective.dot(other.primal);
        if (p.sense == Sense::Minimize) {
            EXPECT_GE(v, out.objective - 1e-7);
        } else {
            EXPECT_LE(v, out.objective + 1e-7);
        }
    }
}

TEST(LpProperty, RaysOfConstructedUnboundedLps) {
    Gen g(202);
    for (int trial = 0; trial < 200; ++trial) {
        const auto p = unbounded_lp(g);
        const auto out = solve(p);
        ASSERT_EQ(out.status, LpStatus::Unbounded) << trial;
        const double gain = p.objective.dot(out.ray) * (p.sense == Sense::Minimize ? -1.0 : 1.0);
        EXPECT_GT(gain, 1e-9) << trial;
        for (double t : {1.0, 10.0, 100.0}) {
            EXPECT_LE(worst_violation(p, out.primal + t * out.ray), 1e-7 * (1.0 + t)) << trial;
        }
    }
}

TEST(LpProperty, FarkasCertificatesOfContradictoryRows) {
    Gen g(303);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = g.integer(1, 8);
        const int m = g.integer(0, 8);
        LinearProgram p;
        p.sense = Sense::Minimize;
        p.objective = VectorXd::Ones(n);
        p.constraints = MatrixXd(m + 2, n);
        p.rhs = VectorXd(m + 2);
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < n; ++j) p.constraints(i, j) = std::round(g.uniform(-4.0, 4.0));
            p.rhs[i] = g.uniform(-5.0, 5.0);
            p.row_senses.push_back(g.coin() ? RowSense::LessEqual : RowSense::GreaterEqual);
        }
        VectorXd a(n);
        for (int j = 0; j < n; ++j) a[j] = std::round(g.uniform(-4.0, 4.0));
        const double b = g.uniform(-3.0, 3.0);
        p.constraints.row(m) = a;
        p.rhs[m] = b;
        p.row_senses.push_back(RowSense::LessEqual);
        p.constraints.row(m + 1) = a;
        p.rhs[m + 1] = b + g.uniform(0.5, 2.0);
        p.row_senses.push_back(RowSense::GreaterEqual);
        p.lower = VectorXd::Zero(n);
        p.upper = VectorXd::Constant(n, kInfinity);
        const auto out = solve(p);
        ASSERT_EQ(out.status, LpStatus::Infeasible) << trial;
        ASSERT_GE(out.farkas.size(), m + 2);
        const VectorXd w = out.farkas.head(m + 2);
        EXPECT_GT(w.dot(p.rhs), 1e-9) << trial;
        EXPECT_LE((p.constraints.transpose() * w).maxCoeff(), 1e-7) << trial;
        for (int i = 0; i < m + 2; ++i) {
            if (p.row_senses[static_cast<std::size_t>(i)] == RowSense::LessEqual) {
                EXPECT_LE(w[i], 1e-12);
            } else {
                EXPECT_GE(w[i], -1e-12);
            }
        }
    }
}
