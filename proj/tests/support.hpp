#pragma once

// Shared fixtures and hand-rolled random generators for the test suites.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "qsed/dispatch.hpp"
#include "qsed/io.hpp"
#include "qsed/lp.hpp"
#include "qsed/qubo.hpp"

namespace qsed::fixture {

inline std::string case_path(const std::string &name) {
    return std::string(QSED_SOURCE_DIR) + "/cases/" + name;
}

inline const dispatch::DispatchCase &micro6() {
    static const auto dc = io::load_case(case_path("micro6.json"));
    return dc;
}

inline dispatch::Generator gen(const std::string &name, int bus, double pmax, double mc, bool must_run) {
    dispatch::Generator g;
    g.name = name;
    g.bus = bus;
    g.p_max_mw = pmax;
    g.ramp_mw_per_h = pmax;
    g.marginal_cost = mc;
    g.must_run = must_run;
    g.initially_on = true;
    return g;
}

/// One bus, load 5; G1 must-run 3 MW at 1 $/MWh; G2 committable 10 MW at
/// 2 $/MWh with 1 $/h no-load; a 4 MW RES unit forecasting 2 MW with a
/// one-qubit grid, so the available power is 0 or 4 MW.
inline dispatch::DispatchCase hand_case() {
    dispatch::DispatchCase dc;
    dc.name = "hand";
    dc.horizon = 1;
    dc.buses.push_back({"B", {5.0}});
    dc.generators.push_back(gen("G1", 0, 3.0, 1.0, true));
    auto g2 = gen("G2", 0, 10.0, 2.0, false);
    g2.no_load_cost = 1.0;
    dc.generators.push_back(g2);
    dispatch::ResUnit r;
    r.name = "W";
    r.capacity_mw = 4.0;
    r.forecast_mw = {2.0};
    r.distribution = uqae::ErrorDistribution::normal(0.0, 0.5);
    r.encoding = {0, 0};
    dc.res_units.push_back(r);
    return dc;
}

class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    bool coin(double p = 0.5) { return uniform(0.0, 1.0) < p; }
    std::mt19937_64 &engine() { return rng_; }

    Bits bits(std::size_t n) {
        Bits b(n);
        for (auto &x : b) {
            x = coin() ? 1 : 0;
        }
        return b;
    }

    /// Dense QUBO with coefficients in [lo, hi].
    qubo::Qubo qubo(std::size_t n, double lo = -5.0, double hi = 5.0, bool integral = false) {
        qubo::Qubo q(n);
        auto draw = [&] { return integral ? std::round(uniform(lo, hi)) : uniform(lo, hi); };
        for (std::size_t i = 0; i < n; ++i) {
            q.add_linear(i, draw());
            for (std::size_t j = i + 1; j < n; ++j) {
                q.add_coupling(i, j, draw());
            }
        }
        q.offset = draw();
        return q;
    }

    /// Binary matrix with at least one 1 per row.
    qubo::CoverMatrix cover(std::size_t rows, std::size_t cols, double density = 0.35) {
        qubo::CoverMatrix n(rows, std::vector<std::uint8_t>(cols, 0));
        for (auto &row : n) {
            for (auto &v : row) {
                v = coin(density) ? 1 : 0;
            }
            row[static_cast<std::size_t>(integer(0, static_cast<int>(cols) - 1))] = 1;
        }
        return n;
    }

    /// Feasible and bounded LP with mixed row senses, some variable bounds and
    /// a known feasible point.
    lp::LinearProgram feasible_lp(int max_rows = 20, int max_vars = 20) {
        const int n = integer(1, max_vars);
        const int m = integer(1, max_rows - 1);
        VectorXd x0(n);
        for (int j = 0; j < n; ++j) {
            x0[j] = coin(0.3) ? 0.0 : uniform(0.0, 5.0);
        }
        lp::LinearProgram p;
        p.sense = coin() ? lp::Sense::Minimize : lp::Sense::Maximize;
        p.objective = VectorXd(n);
        for (int j = 0; j < n; ++j) {
            p.objective[j] = std::round(uniform(-10.0, 10.0));
        }
        p.constraints = MatrixXd::Zero(m + 1, n);
        p.rhs = VectorXd(m + 1);
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < n; ++j) {
                if (coin(0.6)) {
                    p.constraints(i, j) = std::round(uniform(-6.0, 6.0));
                }
            }
            const double ax = p.constraints.row(i).dot(x0);
            const int kind = integer(0, 4);
            if (kind <= 1) {
                p.row_senses.push_back(lp::RowSense::LessEqual);
                p.rhs[i] = ax + (coin(0.3) ? 0.0 : uniform(0.0, 4.0));
            } else if (kind <= 3) {
                p.row_senses.push_back(lp::RowSense::GreaterEqual);
                p.rhs[i] = ax - (coin(0.3) ? 0.0 : uniform(0.0, 4.0));
            } else {
                p.row_senses.push_back(lp::RowSense::Equal);
                p.rhs[i] = ax;
            }
        }
        p.constraints.row(m).setOnes();
        p.rhs[m] = x0.sum() + uniform(1.0, 10.0);
        p.row_senses.push_back(lp::RowSense::LessEqual);
        p.lower = VectorXd::Zero(n);
        p.upper = VectorXd::Constant(n, lp::kInfinity);
        for (int j = 0; j < n; ++j) {
            if (coin(0.2)) {
                p.upper[j] = x0[j] + uniform(0.0, 3.0);
            }
        }
        return p;
    }

private:
    std::mt19937_64 rng_;
};

inline double worst_violation(const lp::LinearProgram &p, const VectorXd &x) {
    const VectorXd ax = p.constraints * x;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < p.num_rows(); ++i) {
        const double r = ax[i] - p.rhs[i];
        switch (p.row_senses[static_cast<std::size_t>(i)]) {
        case lp::RowSense::LessEqual: worst = std::max(worst, r); break;
        case lp::RowSense::GreaterEqual: worst = std::max(worst, -r); break;
        case lp::RowSense::Equal: worst = std::max(worst, std::abs(r)); break;
        }
    }
    for (Eigen::Index j = 0; j < p.num_vars(); ++j) {
        worst = std::max({worst, p.lower[j] - x[j], x[j] - p.upper[j]});
    }
    return worst;
}

/// Feasible LP with a known recession direction along which the objective
/// improves without bound.
inline lp::LinearProgram unbounded_lp(Gen &g) {
    const int n = g.integer(2, 12);
    const int m = g.integer(1, 12);
    VectorXd r(n), x0(n);
    for (int j = 0; j < n; ++j) {
        r[j] = g.coin(0.3) ? 0.0 : g.uniform(0.1, 2.0);
        x0[j] = g.uniform(0.0, 3.0);
    }
    r[g.integer(0, n - 1)] = 1.0;
    lp::LinearProgram p;
    p.sense = g.coin() ? lp::Sense::Minimize : lp::Sense::Maximize;
    p.constraints = MatrixXd(m, n);
    p.rhs = VectorXd(m);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            p.constraints(i, j) = std::round(g.uniform(-5.0, 5.0));
        }
        const double ar = p.constraints.row(i).dot(r);
        const double ax = p.constraints.row(i).dot(x0);
        if (ar <= 0.0) {
            p.row_senses.push_back(lp::RowSense::LessEqual);
            p.rhs[i] = ax + g.uniform(0.0, 2.0);
        } else {
            p.row_senses.push_back(lp::RowSense::GreaterEqual);
            p.rhs[i] = ax - g.uniform(0.0, 2.0);
        }
    }
    VectorXd c(n);
    for (int j = 0; j < n; ++j) c[j] = std::round(g.uniform(-5.0, 5.0));
    // Improving along r: c.r < 0 for min, > 0 for max.
    const double want = p.sense == lp::Sense::Minimize ? -1.0 : 1.0;
    const double cr = c.dot(r);
    if (cr * want <= 0.0) {
        c += (want - cr) / r.squaredNorm() * r;
    }
    p.objective = c;
    p.lower = VectorXd::Zero(n);
    p.upper = VectorXd::Constant(n, lp::kInfinity);
    return p;
}

inline double l1(const std::vector<double> &a, const std::vector<double> &b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += std::abs(a[i] - b[i]);
    }
    return s;
}

} // namespace qsed::fixture
