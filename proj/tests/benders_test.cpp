#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "qsed/benders.hpp"
#include "support.hpp"

using namespace qsed;
using namespace qsed::benders;
using qsed::fixture::Gen;
using qsed::fixture::gen;
using qsed::fixture::hand_case;

namespace {

const uqae::ScenarioSet &micro6_scenarios() {
    static const auto set = uqae::generate_scenarios(fixture::micro6().uncertainties(), {});
    return set;
}

const dispatch::TwoStageProgram &micro6_program() {
    static const auto prog = dispatch::compile(fixture::micro6());
    return prog;
}

double micro6_optimum() {
    static const double v = dispatch::extensive_form(micro6_program(), micro6_scenarios()).objective;
    return v;
}

qubo::AffineForm form(double c, std::vector<double> coeffs) {
    qubo::AffineForm f;
    f.constant = c;
    f.coeffs = Eigen::Map<VectorXd>(coeffs.data(), static_cast<Eigen::Index>(coeffs.size()));
    return f;
}

OptimalityCut opt_cut(std::size_t s, qubo::AffineForm f) {
    OptimalityCut c;
    c.scenario = s;
    c.form = std::move(f);
    return c;
}

void expect_bounds(const BendersResult &r, bool monotone) {
    double prev = -1e300;
    for (const auto &it : r.trace) {
        if (monotone) {
            EXPECT_GE(it.lower, prev - 1e-9) << "iteration " << it.iteration;
        }
        prev = it.lower;
        if (std::isfinite(it.upper)) {
            EXPECT_GE(it.upper, it.lower - 1e-6 * (1.0 + std::abs(it.upper))) << "iteration " << it.iteration;
        }
    }
}

} // namespace

TEST(BendersAggregate, WeightedSum) {
    const auto agg = aggregate_optimality({opt_cut(1, form(2.0, {1.0, 0.0})), opt_cut(0, form(4.0, {0.0, -2.0}))},
                                          {0.25, 0.75});
    EXPECT_DOUBLE_EQ(agg.constant, 0.25 * 4.0 + 0.75 * 2.0);
    EXPECT_DOUBLE_EQ(agg.coeffs[0], 0.75);
    EXPECT_DOUBLE_EQ(agg.coeffs[1], -0.5);
}

TEST(BendersAggregate, MissingOrRepeatedScenario) {
    EXPECT_ANY_THROW(aggregate_optimality({opt_cut(0, form(1.0, {1.0}))}, {0.5, 0.5}));
    EXPECT_ANY_THROW(aggregate_optimality({opt_cut(0, form(1.0, {1.0})), opt_cut(0, form(1.0, {1.0}))}, {0.5, 0.5}));
}

TEST(BendersNames, RoundTrip) {
    for (auto b : {MasterBackend::IlpOracle, MasterBackend::QuboExact, MasterBackend::QuboQaoa, MasterBackend::QuboAnneal}) {
        EXPECT_EQ(master_from_string(to_string(b)), b);
    }
    EXPECT_THROW(master_from_string("milp"), std::invalid_argument);
}

TEST(BendersOracle, SmallMaster) {
    qubo::MasterProblem mp;
    mp.a = VectorXd(2);
    mp.a << 1.0, 2.0;
    mp.optimality.push_back(form(3.0, {-3.0, -1.0}));
    mp.feasibility.push_back(form(1.0, {-1.0, -1.0})); // z1 + z2 >= 1
    Bits z0;
    double obj = 0.0;
    ASSERT_TRUE(solve_master_oracle(mp, z0, obj));
    EXPECT_EQ(z0, (Bits{1, 0}));
    EXPECT_DOUBLE_EQ(obj, 1.0);
    mp.feasibility.push_back(form(1.0, {0.0, 0.0}));
    EXPECT_FALSE(solve_master_oracle(mp, z0, obj));
}

TEST(BendersSubproblem, OptimalityCutMatchesPrimalRecourse) {
    Gen g(1);
    const auto &prog = micro6_program();
    const auto &set = micro6_scenarios();
    int checked = 0;
    for (int trial = 0; trial < 40; ++trial) {
        const auto z0 = g.bits(prog.m);
        const auto s = static_cast<std::size_t>(g.integer(0, static_cast<int>(set.size()) - 1));
        const auto xi = dispatch::realize(prog, set.scenarios[s]);
        const auto primal = lp::solve(dispatch::recourse_lp(prog, dispatch::block_rhs(prog, xi, to_vector(z0))));
        const auto sub = solve_subproblem(prog, xi, z0, s);
        if (primal.status == lp::LpStatus::Optimal) {
            ASSERT_TRUE(std::holds_alternative<OptimalityCut>(sub));
            const auto &cut = std::get<OptimalityCut>(sub);
            EXPECT_NEAR(cut.value, primal.objective, 1e-6 * (1.0 + std::abs(primal.objective)));
            EXPECT_NEAR(cut.form(z0), cut.value, 1e-6 * (1.0 + std::abs(cut.value)));
            // Valid at every other first-stage point.
            for (std::uint64_t k = 0; k < (std::uint64_t{1} << prog.m); ++k) {
                const auto z = bits_from_index(k, prog.m);
                const auto p = lp::solve(dispatch::recourse_lp(prog, dispatch::block_rhs(prog, xi, to_vector(z))));
                if (p.status == lp::LpStatus::Optimal) {
                    EXPECT_LE(cut.form(z), p.objective + 1e-6 * (1.0 + std::abs(p.objective)));
                }
            }
            ++checked;
        } else {
            ASSERT_EQ(primal.status, lp::LpStatus::Infeasible);
            ASSERT_TRUE(std::holds_alternative<FeasibilityCut>(sub));
            const auto &cut = std::get<FeasibilityCut>(sub);
            EXPECT_GT(cut.form(z0), 1e-9);
            EXPECT_NEAR(cut.ray.cwiseAbs().maxCoeff(), 1.0, 1e-12);
        }
    }
    EXPECT_GT(checked, 0);
}

TEST(BendersSubproblem, OverloadedLineGivesViolatedFeasibilityCut) {
    dispatch::DispatchCase dc;
    dc.buses.push_back({"A", {0.0}});
    dc.buses.push_back({"B", {5.0}});
    dc.lines.push_back({"AB", 0, 1, 0.1, 2.0});
    dc.generators.push_back(gen("G", 0, 10.0, 1.0, true));
    const auto prog = dispatch::compile(dc);
    const auto sub = solve_subproblem(prog, VectorXd(0), {}, 0);
    ASSERT_TRUE(std::holds_alternative<FeasibilityCut>(sub));
    EXPECT_GT(std::get<FeasibilityCut>(sub).form(Bits{}), 0.0);
}

TEST(BendersProperty, FeasibilityCutsNeverExcludeAdmissiblePoints) {
    const auto &prog = micro6_program();
    const auto &set = micro6_scenarios();
    BendersConfig cfg;
    cfg.selection = cutsel::Backend::None;
    const auto r = run(prog, set, cfg);
    ASSERT_FALSE(r.feasibility_cuts.empty());
    for (std::uint64_t k = 0; k < (std::uint64_t{1} << prog.m); ++k) {
        const auto z0 = bits_from_index(k, prog.m);
        const auto ev = dispatch::evaluate_first_stage(prog, set, z0);
        if (!ev.feasible) continue;
        for (const auto &c : r.feasibility_cuts) {
            EXPECT_LE(c.form(z0), 1e-7) << k;
        }
        for (const auto &agg : r.aggregates) {
            EXPECT_LE(agg(z0), ev.expected_recourse + 1e-6 * (1.0 + ev.expected_recourse)) << k;
        }
    }
    for (const auto &t : r.infeasible_trials) {
        EXPECT_FALSE(dispatch::evaluate_first_stage(prog, set, t).feasible);
    }
}

TEST(BendersRun, HandCaseConverges) {
    const auto prog = dispatch::compile(hand_case());
    const auto set = uqae::generate_scenarios(hand_case().uncertainties(), {});
    ASSERT_EQ(set.size(), 2U);
    const auto r = run(prog, set);
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(r.stop_reason, "gap");
    EXPECT_NEAR(r.objective, 5.0, 1e-6);
    EXPECT_EQ(r.z0, Bits{1});
    EXPECT_EQ(r.infeasible_trials.size(), 1U);
    expect_bounds(r, true);
}

TEST(BendersRun, SingleScenario) {
    auto dc = hand_case();
    dc.res_units[0].distribution = uqae::ErrorDistribution::normal(0.5, 1e-3);
    const auto set = uqae::generate_scenarios(dc.uncertainties(), {});
    ASSERT_EQ(set.size(), 1U);
    const auto r = run(dispatch::compile(dc), set);
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.objective, 1.0, 1e-6);
    EXPECT_EQ(r.z0, Bits{0});
}

TEST(BendersRun, OracleMatchesExtensiveForm) {
    const auto r = run(micro6_program(), micro6_scenarios());
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.objective, micro6_optimum(), 1e-6);
    expect_bounds(r, true);
    const auto &last = r.trace.back();
    EXPECT_LE(last.upper - last.lower, 1e-6 * (1.0 + std::abs(last.upper)));
}

TEST(BendersRun, QuboExactFollowsOracle) {
    BendersConfig cfg;
    cfg.master = MasterBackend::QuboExact;
    cfg.encoding_check_bits = 22;
    const auto q = run(micro6_program(), micro6_scenarios(), cfg);
    const auto o = run(micro6_program(), micro6_scenarios());
    EXPECT_TRUE(q.converged);
    EXPECT_NEAR(q.objective, micro6_optimum(), 1e-6);
    ASSERT_EQ(q.trace.size(), o.trace.size());
    for (std::size_t i = 0; i < q.trace.size(); ++i) {
        EXPECT_EQ(q.trace[i].trial, o.trace[i].trial) << i;
        EXPECT_GT(q.trace[i].qubo_dimension, 0U);
        const auto &enc = q.trace[i].encoding;
        if (q.trace[i].qubo_dimension <= 22) {
            EXPECT_TRUE(enc.checked);
            EXPECT_TRUE(enc.ground_state_optimal) << i;
            EXPECT_TRUE(enc.feasible_energy_identity) << i;
        }
    }
    expect_bounds(q, true);
}

TEST(BendersRun, AnnealMasterReachesOptimum) {
    BendersConfig cfg;
    cfg.master = MasterBackend::QuboAnneal;
    cfg.anneal.seed = 5;
    const auto r = run(micro6_program(), micro6_scenarios(), cfg);
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.objective, micro6_optimum(), 1e-6);
}

TEST(BendersRun, QaoaOverCapFallsBackToAnneal) {
    BendersConfig cfg;
    cfg.master = MasterBackend::QuboQaoa;
    cfg.qaoa.qubit_cap = 2;
    const auto r = run(micro6_program(), micro6_scenarios(), cfg);
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.objective, micro6_optimum(), 1e-6);
    EXPECT_FALSE(r.notices.empty());
}

TEST(BendersRun, ScenarioOrderDoesNotMatter) {
    auto reversed = micro6_scenarios();
    std::reverse(reversed.scenarios.begin(), reversed.scenarios.end());
    const auto a = run(micro6_program(), micro6_scenarios());
    const auto b = run(micro6_program(), reversed);
    EXPECT_NEAR(a.objective, b.objective, 1e-6);
    EXPECT_EQ(a.z0, b.z0);
}

TEST(BendersRun, SelectionKeepsTheOptimum) {
    BendersConfig none;
    none.selection = cutsel::Backend::None;
    const auto all = run(micro6_program(), micro6_scenarios(), none);
    for (auto b : {cutsel::Backend::Greedy, cutsel::Backend::QuboExact, cutsel::Backend::QuboQaoa}) {
        BendersConfig cfg;
        cfg.selection = b;
        const auto r = run(micro6_program(), micro6_scenarios(), cfg);
        EXPECT_TRUE(r.converged);
        EXPECT_NEAR(r.objective, all.objective, 1e-6) << cutsel::to_string(b);
        EXPECT_LE(r.selected.size(), r.feasibility_cuts.size());
        for (const auto &t : r.infeasible_trials) {
            bool excluded = false;
            for (auto k : r.selected) excluded = excluded || r.feasibility_cuts[k].form(t) > 1e-9;
            EXPECT_TRUE(excluded);
        }
    }
    EXPECT_EQ(all.selected.size(), all.feasibility_cuts.size());
}

TEST(BendersRun, IterationCap) {
    BendersConfig cfg;
    cfg.max_iterations = 1;
    const auto r = run(micro6_program(), micro6_scenarios(), cfg);
    EXPECT_FALSE(r.converged);
    EXPECT_EQ(r.stop_reason, "iteration cap");
    EXPECT_EQ(r.iterations(), 1U);
}

TEST(BendersRun, NoNewCutsTermination) {
    BendersConfig cfg;
    cfg.termination = Termination::NoNewCuts;
    const auto r = run(micro6_program(), micro6_scenarios(), cfg);
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.objective, micro6_optimum(), 1e-6);
}

TEST(BendersRun, ThreadCountDoesNotChangeResult) {
    BendersConfig one, four;
    one.threads = 1;
    four.threads = 4;
    const auto a = run(micro6_program(), micro6_scenarios(), one);
    const auto b = run(micro6_program(), micro6_scenarios(), four);
    EXPECT_EQ(a.objective, b.objective);
    ASSERT_EQ(a.trace.size(), b.trace.size());
    for (std::size_t i = 0; i < a.trace.size(); ++i) {
        EXPECT_EQ(a.trace[i].lower, b.trace[i].lower);
    }
}

TEST(BendersRun, RejectsBadInput) {
    uqae::ScenarioSet empty;
    EXPECT_ANY_THROW(run(micro6_program(), empty));
    auto skewed = micro6_scenarios();
    skewed.scenarios[0].weight += 0.1;
    EXPECT_ANY_THROW(run(micro6_program(), skewed));
    BendersConfig cfg;
    cfg.max_iterations = 0;
    EXPECT_ANY_THROW(run(micro6_program(), micro6_scenarios(), cfg));
}
