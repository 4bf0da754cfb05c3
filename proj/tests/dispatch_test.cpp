#include <gtest/gtest.h>

#include <fstream>

#include <json.hpp>

#include "qsed/dispatch.hpp"
#include "support.hpp"

using namespace qsed;
using namespace qsed::dispatch;
using qsed::fixture::Gen;
using qsed::fixture::gen;
using qsed::fixture::hand_case;

namespace {

uqae::ScenarioSet two_scenarios(double w_low, double w_high) {
    uqae::ScenarioSet set;
    if (w_low > 0) set.scenarios.push_back({{-0.5}, w_low});
    if (w_high > 0) set.scenarios.push_back({{0.5}, w_high});
    return set;
}

uqae::ScenarioSet no_uncertainty() {
    uqae::ScenarioSet set;
    set.scenarios.push_back({{}, 1.0});
    return set;
}

nlohmann::json expected_micro6() {
    std::ifstream in(fixture::case_path("micro6.expected.json"));
    return nlohmann::json::parse(in);
}

} // namespace

TEST(DispatchExamples, SingleBusTenMegawatts) {
    DispatchCase dc;
    dc.buses.push_back({"B", {10.0}});
    dc.generators.push_back(gen("G", 0, 20.0, 3.0, true));
    const auto prog = compile(dc);
    EXPECT_EQ(prog.m, 0U);
    const auto ef = extensive_form(prog, no_uncertainty());
    ASSERT_TRUE(ef.feasible);
    EXPECT_NEAR(ef.objective, 30.0, 1e-9);
    const auto rep = decode_schedule(prog, ef.z0, ef.evaluation.scenarios[0].x);
    EXPECT_NEAR(rep.output_mw[0][0], 10.0, 1e-9);
}

TEST(DispatchExamples, OverloadedLineIsInfeasible) {
    DispatchCase dc;
    dc.buses.push_back({"A", {0.0}});
    dc.buses.push_back({"B", {5.0}});
    dc.lines.push_back({"AB", 0, 1, 0.1, 2.0});
    dc.generators.push_back(gen("G", 0, 10.0, 1.0, true));
    const auto ef = extensive_form(compile(dc), no_uncertainty());
    EXPECT_FALSE(ef.feasible);
    dc.lines[0].limit_mw = 5.0;
    const auto ok = extensive_form(compile(dc), no_uncertainty());
    ASSERT_TRUE(ok.feasible);
    EXPECT_NEAR(ok.objective, 5.0, 1e-9);
}

TEST(DispatchExamples, HandCaseOptimum) {
    const auto prog = compile(hand_case());
    ASSERT_EQ(prog.m, 1U);
    // z0 = 0 cannot cover the low-wind scenario; z0 = 1 costs 1 + 0.5 * 7 + 0.5 * 1.
    const auto ef = extensive_form(prog, two_scenarios(0.5, 0.5));
    ASSERT_TRUE(ef.feasible);
    EXPECT_NEAR(ef.objective, 5.0, 1e-9);
    EXPECT_EQ(ef.z0, Bits{1});
    const auto low = extensive_form(prog, two_scenarios(1.0, 0.0));
    EXPECT_NEAR(low.objective, 8.0, 1e-9);
    const auto high = extensive_form(prog, two_scenarios(0.0, 1.0));
    EXPECT_NEAR(high.objective, 1.0, 1e-9);
    EXPECT_EQ(high.z0, Bits{0});
}

TEST(DispatchExamples, Micro6DimensionsAndOptimum) {
    const auto expected = expected_micro6();
    const auto prog = compile(fixture::micro6());
    EXPECT_EQ(prog.m, expected["first_stage"].get<std::size_t>());
    EXPECT_EQ(prog.n, expected["second_stage"].get<std::size_t>());
    EXPECT_EQ(prog.h, expected["uncertain"].get<std::size_t>());
    EXPECT_EQ(prog.num_rows(), expected["rows"].get<std::size_t>());
    const auto set = uqae::generate_scenarios(fixture::micro6().uncertainties(), {});
    EXPECT_EQ(set.size(), expected["scenarios"].get<std::size_t>());
    const auto ef = extensive_form(prog, set);
    ASSERT_TRUE(ef.feasible);
    EXPECT_NEAR(ef.objective, expected["objective"].get<double>(), expected["objective_tolerance"].get<double>());
    std::string z;
    for (auto b : ef.z0) z += b ? '1' : '0';
    EXPECT_EQ(z, expected["z0"].get<std::string>());
}

TEST(DispatchExamples, MonolithicAgreesWithBlockwise) {
    const auto prog = compile(hand_case());
    const auto set = two_scenarios(0.3, 0.7);
    const auto a = extensive_form(prog, set);
    const auto b = extensive_form(prog, set, {.monolithic = true});
    ASSERT_TRUE(a.feasible && b.feasible);
    EXPECT_NEAR(a.objective, b.objective, 1e-9);
    EXPECT_EQ(a.z0, b.z0);
}

TEST(DispatchExamples, ExtensiveFormCaps) {
    const auto prog = compile(fixture::micro6());
    EXPECT_THROW(extensive_form(prog, no_uncertainty(), {.max_first_stage = 2}), std::length_error);
}

TEST(DispatchRes, ApplyErrorAndClamps) {
    ResUnit r;
    r.capacity_mw = 50.0;
    r.forecast_mw = {20.0, 45.0, 5.0};
    const auto out = apply_error(r, 0.25);
    EXPECT_DOUBLE_EQ(out[0], 32.5);
    EXPECT_DOUBLE_EQ(out[1], 50.0);
    EXPECT_DOUBLE_EQ(apply_error(r, -0.25)[2], 0.0);
}

TEST(DispatchRes, RealizeLayout) {
    const auto &dc = fixture::micro6();
    const auto prog = compile(dc);
    const auto xi = realize(prog, {{0.5, -0.5, 0.0}, 1.0});
    ASSERT_EQ(xi.size(), 6);
    EXPECT_DOUBLE_EQ(xi[0], 2.0);
    EXPECT_DOUBLE_EQ(xi[1], 2.0);
    EXPECT_DOUBLE_EQ(xi[2], 0.0);
    EXPECT_DOUBLE_EQ(xi[4], 1.0);
    EXPECT_THROW(realize(prog, {{0.5}, 1.0}), std::invalid_argument);
}

TEST(DispatchDecode, HandCaseSchedule) {
    const auto prog = compile(hand_case());
    const auto ef = extensive_form(prog, two_scenarios(1.0, 0.0));
    const auto rep = decode_schedule(prog, ef.z0, ef.evaluation.scenarios[0].x);
    EXPECT_EQ(rep.commitment[0][0], 1);
    EXPECT_EQ(rep.commitment[1][0], 1);
    EXPECT_NEAR(rep.output_mw[0][0], 3.0, 1e-9);
    EXPECT_NEAR(rep.output_mw[1][0], 2.0, 1e-9);
    EXPECT_NEAR(rep.no_load_cost, 1.0, 1e-12);
    EXPECT_NEAR(rep.energy_cost, 7.0, 1e-9);
    EXPECT_NEAR(rep.total_cost, 8.0, 1e-9);
    EXPECT_THROW(decode_schedule(prog, {}, ef.evaluation.scenarios[0].x), std::invalid_argument);
}

TEST(DispatchDecode, RandomPointsRoundTrip) {
    Gen g(21);
    const auto prog = compile(fixture::micro6());
    for (int trial = 0; trial < 50; ++trial) {
        const auto z0 = g.bits(prog.m);
        VectorXd x(static_cast<Eigen::Index>(prog.n));
        for (auto &v : x) v = g.uniform(0.0, 3.0);
        const auto rep = decode_schedule(prog, z0, x);
        EXPECT_NEAR(rep.first_stage_cost, prog.a.dot(to_vector(z0)), 1e-12);
        EXPECT_NEAR(rep.second_stage_cost, prog.b.dot(x), 1e-9);
        for (std::size_t j = 0; j < prog.n; ++j) {
            const auto &t = prog.second_stage[j];
            if (t.kind == static_cast<int>(SecondStageKind::Output)) {
                EXPECT_EQ(rep.output_mw[static_cast<std::size_t>(t.device)][static_cast<std::size_t>(t.hour)],
                          x[static_cast<Eigen::Index>(j)]);
            }
        }
        EXPECT_NEAR(expected_total(prog, z0, {x, x}, {0.5, 0.5}), rep.total_cost, 1e-9);
    }
}

TEST(DispatchProperty, FlowsCancelInSystemBalance) {
    for (const char *name : {"micro6.json", "ieee6_like.json"}) {
        const auto prog = compile(io::load_case(fixture::case_path(name)));
        for (int t = 0; t < prog.source.horizon; ++t) {
            VectorXd sum = VectorXd::Zero(static_cast<Eigen::Index>(prog.n));
            for (std::size_t i = 0; i < prog.num_rows(); ++i) {
                if (prog.rows[i].kind == RowKind::BalanceLower && prog.rows[i].hour == t) {
                    sum += prog.C.row(static_cast<Eigen::Index>(i)).transpose();
                }
            }
            for (std::size_t j = 0; j < prog.n; ++j) {
                const auto kind = static_cast<SecondStageKind>(prog.second_stage[j].kind);
                if (kind == SecondStageKind::AnglePos || kind == SecondStageKind::AngleNeg) {
                    EXPECT_NEAR(sum[static_cast<Eigen::Index>(j)], 0.0, 1e-9) << name;
                }
            }
        }
    }
}

TEST(DispatchProperty, RecourseSolutionsSatisfyBlocks) {
    Gen g(4);
    const auto prog = compile(fixture::micro6());
    const auto set = uqae::generate_scenarios(fixture::micro6().uncertainties(), {});
    for (int trial = 0; trial < 4; ++trial) {
        const auto z0 = g.bits(prog.m);
        const auto ev = evaluate_first_stage(prog, set, z0);
        for (std::size_t s = 0; s < set.size(); ++s) {
            const auto &sol = ev.scenarios[s];
            if (sol.status != lp::LpStatus::Optimal) continue;
            const VectorXd rhs = block_rhs(prog, realize(prog, set.scenarios[s]), to_vector(z0));
            EXPECT_GE((prog.C * sol.x - rhs).minCoeff(), -1e-7);
            EXPECT_GE(sol.x.minCoeff(), -1e-9);
        }
    }
}

TEST(DispatchProperty, MoreLoadNeverCostsLess) {
    Gen g(8);
    for (int trial = 0; trial < 30; ++trial) {
        auto dc = hand_case();
        dc.buses[0].load_mw[0] = g.uniform(0.0, 8.0);
        const auto set = two_scenarios(g.uniform(0.1, 0.9), 0.0);
        auto heavier = dc;
        heavier.buses[0].load_mw[0] += g.uniform(0.0, 3.0);
        auto mixed = set;
        mixed.scenarios.push_back({{0.5}, 1.0 - set.scenarios[0].weight});
        const auto base = extensive_form(compile(dc), mixed);
        const auto more = extensive_form(compile(heavier), mixed);
        ASSERT_TRUE(base.feasible);
        if (more.feasible) {
            EXPECT_GE(more.objective, base.objective - 1e-9);
        }
    }
}

TEST(DispatchProperty, StorageModesAreExclusive) {
    auto dc = io::load_case(fixture::case_path("ieee6_like.json"));
    dc.horizon = 1;
    for (auto &b : dc.buses) b.load_mw.resize(1);
    for (auto &r : dc.res_units) r.forecast_mw.resize(1);
    const auto prog = compile(dc);
    const long c = prog.first_stage_index(FirstStageKind::ChargeMode, 0, 0);
    const long e = prog.first_stage_index(FirstStageKind::DischargeMode, 0, 0);
    ASSERT_GE(c, 0);
    ASSERT_GE(e, 0);
    Bits z0(prog.m, 1);
    uqae::ScenarioSet set;
    set.scenarios.push_back({std::vector<double>(dc.res_units.size(), 0.0), 1.0});
    EXPECT_FALSE(evaluate_first_stage(prog, set, z0).feasible);
    z0[static_cast<std::size_t>(e)] = 0;
    EXPECT_TRUE(evaluate_first_stage(prog, set, z0).feasible);
}

TEST(DispatchValidation, MessagesNameTheElement) {
    auto expect_message = [](const DispatchCase &dc, const std::string &needle) {
        try {
            dc.validate();
            ADD_FAILURE() << "no error for " << needle;
        } catch (const std::invalid_argument &e) {
            EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
        }
    };
    auto dc = hand_case();
    dc.generators[1].p_min_mw = 20.0;
    expect_message(dc, "generator 1 'G2': p_min_mw exceeds p_max_mw");
    dc = hand_case();
    dc.res_units[0].forecast_mw = {5.0};
    expect_message(dc, "res 0 'W': forecast outside [0, capacity]");
    dc = hand_case();
    dc.buses[0].load_mw = {1.0, 2.0};
    expect_message(dc, "bus 0 'B': load_mw has 2 entries, expected 1");
    dc = hand_case();
    dc.buses.push_back({"island", {0.0}});
    expect_message(dc, "bus 1 is disconnected");
    dc = hand_case();
    dc.generators[0].bus = 3;
    expect_message(dc, "bus index 3 out of range");
}
