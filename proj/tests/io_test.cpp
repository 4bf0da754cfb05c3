#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qsed/io.hpp"
#include "support.hpp"

using namespace qsed;
using namespace qsed::io;
using qsed::fixture::case_path;

namespace {

std::string read_file(const std::filesystem::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string micro6_text() { return read_file(case_path("micro6.json")); }

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string &tag) {
        path_ = std::filesystem::temp_directory_path() / ("qsed_io_" + tag + "_" + std::to_string(counter_++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path &path() const { return path_; }

private:
    static inline int counter_ = 0;
    std::filesystem::path path_;
};

std::string error_of(const std::string &text) {
    try {
        parse_case(text);
    } catch (const CaseError &e) {
        return e.what();
    }
    return "";
}

RunConfig micro6_config(const std::filesystem::path &out) {
    RunConfig cfg;
    cfg.case_path = case_path("micro6.json");
    cfg.output_dir = out;
    return cfg;
}

} // namespace

TEST(IoCase, LoadsMicro6) {
    const auto dc = load_case(case_path("micro6.json"));
    EXPECT_EQ(dc.name, "micro6");
    EXPECT_EQ(dc.horizon, 2);
    EXPECT_EQ(dc.buses.size(), 6U);
    EXPECT_EQ(dc.lines.size(), 7U);
    EXPECT_EQ(dc.generators.size(), 2U);
    EXPECT_EQ(dc.storages.size(), 1U);
    EXPECT_EQ(dc.res_units.size(), 3U);
    EXPECT_EQ(dc.lines[0].from, 0U); // 1-based in the file
    EXPECT_DOUBLE_EQ(dc.generators[1].startup_cost, 3.0);
    EXPECT_EQ(dc.res_units[2].distribution.components.size(), 2U);
}

TEST(IoCase, LoadsIeee6Like) {
    EXPECT_NO_THROW(load_case(case_path("ieee6_like.json")));
}

TEST(IoCase, InvertedGeneratorLimitsNameTheGenerator) {
    auto j = nlohmann::json::parse(micro6_text());
    j["generators"][1]["p_min_mw"] = 5.0;
    const auto msg = error_of(j.dump());
    EXPECT_NE(msg.find("G2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("p_min_mw"), std::string::npos) << msg;
}

TEST(IoCase, UnknownFieldReportsPath) {
    auto j = nlohmann::json::parse(micro6_text());
    j["storages"][0]["capacity"] = 1.0;
    EXPECT_EQ(error_of(j.dump()).rfind("$.storages[0].capacity: unknown field", 0), 0U) << error_of(j.dump());
}

TEST(IoCase, MissingFieldReportsPath) {
    auto j = nlohmann::json::parse(micro6_text());
    j["lines"][2].erase("limit_mw");
    EXPECT_EQ(error_of(j.dump()).rfind("$.lines[2].limit_mw: missing required field", 0), 0U) << error_of(j.dump());
}

TEST(IoCase, SchemaAndSyntaxErrors) {
    auto j = nlohmann::json::parse(micro6_text());
    j["schema"] = "qsed-case/2";
    EXPECT_NE(error_of(j.dump()).find("$.schema"), std::string::npos);
    EXPECT_EQ(error_of("{ not json").rfind("$: parse error", 0), 0U);
    EXPECT_THROW(load_case("/nonexistent/case.json"), CaseError);
    j = nlohmann::json::parse(micro6_text());
    j["res_units"][0]["error"]["kind"] = "uniform";
    EXPECT_NE(error_of(j.dump()).find("$.res_units[0].error.kind"), std::string::npos);
    j = nlohmann::json::parse(micro6_text());
    j["generators"][0]["bus"] = 9;
    EXPECT_NE(error_of(j.dump()).find("$.generators[0].bus"), std::string::npos);
}

TEST(IoCase, JsonRoundTrip) {
    for (const auto *name : {"micro6.json", "ieee6_like.json"}) {
        const auto dc = load_case(case_path(name));
        const auto text = case_to_json(dc);
        const auto back = parse_case(text);
        EXPECT_EQ(case_to_json(back), text) << name;
        const auto a = dispatch::compile(dc);
        const auto b = dispatch::compile(back);
        EXPECT_EQ(a.m, b.m);
        EXPECT_EQ(a.n, b.n);
        EXPECT_TRUE(a.b == b.b);
        EXPECT_TRUE(a.C == b.C);
        EXPECT_TRUE(a.d == b.d);
    }
}

TEST(IoCsv, ByteIdenticalRoundTrip) {
    Table t;
    t.header = {"name", "value", "note"};
    t.rows = {{"a", "1", ""}, {"b,c", "-2.5", "say \"hi\""}, {"line\nbreak", "inf", "x"}};
    const auto text = to_csv(t);
    EXPECT_EQ(text, "name,value,note\na,1,\n\"b,c\",-2.5,\"say \"\"hi\"\"\"\n\"line\nbreak\",inf,x\n");
    const auto back = parse_csv(text);
    EXPECT_EQ(back.header, t.header);
    EXPECT_EQ(back.rows, t.rows);
    EXPECT_EQ(to_csv(back), text);
}

TEST(IoCsv, RaggedRowsRejected) {
    EXPECT_ANY_THROW(parse_csv(std::string("a,b\n1\n")));
    Table t;
    t.header = {"a"};
    t.rows = {{"1", "2"}};
    EXPECT_ANY_THROW(to_csv(t));
}

TEST(IoCsv, NumbersRoundTrip) {
    fixture::Gen g(1);
    for (int i = 0; i < 1000; ++i) {
        const double v = g.uniform(-1e6, 1e6) * std::pow(10.0, g.integer(-12, 12));
        EXPECT_EQ(parse_number(format_number(v)), v);
    }
    EXPECT_EQ(format_number(0.1), "0.1");
    EXPECT_EQ(format_number(3.0), "3");
    EXPECT_EQ(format_number(std::numeric_limits<double>::infinity()), "inf");
    EXPECT_EQ(format_number(-std::numeric_limits<double>::infinity()), "-inf");
    EXPECT_TRUE(std::isnan(parse_number(format_number(std::nan("")))));
    EXPECT_ANY_THROW(parse_number("1.5x"));
    EXPECT_EQ(bit_string({1, 0, 0}), "100");
}

TEST(IoTables, ScenarioAndHistogramTables) {
    const auto dc = load_case(case_path("micro6.json"));
    const auto set = uqae::generate_scenarios(dc.uncertainties(), {});
    const auto st = scenario_table(dc, set);
    EXPECT_EQ(st.header, (std::vector<std::string>{"scenario", "W2_error_pu", "W5_error_pu", "S6_error_pu", "weight"}));
    EXPECT_EQ(st.rows.size(), 64U);
    double total = 0.0;
    for (const auto &r : st.rows) total += parse_number(r.back());
    EXPECT_NEAR(total, 1.0, 1e-12);
    const auto ht = histogram_table(dc, set);
    EXPECT_EQ(ht.header, (std::vector<std::string>{"res", "index", "value", "weight"}));
    EXPECT_EQ(ht.rows.size(), 12U);
}

TEST(IoCommands, SolveWritesTraceWithMonotoneBound) {
    TempDir dir("solve");
    std::ostringstream log;
    EXPECT_EQ(cmd_solve(micro6_config(dir.path()), log), 0) << log.str();
    const auto trace = parse_csv(read_file(dir.path() / "trace.csv"));
    ASSERT_FALSE(trace.rows.empty());
    EXPECT_EQ(trace.header.front(), "iteration");
    double prev = -1e300;
    for (const auto &r : trace.rows) {
        const double lower = parse_number(r[1]);
        EXPECT_GE(lower, prev - 1e-9);
        prev = lower;
    }
    EXPECT_TRUE(std::filesystem::exists(dir.path() / "schedule.csv"));
    EXPECT_TRUE(std::filesystem::exists(dir.path() / "schedule.txt"));
    EXPECT_NE(log.str().find("converged"), std::string::npos);
}

TEST(IoCommands, SolveExitsOneWhenNotConverged) {
    TempDir dir("cap");
    auto cfg = micro6_config(dir.path());
    cfg.benders.max_iterations = 1;
    std::ostringstream log;
    EXPECT_EQ(cmd_solve(cfg, log), 1);
    EXPECT_TRUE(std::filesystem::exists(dir.path() / "trace.csv"));
}

TEST(IoCommands, SolveExitsTwoOnBadCase) {
    TempDir dir("bad");
    auto cfg = micro6_config(dir.path());
    cfg.case_path = dir.path() / "missing.json";
    std::ostringstream log;
    EXPECT_EQ(cmd_solve(cfg, log), 2);
    EXPECT_NE(log.str().find("error:"), std::string::npos);
    EXPECT_TRUE(std::filesystem::is_empty(dir.path()));
}

TEST(IoCommands, CompareQuboExactAgainstOracle) {
    TempDir dir("compare");
    auto cfg = micro6_config(dir.path());
    cfg.benders.master = benders::MasterBackend::QuboExact;
    std::ostringstream log;
    EXPECT_EQ(cmd_compare(cfg, log), 0) << log.str();
    const auto t = parse_csv(read_file(dir.path() / "compare.csv"));
    ASSERT_EQ(t.rows.size(), 2U);
    EXPECT_EQ(t.rows[0][0], "qubo-exact");
    EXPECT_EQ(t.rows[1][0], "ilp-oracle");
    EXPECT_LE(std::abs(parse_number(t.rows[0][1]) - parse_number(t.rows[1][1])), 1e-6);
}

TEST(IoCommands, RobustnessWithExactWeightsIsConstant) {
    TempDir dir("robust");
    auto cfg = micro6_config(dir.path());
    cfg.trials = 10;
    std::ostringstream log;
    EXPECT_EQ(cmd_robustness(cfg, log), 0) << log.str();
    const auto t = parse_csv(read_file(dir.path() / "robustness.csv"));
    ASSERT_EQ(t.rows.size(), 10U);
    for (const auto &r : t.rows) {
        EXPECT_EQ(r[2], t.rows[0][2]);
        EXPECT_EQ(r[4], "1");
    }
}

TEST(IoCommands, SampleWritesScenarioFiles) {
    TempDir dir("sample");
    auto cfg = micro6_config(dir.path());
    cfg.scenarios.kind = uqae::WeightMode::Sampled;
    cfg.scenarios.seed = 7;
    std::ostringstream log;
    EXPECT_EQ(cmd_sample(cfg, log), 0) << log.str();
    const auto a = read_file(dir.path() / "scenarios.csv");
    EXPECT_EQ(cmd_sample(cfg, log), 0);
    EXPECT_EQ(read_file(dir.path() / "scenarios.csv"), a);
    EXPECT_TRUE(std::filesystem::exists(dir.path() / "histogram.csv"));
}

TEST(IoOutput, EnvironmentOverridesDirectory) {
    TempDir dir("env");
    RunConfig cfg;
    cfg.output_dir = "/should/not/be/used";
    ::setenv("QSED_OUTPUT_DIR", dir.path().c_str(), 1);
    EXPECT_EQ(output_directory(cfg), dir.path());
    ::unsetenv("QSED_OUTPUT_DIR");
    EXPECT_EQ(output_directory(cfg), std::filesystem::path("/should/not/be/used"));
}

TEST(IoOutput, GuardRemovesUncommittedFiles) {
    TempDir dir("guard");
    {
        OutputGuard g;
        g.write(dir.path() / "a.txt", "x");
        EXPECT_TRUE(std::filesystem::exists(dir.path() / "a.txt"));
    }
    EXPECT_FALSE(std::filesystem::exists(dir.path() / "a.txt"));
    {
        OutputGuard g;
        g.write(dir.path() / "sub" / "b.txt", "y");
        g.commit();
    }
    EXPECT_EQ(read_file(dir.path() / "sub" / "b.txt"), "y");
}

TEST(IoConfig, Validation) {
    RunConfig cfg;
    cfg.benders.max_iterations = 0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.trials = 0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
}
