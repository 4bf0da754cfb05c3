#pragma once

// Case files, CSV tables, run configuration and the command drivers behind the
// qsed executable.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "qsed/benders.hpp"
#include "qsed/dispatch.hpp"

namespace qsed::io {

inline constexpr const char *kCaseSchema = "qsed-case/1";

/// Parse, schema or invariant failure; the message starts with the field path.
class CaseError : public std::runtime_error {
public:
    CaseError(const std::string &path, const std::string &what)
        : std::runtime_error(path + ": " + what), path_(path) {}
    const std::string &path() const { return path_; }

private:
    std::string path_;
};

dispatch::DispatchCase parse_case(const std::string &text);
dispatch::DispatchCase load_case(const std::filesystem::path &path);
std::string case_to_json(const dispatch::DispatchCase &dc);

/// Header plus rows of raw cells.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

/// Comma separated, LF line ends, cells quoted only when they hold a comma,
/// quote or line break.
void write_csv(std::ostream &os, const Table &t);
std::string to_csv(const Table &t);
Table parse_csv(std::istream &is);
Table parse_csv(const std::string &text);

/// Shortest decimal text that reads back to the same double; "inf", "-inf", "nan".
std::string format_number(double v);
double parse_number(const std::string &s);
std::string bit_string(const Bits &bits);

Table scenario_table(const dispatch::DispatchCase &dc, const uqae::ScenarioSet &set);
/// res,index,value,weight
Table histogram_table(const dispatch::DispatchCase &dc, const uqae::ScenarioSet &set);
/// iteration,lower,upper,trial,trial_feasible,optimality_cuts,aggregates,
/// feasibility_new,feasibility_total,feasibility_selected,master,qubo_dimension
Table trace_table(const benders::BendersResult &r);
/// quantity,device,hour,value
Table schedule_table(const dispatch::DispatchCase &dc, const dispatch::ScheduleReport &rep);
void write_schedule_text(std::ostream &os, const dispatch::DispatchCase &dc, const dispatch::ScheduleReport &rep);

struct RunConfig {
    std::filesystem::path case_path;
    uqae::ScenarioMode scenarios;
    benders::BendersConfig benders;
    std::filesystem::path output_dir = ".";
    /// compare: maximum accepted objective difference.
    double compare_tolerance = 1e-6;
    /// compare: backend of the reference run.
    benders::MasterBackend reference = benders::MasterBackend::IlpOracle;
    /// robustness: number of seeded end-to-end runs.
    std::size_t trials = 10;

    void validate() const;
};

/// QSED_OUTPUT_DIR overrides the configured output directory.
std::filesystem::path output_directory(const RunConfig &cfg);

/// Files registered here are deleted unless commit() is called.
class OutputGuard {
public:
    OutputGuard() = default;
    OutputGuard(const OutputGuard &) = delete;
    OutputGuard &operator=(const OutputGuard &) = delete;
    ~OutputGuard();

    void write(const std::filesystem::path &path, const std::string &content);
    void commit() { committed_ = true; }
    const std::vector<std::filesystem::path> &files() const { return files_; }

private:
    std::vector<std::filesystem::path> files_;
    bool committed_ = false;
};

struct SolveOutcome {
    benders::BendersResult result;
    dispatch::ScheduleReport schedule;
    uqae::ScenarioSet scenarios;
};

/// Compile, generate scenarios and run Benders; no files.
SolveOutcome solve_case(const dispatch::DispatchCase &dc, const uqae::ScenarioMode &mode,
                        const benders::BendersConfig &cfg);

/// Each command returns the process exit status and logs to `log`.
/// sample: scenarios.csv, histogram.csv.
int cmd_sample(const RunConfig &cfg, std::ostream &log);
/// solve: trace.csv, schedule.csv, schedule.txt. Exit 0 iff converged.
int cmd_solve(const RunConfig &cfg, std::ostream &log);
/// compare: compare.csv with one row per backend; exit 0 iff both converged
/// and the objectives agree within the tolerance.
int cmd_compare(const RunConfig &cfg, std::ostream &log);
/// robustness: robustness.csv with one row per trial; exit 0 iff every run converged.
int cmd_robustness(const RunConfig &cfg, std::ostream &log);

} // namespace qsed::io
