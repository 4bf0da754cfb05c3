#pragma once

// Renewables-rich dispatch case and its compilation into the two-stage form
//   min a^T z0 + sum_s p_s b^T x_s
//   s.t. B z0 + C x_s >= d + A xi_s,  x_s >= 0,  z0 binary.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qsed/linalg.hpp"
#include "qsed/lp.hpp"
#include "qsed/uqae.hpp"

namespace qsed::dispatch {

struct Bus {
    std::string name;
    std::vector<double> load_mw; ///< per hour
};

struct Line {
    std::string name;
    int from = 0; ///< bus index
    int to = 0;
    double reactance_pu = 0.1;
    double limit_mw = 0.0;
};

struct Generator {
    std::string name;
    int bus = 0;
    double p_min_mw = 0.0;
    double p_max_mw = 0.0;
    double ramp_mw_per_h = 0.0;
    double startup_cost = 0.0;    ///< $
    double no_load_cost = 0.0;    ///< $/h while committed
    double marginal_cost = 0.0;   ///< $/MWh
    bool initially_on = false;
    bool must_run = false;
    std::optional<double> initial_output_mw;
};

struct Storage {
    std::string name;
    int bus = 0;
    double energy_mwh = 0.0;
    double soc_min = 0.0; ///< fraction of energy capacity
    double soc_max = 1.0;
    double charge_max_mw = 0.0;
    double discharge_max_mw = 0.0;
    double charge_cost = 0.0;    ///< $/MWh
    double discharge_cost = 0.0; ///< $/MWh
    double round_trip_efficiency = 1.0;
    double initial_soc = 0.5; ///< fraction
    /// Charge-mode / discharge-mode binaries per hour in the first stage.
    bool mode_binaries = false;
};

struct ResUnit {
    std::string name;
    int bus = 0;
    double capacity_mw = 0.0;
    std::vector<double> forecast_mw; ///< per hour
    uqae::ErrorDistribution distribution;
    uqae::GridEncoding encoding;
};

struct DispatchCase {
    std::string name;
    int horizon = 1;
    double base_mva = 100.0;
    std::vector<Bus> buses;
    std::vector<Line> lines;
    std::vector<Generator> generators;
    std::vector<Storage> storages;
    std::vector<ResUnit> res_units;

    /// Throws std::invalid_argument naming the offending element.
    void validate() const;
    std::vector<uqae::ResUncertainty> uncertainties() const;
};

enum class FirstStageKind { Commit, Startup, ChargeMode, DischargeMode };
enum class SecondStageKind { Output, Charge, Discharge, Soc, Curtail, AnglePos, AngleNeg };
enum class RowKind {
    BalanceLower,   ///< injection >= load
    BalanceUpper,   ///< -injection >= -load
    FlowLower,
    FlowUpper,
    CurtailLimit,
    OutputMin,
    OutputMax,
    RampUp,
    RampDown,
    SocDynamicsLower,
    SocDynamicsUpper,
    SocMin,
    SocMax,
    ChargeLimit,
    DischargeLimit,
    ModeExclusive,
    StartupLink,
};

struct VarTag {
    int kind = 0; ///< FirstStageKind or SecondStageKind value
    int device = 0;
    int hour = 0;
};

struct RowTag {
    RowKind kind = RowKind::BalanceLower;
    int element = 0; ///< bus, line, generator, storage or RES index
    int hour = 0;
};

const char *to_string(RowKind kind);

struct TwoStageProgram {
    std::size_t m = 0; ///< first-stage binaries
    std::size_t n = 0; ///< second-stage continuous variables
    std::size_t h = 0; ///< uncertainty dimension (RES x hour)
    VectorXd a;
    VectorXd b;
    MatrixXd B;
    MatrixXd C;
    VectorXd d;
    MatrixXd A;
    std::vector<VarTag> first_stage;
    std::vector<VarTag> second_stage;
    std::vector<RowTag> rows;
    DispatchCase source;

    std::size_t num_rows() const { return static_cast<std::size_t>(d.size()); }
    std::string first_stage_name(std::size_t i) const;
    std::string second_stage_name(std::size_t j) const;

    /// Index of the first-stage variable, or -1 when absent.
    long first_stage_index(FirstStageKind kind, int device, int hour) const;
    long second_stage_index(SecondStageKind kind, int device, int hour) const;
};

TwoStageProgram compile(const DispatchCase &dc);

/// clamp(forecast_t + zeta * capacity, 0, capacity) per hour.
std::vector<double> apply_error(const ResUnit &res, double zeta);

/// Uncertainty vector xi (index res * T + hour) for one scenario.
VectorXd realize(const TwoStageProgram &prog, const uqae::Scenario &scenario);

/// rhs of the scenario block at a first-stage point: d + A xi - B z0.
VectorXd block_rhs(const TwoStageProgram &prog, const VectorXd &xi, const VectorXd &z0);

/// Primal recourse LP: min b^T x s.t. C x >= rhs, x >= 0.
lp::LinearProgram recourse_lp(const TwoStageProgram &prog, const VectorXd &rhs);

struct ScenarioSolution {
    lp::LpStatus status = lp::LpStatus::Failed;
    double cost = 0.0;
    VectorXd x;
};

struct FirstStageEvaluation {
    bool feasible = false;
    double first_stage_cost = 0.0;
    double expected_recourse = 0.0;
    double total = 0.0;
    std::vector<ScenarioSolution> scenarios;
};

/// Solves every scenario block at a fixed z0.
FirstStageEvaluation evaluate_first_stage(const TwoStageProgram &prog, const uqae::ScenarioSet &set,
                                          const Bits &z0);

struct ExtensiveFormOptions {
    std::size_t max_first_stage = 20;
    /// Cap on S * n.
    std::size_t max_size = 2'000'000;
    /// Solve all scenario blocks at a z0 as one LP rather than block by block.
    bool monolithic = false;
};

struct ExtensiveFormResult {
    bool feasible = false;
    double objective = 0.0;
    Bits z0;
    FirstStageEvaluation evaluation;
    std::size_t assignments_checked = 0;
};

/// Ground-truth optimum by enumerating z0 in {0,1}^m with LPs per assignment.
/// Ties go to the lowest binary value of z0 (z0[0] least significant).
ExtensiveFormResult extensive_form(const TwoStageProgram &prog, const uqae::ScenarioSet &set,
                                   const ExtensiveFormOptions &opts = {});

struct ScheduleReport {
    std::vector<std::vector<int>> commitment;         ///< [generator][hour]
    std::vector<std::vector<double>> output_mw;       ///< [generator][hour]
    std::vector<std::vector<double>> storage_mw;      ///< [storage][hour], charging negative
    std::vector<std::vector<double>> soc_mwh;         ///< [storage][hour]
    std::vector<std::vector<double>> curtail_mw;      ///< [res][hour]
    std::vector<std::vector<double>> flow_mw;         ///< [line][hour]
    double startup_cost = 0.0;
    double no_load_cost = 0.0;
    double energy_cost = 0.0;   ///< generator marginal cost
    double storage_cost = 0.0;  ///< charge + discharge cost
    double first_stage_cost = 0.0;
    double second_stage_cost = 0.0;
    double total_cost = 0.0;
};

ScheduleReport decode_schedule(const TwoStageProgram &prog, const Bits &z0, const VectorXd &x);

/// Probability-weighted total over per-scenario schedules.
double expected_total(const TwoStageProgram &prog, const Bits &z0, const std::vector<VectorXd> &xs,
                      const std::vector<double> &weights);

} // namespace qsed::dispatch
