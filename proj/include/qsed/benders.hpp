#pragma once

// Multi-cut Benders decomposition with aggregated optimality cuts, per-scenario
// feasibility cuts, set-cover cut selection and pluggable master solvers.

#include <cstddef>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "qsed/cutsel.hpp"
#include "qsed/dispatch.hpp"
#include "qsed/qaoa.hpp"
#include "qsed/qubo.hpp"
#include "qsed/uqae.hpp"

namespace qsed::benders {

struct OptimalityCut {
    std::size_t scenario = 0;
    VectorXd dual;
    qubo::AffineForm form; ///< (d + A xi)^T u - (B^T u)^T z0
    double value = 0.0;    ///< dual objective at the trial
};

struct FeasibilityCut {
    std::size_t scenario = 0;
    std::size_t trial = 0; ///< iteration that produced it
    VectorXd ray;          ///< unit infinity norm
    qubo::AffineForm form; ///< form(z0) <= 0 for admissible z0
};

using SubproblemResult = std::variant<OptimalityCut, FeasibilityCut>;

/// Dual recourse LP: max (d + A xi - B z0)^T u  s.t.  C^T u <= b, u >= 0.
SubproblemResult solve_subproblem(const dispatch::TwoStageProgram &prog, const VectorXd &xi, const Bits &z0,
                                  std::size_t scenario, std::size_t trial = 0);

/// sum_s p_s * cut_s. Throws when a scenario has no cut.
qubo::AffineForm aggregate_optimality(const std::vector<OptimalityCut> &cuts, const std::vector<double> &weights);

enum class MasterBackend { IlpOracle, QuboExact, QuboQaoa, QuboAnneal };
enum class Termination { Gap, NoNewCuts };

const char *to_string(MasterBackend b);
MasterBackend master_from_string(const std::string &s);

struct BendersConfig {
    MasterBackend master = MasterBackend::IlpOracle;
    cutsel::Backend selection = cutsel::Backend::Greedy;
    Termination termination = Termination::Gap;
    /// Gap tolerance relative to 1 + |UB|.
    double epsilon = 1e-6;
    std::size_t max_iterations = 50;
    qubo::WidthOptions widths;
    qaoa::QaoaConfig qaoa;
    qaoa::AnnealConfig anneal;
    /// Worker threads for subproblems; 0 uses the hardware concurrency.
    unsigned threads = 0;
    /// Cross-check each QUBO master of at most this many bits against the
    /// discretized master ILP; 0 disables.
    std::size_t encoding_check_bits = 0;
};

struct EncodingCheck {
    bool checked = false;
    bool ground_state_optimal = false; ///< ground state decodes to an ILP optimum, equal objective
    bool feasible_energy_identity = false; ///< an ILP-optimal assignment has energy equal to H1
    double ground_energy = 0.0;
    double ilp_objective = 0.0;
};

struct IterationRecord {
    std::size_t iteration = 0;
    Bits trial;
    double lower = 0.0;
    double upper = std::numeric_limits<double>::infinity();
    bool trial_feasible = false;
    std::size_t optimality_cuts = 0;  ///< per-scenario cuts generated this iteration
    std::size_t aggregates = 0;       ///< aggregated cuts in the master after this iteration
    std::size_t feasibility_new = 0;  ///< feasibility cuts generated this iteration
    std::size_t feasibility_total = 0;
    std::size_t feasibility_selected = 0;
    std::string master_backend;
    std::size_t qubo_dimension = 0;
    double snap_distance = 0.0;
    double master_seconds = 0.0;
    double subproblem_seconds = 0.0;
    double selection_seconds = 0.0;
    EncodingCheck encoding;
};

struct BendersResult {
    bool converged = false;
    std::string stop_reason;
    Bits z0;
    double objective = std::numeric_limits<double>::infinity(); ///< best upper bound
    double lower = -std::numeric_limits<double>::infinity();
    std::vector<IterationRecord> trace;
    std::vector<qubo::AffineForm> aggregates;
    std::vector<FeasibilityCut> feasibility_cuts;
    std::vector<std::size_t> selected; ///< indices into feasibility_cuts
    std::vector<Bits> infeasible_trials;
    std::vector<std::string> notices;

    std::size_t iterations() const { return trace.size(); }
};

BendersResult run(const dispatch::TwoStageProgram &prog, const uqae::ScenarioSet &scenarios,
                  const BendersConfig &cfg = {});

/// Exact master by enumeration: eta = max(0, max_k g_k(z0)) subject to every
/// feasibility cut, ties to the lowest z0 value. Returns false when no z0 is admissible.
bool solve_master_oracle(const qubo::MasterProblem &mp, Bits &z0, double &objective);

} // namespace qsed::benders
