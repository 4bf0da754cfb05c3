#pragma once

// QUBO minimization: QAOA on the statevector simulator, exhaustive search and
// simulated annealing.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "qsed/linalg.hpp"
#include "qsed/qsim.hpp"
#include "qsed/qubo.hpp"

namespace qsed::qaoa {

/// E(s) = offset + h^T s + sum_{i<j} J_ij s_i s_j over spins s = 1 - 2x.
struct Ising {
    VectorXd h;
    MatrixXd j; ///< strictly upper triangular
    double offset = 0.0;

    std::size_t dimension() const { return static_cast<std::size_t>(h.size()); }
    /// sum |h| + sum |J|.
    double scale() const;
};

Ising to_ising(const qubo::Qubo &q);

/// Energy of every basis state (little-endian index), from the Ising form.
std::vector<double> energy_table(const Ising &is);

struct QaoaConfig {
    int depth = 3;
    int restarts = 8;
    int sweeps = 2;
    int golden_iterations = 10;
    /// Shots per expectation estimate; 0 selects exact expectation.
    std::size_t shots = 0;
    /// Samples drawn at every evaluation and kept as observations.
    std::size_t eval_samples = 16;
    std::size_t final_shots = 1024;
    std::uint64_t seed = 0;
    int qubit_cap = 20;
    bool record_diagnostics = false;

    void validate() const;
};

/// Angles are the raw circuit angles: cost layer exp(-i gamma E), mixer RX(2 beta).
qsim::Circuit build_circuit(const qubo::Qubo &q, const std::vector<double> &gammas,
                            const std::vector<double> &betas);

struct Evaluation {
    int restart = 0;
    std::size_t step = 0;
    std::vector<double> gammas;
    std::vector<double> betas;
    double expectation = 0.0;
    /// Lowest bit-string energy observed so far.
    double best_so_far = 0.0;
};

struct QaoaResult {
    Bits bits;
    double energy = 0.0;
    double best_expectation = 0.0;
    std::vector<double> gammas;
    std::vector<double> betas;
    std::size_t evaluations = 0;
    std::size_t samples = 0;
    std::vector<Evaluation> diagnostics;
};

/// Coordinate-wise golden-section sweeps over (gamma, beta) with restarts.
/// Returns the lowest-energy bit-string observed in any evaluation or in
/// final sampling, ties to the lowest binary value.
QaoaResult solve_qaoa(const qubo::Qubo &q, const QaoaConfig &cfg);

/// CSV with header restart,step,gammas,betas,expectation,best_so_far.
void write_diagnostics(std::ostream &os, const QaoaResult &r);

struct Minimum {
    Bits bits;
    double energy = 0.0;
};

/// Exhaustive minimum for dimension <= 24, ties to the lowest binary value.
Minimum solve_exact(const qubo::Qubo &q);

/// Exact minimum exploiting register structure: decision, value and cover bits
/// are enumerated and each slack register is minimized on its own. Requires
/// no coupling between distinct slack registers; falls back to solve_exact when
/// the roles do not give such a split.
Minimum solve_exact_structured(const qubo::Qubo &q);

struct AnnealConfig {
    int restarts = 20;
    int sweeps = 2000;
    /// 0 derives the temperatures from the coefficient scale.
    double t_start = 0.0;
    double t_end = 0.0;
    std::uint64_t seed = 0;
};

/// Single-flip Metropolis with a geometric schedule; best visited state.
Minimum solve_anneal(const qubo::Qubo &q, const AnnealConfig &cfg);

} // namespace qsed::qaoa
