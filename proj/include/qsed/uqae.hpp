#pragma once

// Uncertainty characterization for renewable prediction errors: fixed-point
// grid encoding, range unification onto [0, 1), amplitude-estimation circuits
// and weighted scenario generation.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "qsed/linalg.hpp"
#include "qsed/qsim.hpp"

namespace qsed::uqae {

/// Signed fixed-point grid. Value qubits carry weights 2^j for
/// j = -m1..n1 (n1 + m1 + 1 qubits); the grid is shifted by
/// bias = 2^n1 - 2^(-m1-1) so it is symmetric about zero with step 2^-m1.
struct GridEncoding {
    int m1 = 0;
    int n1 = 0;

    int value_qubits() const { return n1 + m1 + 1; }
    std::size_t grid_size() const { return std::size_t{1} << value_qubits(); }
    double step() const;
    double bias() const;
    /// Denominator of the unification map, 2^(n1+1).
    double span() const;
    /// Grid value of a little-endian basis index of the value register.
    double value_at(std::uint64_t index) const;
    std::vector<double> grid() const;
    void validate() const;
};

double grid_value(const Bits &bits, const GridEncoding &enc);
double unify(double zeta, const GridEncoding &enc);
double de_unify(double unified, const GridEncoding &enc);

struct NormalComponent {
    double weight = 1.0;
    double mean = 0.0;
    double stddev = 1.0;
};

/// Normal or Gaussian-mixture error law (a Normal is a one-component mixture).
struct ErrorDistribution {
    std::vector<NormalComponent> components;

    static ErrorDistribution normal(double mean, double stddev);
    static ErrorDistribution mixture(std::vector<NormalComponent> components);

    bool is_normal() const { return components.size() == 1; }
    double cdf(double x) const;
    double pdf(double x) const;
    void validate() const;
};

/// Cell-mass probabilities over the grid, truncated to the grid range and
/// renormalized.
std::vector<double> discretize_distribution(const ErrorDistribution &dist, const GridEncoding &enc);

/// Exact mean of the unified variable, sum_z P(z) * unify(zeta(z)).
double unified_mean(const std::vector<double> &probs, const GridEncoding &enc);

/// A = R (P x I) over value_qubits + 1 qubits; the ancilla is the top qubit.
qsim::Circuit build_preparation(const std::vector<double> &probs, const GridEncoding &enc);
qsim::Circuit build_preparation(const ErrorDistribution &dist, const GridEncoding &enc);

/// Q = A S0 A^-1 S_chi with S_chi marking ancilla |1> and S0 reflecting about |0...0>.
qsim::Circuit grover_operator(const qsim::Circuit &preparation, int ancilla);

enum class EstimationMode { ExactProbabilities, Sampled };

struct AmplitudeEstimate {
    double estimate = 0.0;           ///< sin^2(theta_hat)
    double theta = 0.0;              ///< maximum-likelihood angle in [0, pi/2]
    std::vector<std::size_t> powers; ///< Grover applications per round
    std::vector<double> hit_fraction;
    std::size_t shots = 0;
};

/// Maximum-likelihood amplitude estimation with the schedule
/// Q^(2^0), ..., Q^(2^(a-1)) followed by ancilla measurement.
AmplitudeEstimate estimate_amplitude(const qsim::Circuit &preparation, int ancilla, int a,
                                     EstimationMode mode, std::size_t shots, std::uint64_t seed);

AmplitudeEstimate estimate_mean(const ErrorDistribution &dist, const GridEncoding &enc, int a,
                                EstimationMode mode, std::size_t shots, std::uint64_t seed);

/// Side-by-side accuracy of amplitude estimation and plain Monte Carlo with
/// 2^(a+1) classical draws.
struct MonteCarloComparison {
    double exact = 0.0;
    double uqae_estimate = 0.0;
    double uqae_error = 0.0;
    double mc_estimate = 0.0;
    double mc_error = 0.0;
    std::size_t mc_draws = 0;
};

MonteCarloComparison compare_with_monte_carlo(const ErrorDistribution &dist, const GridEncoding &enc,
                                              int a, EstimationMode mode, std::size_t shots,
                                              std::uint64_t seed);

struct ResUncertainty {
    ErrorDistribution distribution;
    GridEncoding encoding;
};

enum class WeightMode { Exact, Sampled };

struct ScenarioMode {
    WeightMode kind = WeightMode::Exact;
    std::size_t shots = 512;
    std::uint64_t seed = 0;
};

struct Scenario {
    std::vector<double> errors; ///< per-RES grid value (per unit of capacity)
    double weight = 0.0;
};

struct ScenarioSet {
    std::vector<std::vector<double>> per_res_values;
    /// Exact grid probabilities or measured marginal frequencies.
    std::vector<std::vector<double>> per_res_weights;
    std::vector<Scenario> scenarios;
    ScenarioMode mode;

    std::size_t size() const { return scenarios.size(); }
    double total_weight() const;
};

/// Seed for the `index`-th independent stream derived from `master`
/// (one splitmix64 step over master + golden-ratio * (index + 1)).
std::uint64_t split_seed(std::uint64_t master, std::uint64_t index);

/// Full Cartesian product of per-RES grids (RES 0 varies slowest). Sampled
/// weights come from measuring each RES value register `shots` times and
/// counting joint outcomes. Combinations with zero weight (never observed, or
/// exactly zero probability) are dropped.
ScenarioSet generate_scenarios(const std::vector<ResUncertainty> &res, const ScenarioMode &mode,
                               std::size_t cap = 1'000'000);

} // namespace qsed::uqae
