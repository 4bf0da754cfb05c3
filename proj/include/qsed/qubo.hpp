#pragma once

// Quadratic unconstrained binary forms for the Benders master problem and for
// feasibility-cut set cover.
//
//   energy(x) = x^T Q x + c^T x + offset,   Q symmetric with zero diagonal.

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "qsed/linalg.hpp"

namespace qsed::qubo {

enum class Role { Decision, Value, OptimalitySlack, FeasibilitySlack, Cover, CoverSlack };

const char *to_string(Role role);

struct VarRole {
    Role role = Role::Decision;
    int group = 0;       ///< first-stage index, cut index, cover column or row
    double weight = 1.0; ///< bit weight 2^i for register bits, 1 otherwise
};

struct Qubo {
    MatrixXd quadratic;
    VectorXd linear;
    double offset = 0.0;
    std::vector<VarRole> roles;

    explicit Qubo(std::size_t dimension = 0);

    std::size_t dimension() const { return static_cast<std::size_t>(linear.size()); }
    /// Adds lambda * (sum_k w_k x_{i_k} + constant)^2 with x^2 = x applied.
    void add_square(const std::vector<std::pair<std::size_t, double>> &terms, double constant, double lambda);
    void add_linear(std::size_t i, double value) { linear[static_cast<Eigen::Index>(i)] += value; }
    /// Adds value * x_i x_j (i != j) split symmetrically.
    void add_coupling(std::size_t i, std::size_t j, double value);
    bool symmetric(double tol = 1e-12) const;
};

double energy(const Qubo &q, const Bits &bits);

/// c + coeffs^T z over binary z.
struct AffineForm {
    double constant = 0.0;
    VectorXd coeffs;

    double operator()(const VectorXd &z) const { return constant + coeffs.dot(z); }
    double operator()(const Bits &z) const { return (*this)(to_vector(z)); }
    double min_over_binary() const;
    double max_over_binary() const;
};

/// Master integer program: min a^T z0 + eta subject to
///   eta >= g_k(z0) for every aggregated optimality cut,
///   f_k(z0) <= 0 for every selected feasibility cut,
/// z0 binary, eta a non-negative multiple of the register resolution.
struct MasterProblem {
    VectorXd a;
    std::vector<AffineForm> optimality;
    std::vector<AffineForm> feasibility;

    std::size_t m() const { return static_cast<std::size_t>(a.size()); }
};

/// Binary register with weights 2^i for i = -M..N.
struct Register {
    int n = 0;
    int m = 0;

    std::size_t bits() const { return static_cast<std::size_t>(n + m + 1); }
    double resolution() const;
    double max_value() const;
    double weight(std::size_t bit) const;
};

struct WidthOptions {
    /// Coarsest accepted resolution when coefficients are not dyadic; a power of two.
    double resolution_floor = 0.25;
};

struct MasterWidths {
    Register eta;         ///< N2, M2
    Register opt_slack;   ///< N3, M3
    Register fea_slack;   ///< N4, M4
    double resolution = 1.0;
    /// Largest distance a coefficient moved when snapped to the resolution grid.
    double snap_distance = 0.0;
};

/// Widest register starting at 2^-m that covers [0, range].
Register covering_register(double range, int m);

/// Coefficient resolution: the largest 2^-M <= 1 under which every constant and
/// coefficient is an exact multiple, or the floor when none is.
double choose_resolution(const MasterProblem &mp, const WidthOptions &opts = {});

AffineForm snap(const AffineForm &f, double resolution);
MasterProblem snap(const MasterProblem &mp, double resolution, double *distance = nullptr);

/// Widths for the snapped problem: eta spans [0, max_k max g_k], aggregate
/// slacks span [0, eta_hi - min_k min g_k], feasibility slacks span
/// [0, -min_k min f_k], all by interval arithmetic over binary z0.
MasterWidths choose_widths(const MasterProblem &mp, const WidthOptions &opts = {});

struct Penalties {
    double lambda1 = 1.0;
    double lambda2 = 1.0;
    double lambda3 = 1.0;
};

/// max(1, 2 * spread / min_violation^2).
double penalty_rule(double spread, double min_violation);

/// lambda1 = lambda2 from the H1 spread over every bit-vector and the squared resolution.
Penalties choose_penalties(const MasterProblem &mp, const MasterWidths &widths);

struct MasterLayout {
    std::size_t m = 0;
    std::size_t eta_offset = 0;
    std::vector<std::size_t> opt_slack_offset;
    std::vector<std::size_t> fea_slack_offset;
    std::size_t dimension = 0;
};

MasterLayout master_layout(const MasterProblem &mp, const MasterWidths &widths);

/// Layout [z0 | eta bits | slack per aggregate | slack per feasibility cut].
/// The problem must already be on the resolution grid (see snap). Throws
/// std::overflow_error when a register cannot hold its required range.
Qubo encode_master(const MasterProblem &snapped, const MasterWidths &widths, const Penalties &penalties);

struct MasterDecoded {
    Bits z0;
    double eta = 0.0;
    double objective = 0.0; ///< a^T z0 + eta
};

MasterDecoded decode_master(const MasterProblem &mp, const MasterWidths &widths, const Bits &bits);

struct MasterIlpSolution {
    bool feasible = false;
    Bits z0;
    double eta = 0.0;
    double objective = 0.0;
};

/// Exhaustive optimum of the discretized master integer program (eta on the
/// resolution grid within the eta register), ties to the lowest z0 value.
MasterIlpSolution solve_master_ilp(const MasterProblem &snapped, const MasterWidths &widths);

using CoverMatrix = std::vector<std::vector<std::uint8_t>>;

struct CoverWidths {
    Register slack; ///< N5, M5 (M5 = 0)
};

CoverWidths choose_cover_widths(const CoverMatrix &n);

/// H4 + H5 with layout [sigma0 (one per column) | slack per row].
Qubo encode_set_cover(const CoverMatrix &n, const CoverWidths &widths, double lambda3);

/// Default lambda3 from the H4 spread (column count) and unit violation.
double cover_penalty(const CoverMatrix &n);

/// Plain-text export: "qubo <dimension>", then one "i j coefficient" line per
/// nonzero upper-triangle entry (i == j carries the linear term, i < j the full
/// pair coefficient 2 Q_ij), then "offset <value>".
void write_triplets(std::ostream &os, const Qubo &q);
Qubo read_triplets(std::istream &is);

} // namespace qsed::qubo
