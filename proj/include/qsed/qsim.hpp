#pragma once

// Minimal dense statevector simulator.
//
// Qubit ordering is little-endian throughout the project: qubit 0 is the
// least-significant bit of a basis index, and basis strings are printed with
// the highest-listed qubit leftmost.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qsed/linalg.hpp"

namespace qsed::qsim {

inline constexpr int kMaxQubits = 26;

enum class GateKind { RY, CNOT, X, H, Phase, Diagonal };

/// One gate application. Any kind may carry controls; a control fires when
/// the control qubit equals the matching entry of `control_values`.
struct GateOp {
    GateKind kind = GateKind::X;
    std::vector<int> targets;
    std::vector<int> controls;
    std::vector<bool> control_values;
    double angle = 0.0;
    /// Diagonal only: one phase per basis state of `targets` (little-endian
    /// over the target list); the gate multiplies by exp(i * phase).
    std::vector<double> phases;
};

inline GateOp ry(int target, double angle) {
    return GateOp{GateKind::RY, {target}, {}, {}, angle, {}};
}
inline GateOp x(int target) { return GateOp{GateKind::X, {target}, {}, {}, 0.0, {}}; }
inline GateOp h(int target) { return GateOp{GateKind::H, {target}, {}, {}, 0.0, {}}; }
inline GateOp phase(int target, double angle) {
    return GateOp{GateKind::Phase, {target}, {}, {}, angle, {}};
}
inline GateOp cnot(int control, int target) {
    return GateOp{GateKind::CNOT, {target}, {control}, {true}, 0.0, {}};
}
inline GateOp diagonal(std::vector<int> targets, std::vector<double> phases) {
    return GateOp{GateKind::Diagonal, std::move(targets), {}, {}, 0.0, std::move(phases)};
}

/// Adds controls to `inner`; `values[i]` selects |1> (true) or |0> (false).
inline GateOp controlled(GateOp inner, const std::vector<int> &controls,
                         std::vector<bool> values = {}) {
    if (values.empty()) {
        values.assign(controls.size(), true);
    }
    if (values.size() != controls.size()) {
        throw std::invalid_argument("controlled: control value count mismatch");
    }
    for (std::size_t i = 0; i < controls.size(); ++i) {
        inner.controls.push_back(controls[i]);
        inner.control_values.push_back(values[i]);
    }
    return inner;
}

inline GateOp inverse(GateOp g) {
    switch (g.kind) {
    case GateKind::RY:
    case GateKind::Phase:
        g.angle = -g.angle;
        break;
    case GateKind::Diagonal:
        for (auto &p : g.phases) {
            p = -p;
        }
        break;
    default:
        break;
    }
    return g;
}

struct Circuit {
    int num_qubits = 0;
    std::vector<GateOp> ops;

    Circuit &add(GateOp g) {
        ops.push_back(std::move(g));
        return *this;
    }
    Circuit &append(const Circuit &other) {
        ops.insert(ops.end(), other.ops.begin(), other.ops.end());
        return *this;
    }
    Circuit inverse() const {
        Circuit inv{num_qubits, {}};
        inv.ops.reserve(ops.size());
        for (auto it = ops.rbegin(); it != ops.rend(); ++it) {
            inv.ops.push_back(qsim::inverse(*it));
        }
        return inv;
    }
};

template <typename Real = double> class StateVector {
  public:
    using Complex = std::complex<Real>;
    using Amplitudes = Vector<Complex>;

    explicit StateVector(int num_qubits) : num_qubits_(num_qubits) {
        if (num_qubits < 1 || num_qubits > kMaxQubits) {
            throw std::out_of_range("StateVector: qubit count outside [1, " +
                                    std::to_string(kMaxQubits) + "]");
        }
        amplitudes_ = Amplitudes::Zero(Eigen::Index{1} << num_qubits);
        amplitudes_[0] = Complex(1);
    }

    /// Adopts `amps` verbatim; length must be a power of two and the vector
    /// normalized within `tol`.
    static StateVector from_amplitudes(const Amplitudes &amps, double tol = 1e-9) {
        const auto n = amps.size();
        if (n < 2 || (n & (n - 1)) != 0) {
            throw std::invalid_argument("StateVector: amplitude count is not a power of two");
        }
        if (std::abs(static_cast<double>(amps.squaredNorm()) - 1.0) > tol) {
            throw std::invalid_argument("StateVector: amplitudes are not normalized");
        }
        int q = 0;
        while ((Eigen::Index{1} << q) < n) {
            ++q;
        }
        StateVector s(q);
        s.amplitudes_ = amps;
        return s;
    }

    int num_qubits() const { return num_qubits_; }
    std::size_t dimension() const { return static_cast<std::size_t>(amplitudes_.size()); }
    const Amplitudes &amplitudes() const { return amplitudes_; }
    Amplitudes &amplitudes() { return amplitudes_; }
    Real norm() const { return amplitudes_.norm(); }

  private:
    int num_qubits_;
    Amplitudes amplitudes_;
};

using QuantumState = StateVector<double>;

namespace detail {

inline void validate(const GateOp &g, int num_qubits) {
    std::vector<int> all = g.targets;
    all.insert(all.end(), g.controls.begin(), g.controls.end());
    if (g.targets.empty()) {
        throw std::invalid_argument("gate has no target");
    }
    for (int q : all) {
        if (q < 0 || q >= num_qubits) {
            throw std::out_of_range("gate qubit index " + std::to_string(q) +
                                    " outside register of " + std::to_string(num_qubits));
        }
    }
    std::sort(all.begin(), all.end());
    if (std::adjacent_find(all.begin(), all.end()) != all.end()) {
        throw std::invalid_argument("gate uses a qubit more than once");
    }
    if (g.control_values.size() != g.controls.size()) {
        throw std::invalid_argument("gate control value count mismatch");
    }
    if (g.kind != GateKind::Diagonal && g.targets.size() != 1) {
        throw std::invalid_argument("single-qubit gate with several targets");
    }
    if (g.kind == GateKind::Diagonal && g.phases.size() != (std::size_t{1} << g.targets.size())) {
        throw std::invalid_argument("diagonal gate phase count must be 2^targets");
    }
}

struct ControlMask {
    std::uint64_t mask = 0;
    std::uint64_t value = 0;
    bool fires(std::uint64_t i) const { return (i & mask) == value; }
};

inline ControlMask control_mask(const GateOp &g) {
    ControlMask c;
    for (std::size_t k = 0; k < g.controls.size(); ++k) {
        const auto bit = std::uint64_t{1} << g.controls[k];
        c.mask |= bit;
        if (g.control_values[k]) {
            c.value |= bit;
        }
    }
    return c;
}

/// Calls f(a0, a1) on every amplitude pair differing in `target` whose
/// controls fire.
template <typename Real, typename F>
void for_each_pair(StateVector<Real> &s, int target, const ControlMask &ctl, F &&f) {
    auto *a = s.amplitudes().data();
    const std::uint64_t dim = s.dimension();
    const std::uint64_t bit = std::uint64_t{1} << target;
    for (std::uint64_t hi = 0; hi < dim; hi += 2 * bit) {
        for (std::uint64_t i = hi; i < hi + bit; ++i) {
            if (ctl.fires(i)) {
                f(a[i], a[i | bit]);
            }
        }
    }
}

} // namespace detail

/// Applies `g` in place. Throws on out-of-range or repeated qubit indices.
template <typename Real> void apply_gate(StateVector<Real> &s, const GateOp &g) {
    using C = std::complex<Real>;
    detail::validate(g, s.num_qubits());
    const auto ctl = detail::control_mask(g);
    switch (g.kind) {
    case GateKind::RY: {
        const Real c = std::cos(g.angle / 2), sn = std::sin(g.angle / 2);
        detail::for_each_pair(s, g.targets[0], ctl, [c, sn](C &a0, C &a1) {
            const C x0 = a0, x1 = a1;
            a0 = C(c * x0.real() - sn * x1.real(), c * x0.imag() - sn * x1.imag());
            a1 = C(sn * x0.real() + c * x1.real(), sn * x0.imag() + c * x1.imag());
        });
        break;
    }
    case GateKind::X:
    case GateKind::CNOT:
        detail::for_each_pair(s, g.targets[0], ctl, [](C &a0, C &a1) { std::swap(a0, a1); });
        break;
    case GateKind::H: {
        const Real r = Real(1) / std::sqrt(Real(2));
        detail::for_each_pair(s, g.targets[0], ctl, [r](C &a0, C &a1) {
            const C x0 = a0, x1 = a1;
            a0 = C(r * (x0.real() + x1.real()), r * (x0.imag() + x1.imag()));
            a1 = C(r * (x0.real() - x1.real()), r * (x0.imag() - x1.imag()));
        });
        break;
    }
    case GateKind::Phase: {
        const Real c = std::cos(Real(g.angle)), sn = std::sin(Real(g.angle));
        detail::for_each_pair(s, g.targets[0], ctl, [c, sn](C &, C &a1) {
            a1 = C(c * a1.real() - sn * a1.imag(), sn * a1.real() + c * a1.imag());
        });
        break;
    }
    case GateKind::Diagonal: {
        std::vector<C> factors(g.phases.size());
        for (std::size_t k = 0; k < factors.size(); ++k) {
            factors[k] = std::polar(Real(1), Real(g.phases[k]));
        }
        auto &a = s.amplitudes();
        const std::uint64_t dim = s.dimension();
        const bool full = g.targets.size() == static_cast<std::size_t>(s.num_qubits()) &&
                          [&] {
                              for (std::size_t k = 0; k < g.targets.size(); ++k) {
                                  if (g.targets[k] != static_cast<int>(k)) {
                                      return false;
                                  }
                              }
                              return true;
                          }();
        for (std::uint64_t i = 0; i < dim; ++i) {
            if (!ctl.fires(i)) {
                continue;
            }
            std::uint64_t sub = i;
            if (!full) {
                sub = 0;
                for (std::size_t k = 0; k < g.targets.size(); ++k) {
                    sub |= ((i >> g.targets[k]) & 1U) << k;
                }
            }
            const C f = factors[sub], x = a[static_cast<Eigen::Index>(i)];
            a[static_cast<Eigen::Index>(i)] = C(f.real() * x.real() - f.imag() * x.imag(),
                                                f.real() * x.imag() + f.imag() * x.real());
        }
        break;
    }
    }
}

template <typename Real> void apply(StateVector<Real> &s, const Circuit &c) {
    if (c.num_qubits > s.num_qubits()) {
        throw std::out_of_range("circuit wider than state");
    }
    for (const auto &g : c.ops) {
        apply_gate(s, g);
    }
}

/// Builds |psi> with the given real, non-negative amplitudes.
inline QuantumState prepare_amplitudes(const std::vector<double> &target, double tol = 1e-9) {
    QuantumState::Amplitudes amps(static_cast<Eigen::Index>(target.size()));
    for (std::size_t k = 0; k < target.size(); ++k) {
        if (target[k] < 0.0) {
            throw std::invalid_argument("prepare_amplitudes: negative amplitude");
        }
        amps[static_cast<Eigen::Index>(k)] = target[k];
    }
    return QuantumState::from_amplitudes(amps, tol);
}

/// Gate-level loader: a tree of (multi-)controlled RY rotations mapping
/// |0...0> on `qubits` to sum_k target_k |k>, target_k >= 0.
inline Circuit amplitude_loader(const std::vector<double> &target, const std::vector<int> &qubits) {
    const std::size_t k = qubits.size();
    if (target.size() != (std::size_t{1} << k)) {
        throw std::invalid_argument("amplitude_loader: need 2^qubits amplitudes");
    }
    std::vector<double> mass(target.size());
    for (std::size_t i = 0; i < target.size(); ++i) {
        if (target[i] < 0.0) {
            throw std::invalid_argument("amplitude_loader: negative amplitude");
        }
        mass[i] = target[i] * target[i];
    }
    int width = *std::max_element(qubits.begin(), qubits.end()) + 1;
    Circuit c{width, {}};
    // Level l fixes qubit qubits[k-1-l] conditioned on the l more significant bits.
    for (std::size_t l = 0; l < k; ++l) {
        const std::size_t q = k - 1 - l;
        const std::size_t block = std::size_t{1} << (q + 1);
        const std::size_t half = std::size_t{1} << q;
        for (std::size_t prefix = 0; prefix < (std::size_t{1} << l); ++prefix) {
            const std::size_t base = prefix * block;
            double m0 = 0.0, m1 = 0.0;
            for (std::size_t j = 0; j < half; ++j) {
                m0 += mass[base + j];
                m1 += mass[base + half + j];
            }
            if (m0 + m1 <= 0.0 || m1 <= 0.0) {
                continue;
            }
            const double theta = 2.0 * std::atan2(std::sqrt(m1), std::sqrt(m0));
            std::vector<int> ctl;
            std::vector<bool> val;
            for (std::size_t b = 0; b < l; ++b) {
                ctl.push_back(qubits[q + 1 + b]);
                val.push_back(((prefix >> b) & 1U) != 0);
            }
            c.add(controlled(ry(qubits[q], theta), ctl, val));
        }
    }
    return c;
}

/// Marginal distribution over `subset`, indexed little-endian in subset order.
template <typename Real>
std::vector<double> marginal_probabilities(const StateVector<Real> &s, const std::vector<int> &subset) {
    if (subset.empty()) {
        throw std::invalid_argument("empty qubit subset");
    }
    for (int q : subset) {
        if (q < 0 || q >= s.num_qubits()) {
            throw std::out_of_range("subset qubit out of range");
        }
    }
    std::vector<double> p(std::size_t{1} << subset.size(), 0.0);
    const auto &a = s.amplitudes();
    for (std::uint64_t i = 0; i < s.dimension(); ++i) {
        std::uint64_t sub = 0;
        for (std::size_t k = 0; k < subset.size(); ++k) {
            sub |= ((i >> subset[k]) & 1U) << k;
        }
        p[sub] += std::norm(a[static_cast<Eigen::Index>(i)]);
    }
    return p;
}

inline std::string basis_string(std::uint64_t sub, std::size_t width) {
    std::string str(width, '0');
    for (std::size_t k = 0; k < width; ++k) {
        if ((sub >> k) & 1U) {
            str[width - 1 - k] = '1';
        }
    }
    return str;
}

template <typename Real>
std::map<std::string, double> exact_probabilities(const StateVector<Real> &s,
                                                  const std::vector<int> &subset) {
    const auto p = marginal_probabilities(s, subset);
    std::map<std::string, double> out;
    for (std::size_t k = 0; k < p.size(); ++k) {
        if (p[k] > 0.0) {
            out[basis_string(k, subset.size())] = p[k];
        }
    }
    return out;
}

/// Draws `shots` outcomes (little-endian subset indices) from `rng`.
template <typename Real, typename Rng>
std::vector<std::uint64_t> sample_indices(const StateVector<Real> &s, const std::vector<int> &subset,
                                          std::size_t shots, Rng &rng) {
    if (shots == 0) {
        throw std::invalid_argument("shots must be positive");
    }
    const auto p = marginal_probabilities(s, subset);
    std::discrete_distribution<std::uint64_t> dist(p.begin(), p.end());
    std::vector<std::uint64_t> out(shots);
    for (auto &o : out) {
        o = dist(rng);
    }
    return out;
}

template <typename Real, typename Rng>
std::map<std::string, std::size_t> measure_counts(const StateVector<Real> &s,
                                                  const std::vector<int> &subset,
                                                  std::size_t shots, Rng &rng) {
    std::map<std::string, std::size_t> counts;
    for (auto idx : sample_indices(s, subset, shots, rng)) {
        ++counts[basis_string(idx, subset.size())];
    }
    return counts;
}

template <typename Real>
std::map<std::string, std::size_t> measure_counts(const StateVector<Real> &s,
                                                  const std::vector<int> &subset,
                                                  std::size_t shots, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return measure_counts(s, subset, shots, rng);
}

} // namespace qsed::qsim
