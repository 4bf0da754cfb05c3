#include "qsed/qaoa.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

#include "qsed/uqae.hpp"

namespace qsed::qaoa {

double Ising::scale() const { return h.cwiseAbs().sum() + j.cwiseAbs().sum(); }

Ising to_ising(const qubo::Qubo &q) {
    const auto n = static_cast<Eigen::Index>(q.dimension());
    Ising is;
    is.h = VectorXd::Zero(n);
    is.j = MatrixXd::Zero(n, n);
    is.offset = q.offset;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double c = q.linear[i];
        is.h[i] -= 0.5 * c;
        is.offset += 0.5 * c;
        for (Eigen::Index k = i + 1; k < n; ++k) {
            const double w = q.quadratic(i, k) + q.quadratic(k, i);
            if (w == 0.0) {
                continue;
            }
            is.j(i, k) += 0.25 * w;
            is.h[i] -= 0.25 * w;
            is.h[k] -= 0.25 * w;
            is.offset += 0.25 * w;
        }
    }
    return is;
}

std::vector<double> energy_table(const Ising &is) {
    const auto n = is.dimension();
    if (n > static_cast<std::size_t>(qsim::kMaxQubits)) {
        throw std::length_error("energy_table: dimension over simulator cap");
    }
    const std::uint64_t dim = std::uint64_t{1} << n;
    std::vector<double> table(dim);
    // Spins all +1 at x = 0.
    std::vector<double> s(n, 1.0);
    MatrixXd jj = is.j + is.j.transpose();
    VectorXd field = is.h + jj * VectorXd::Ones(static_cast<Eigen::Index>(n));
    double e = is.offset + is.h.sum() + is.j.sum();
    std::uint64_t x = 0;
    table[0] = e;
    for (std::uint64_t i = 1; i < dim; ++i) {
        const int k = std::countr_zero(i);
        const auto kk = static_cast<Eigen::Index>(k);
        e -= 2.0 * s[static_cast<std::size_t>(k)] * field[kk];
        const double ds = -2.0 * s[static_cast<std::size_t>(k)];
        s[static_cast<std::size_t>(k)] = -s[static_cast<std::size_t>(k)];
        field += ds * jj.col(kk);
        x ^= std::uint64_t{1} << k;
        table[x] = e;
    }
    return table;
}

void QaoaConfig::validate() const {
    if (depth < 1 || restarts < 1 || sweeps < 1 || golden_iterations < 1) {
        throw std::invalid_argument("QaoaConfig: depth, restarts, sweeps and iterations must be >= 1");
    }
    if (final_shots == 0) {
        throw std::invalid_argument("QaoaConfig: final_shots must be >= 1");
    }
    if (qubit_cap < 1 || qubit_cap > qsim::kMaxQubits) {
        throw std::invalid_argument("QaoaConfig: qubit cap outside [1, simulator cap]");
    }
}

namespace {

qsim::Circuit circuit_from_table(int n, const std::vector<double> &table, const std::vector<double> &gammas,
                                 const std::vector<double> &betas) {
    if (gammas.size() != betas.size() || gammas.empty()) {
        throw std::invalid_argument("build_circuit: need matching non-empty gamma and beta sequences");
    }
    qsim::Circuit c;
    c.num_qubits = n;
    std::vector<int> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), 0);
    for (int k = 0; k < n; ++k) {
        c.add(qsim::h(k));
    }
    std::vector<double> phases(table.size());
    for (std::size_t layer = 0; layer < gammas.size(); ++layer) {
        for (std::size_t i = 0; i < table.size(); ++i) {
            phases[i] = -gammas[layer] * table[i];
        }
        c.add(qsim::diagonal(all, phases));
        for (int k = 0; k < n; ++k) {
            c.add(qsim::phase(k, std::numbers::pi / 2));
            c.add(qsim::ry(k, 2.0 * betas[layer]));
            c.add(qsim::phase(k, -std::numbers::pi / 2));
        }
    }
    return c;
}

struct Incumbent {
    std::uint64_t index = 0;
    double energy = std::numeric_limits<double>::infinity();
    bool set = false;

    void offer(std::uint64_t idx, double e) {
        const double tol = 1e-9 * (1.0 + std::abs(e));
        if (!set || e < energy - tol || (std::abs(e - energy) <= tol && idx < index)) {
            index = idx;
            energy = e;
            set = true;
        }
    }
};

class Sampler {
  public:
    explicit Sampler(const qsim::QuantumState &s) : cdf_(s.dimension()) {
        double acc = 0.0;
        const auto &a = s.amplitudes();
        for (std::size_t i = 0; i < cdf_.size(); ++i) {
            acc += std::norm(a[static_cast<Eigen::Index>(i)]);
            cdf_[i] = acc;
        }
    }
    template <typename Rng> std::uint64_t draw(Rng &rng) {
        std::uniform_real_distribution<double> u(0.0, cdf_.back());
        const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u(rng));
        return static_cast<std::uint64_t>(std::min<std::ptrdiff_t>(it - cdf_.begin(),
                                                                   static_cast<std::ptrdiff_t>(cdf_.size()) - 1));
    }

  private:
    std::vector<double> cdf_;
};

} // namespace

qsim::Circuit build_circuit(const qubo::Qubo &q, const std::vector<double> &gammas,
                            const std::vector<double> &betas) {
    const auto n = q.dimension();
    if (n == 0 || n > static_cast<std::size_t>(qsim::kMaxQubits)) {
        throw std::length_error("build_circuit: dimension outside simulator range");
    }
    return circuit_from_table(static_cast<int>(n), energy_table(to_ising(q)), gammas, betas);
}

QaoaResult solve_qaoa(const qubo::Qubo &q, const QaoaConfig &cfg) {
    cfg.validate();
    const auto n = q.dimension();
    if (n > static_cast<std::size_t>(cfg.qubit_cap)) {
        throw std::length_error("solve_qaoa: dimension " + std::to_string(n) + " exceeds qubit cap " +
                                std::to_string(cfg.qubit_cap));
    }
    QaoaResult res;
    if (n == 0) {
        res.energy = q.offset;
        return res;
    }
    const auto ising = to_ising(q);
    const auto table = energy_table(ising);
    const double scale = std::max(ising.scale(), 1e-12);
    const auto p = static_cast<std::size_t>(cfg.depth);
    const int ni = static_cast<int>(n);
    Incumbent best;
    double best_expectation = std::numeric_limits<double>::infinity();
    std::vector<double> best_gp, best_bp;

    for (int r = 0; r < cfg.restarts; ++r) {
        std::mt19937_64 rng(uqae::split_seed(cfg.seed, static_cast<std::uint64_t>(r)));
        std::uniform_real_distribution<double> ug(0.0, std::numbers::pi);
        std::uniform_real_distribution<double> ub(0.0, std::numbers::pi / 2);
        // params[0..p) scaled gammas in [0, pi], params[p..2p) betas in [0, pi/2].
        std::vector<double> params(2 * p);
        for (std::size_t l = 0; l < p; ++l) {
            params[l] = ug(rng);
            params[p + l] = ub(rng);
        }
        std::size_t step = 0;
        auto evaluate = [&](const std::vector<double> &x) {
            std::vector<double> gammas(p), betas(p);
            for (std::size_t l = 0; l < p; ++l) {
                gammas[l] = x[l] / scale;
                betas[l] = x[p + l];
            }
            qsim::QuantumState state(ni);
            qsim::apply(state, circuit_from_table(ni, table, gammas, betas));
            Sampler sampler(state);
            double value = 0.0;
            if (cfg.shots == 0) {
                const auto &a = state.amplitudes();
                for (std::size_t i = 0; i < table.size(); ++i) {
                    value += std::norm(a[static_cast<Eigen::Index>(i)]) * table[i];
                }
            } else {
                for (std::size_t s = 0; s < cfg.shots; ++s) {
                    const auto idx = sampler.draw(rng);
                    value += table[idx];
                    best.offer(idx, table[idx]);
                }
                value /= static_cast<double>(cfg.shots);
                res.samples += cfg.shots;
            }
            for (std::size_t s = 0; s < cfg.eval_samples; ++s) {
                const auto idx = sampler.draw(rng);
                best.offer(idx, table[idx]);
            }
            res.samples += cfg.eval_samples;
            ++res.evaluations;
            if (cfg.record_diagnostics) {
                res.diagnostics.push_back({r, step, gammas, betas, value, best.energy});
            }
            ++step;
            return value;
        };

        double current = evaluate(params);
        const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
        for (int sweep = 0; sweep < cfg.sweeps; ++sweep) {
            for (std::size_t c = 0; c < 2 * p; ++c) {
                double lo = 0.0;
                double hi = c < p ? std::numbers::pi : std::numbers::pi / 2;
                auto at = [&](double v) {
                    auto x = params;
                    x[c] = v;
                    return evaluate(x);
                };
                double x1 = hi - inv_phi * (hi - lo);
                double x2 = lo + inv_phi * (hi - lo);
                double f1 = at(x1), f2 = at(x2);
                double arg = f1 < f2 ? x1 : x2;
                double fbest = std::min(f1, f2);
                for (int it = 0; it < cfg.golden_iterations; ++it) {
                    if (f1 < f2) {
                        hi = x2;
                        x2 = x1;
                        f2 = f1;
                        x1 = hi - inv_phi * (hi - lo);
                        f1 = at(x1);
                        if (f1 < fbest) {
                            fbest = f1;
                            arg = x1;
                        }
                    } else {
                        lo = x1;
                        x1 = x2;
                        f1 = f2;
                        x2 = lo + inv_phi * (hi - lo);
                        f2 = at(x2);
                        if (f2 < fbest) {
                            fbest = f2;
                            arg = x2;
                        }
                    }
                }
                if (fbest < current) {
                    current = fbest;
                    params[c] = arg;
                }
            }
        }

        std::vector<double> gammas(p), betas(p);
        for (std::size_t l = 0; l < p; ++l) {
            gammas[l] = params[l] / scale;
            betas[l] = params[p + l];
        }
        qsim::QuantumState state(ni);
        qsim::apply(state, circuit_from_table(ni, table, gammas, betas));
        Sampler sampler(state);
        for (std::size_t s = 0; s < cfg.final_shots; ++s) {
            const auto idx = sampler.draw(rng);
            best.offer(idx, table[idx]);
        }
        res.samples += cfg.final_shots;
        if (current < best_expectation) {
            best_expectation = current;
            best_gp = gammas;
            best_bp = betas;
        }
    }
    res.bits = bits_from_index(best.index, n);
    res.energy = qubo::energy(q, res.bits);
    res.best_expectation = best_expectation;
    res.gammas = best_gp;
    res.betas = best_bp;
    return res;
}

void write_diagnostics(std::ostream &os, const QaoaResult &r) {
    auto join = [](const std::vector<double> &v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) {
                s += ';';
            }
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.10g", v[i]);
            s += buf;
        }
        return s;
    };
    os << "restart,step,gammas,betas,expectation,best_so_far\n";
    for (const auto &e : r.diagnostics) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.12g,%.12g", e.expectation, e.best_so_far);
        os << e.restart << ',' << e.step << ',' << join(e.gammas) << ',' << join(e.betas) << ',' << buf << '\n';
    }
}

namespace {

// Gray-code walk over all assignments of `vars`, reporting (assignment mask, energy).
template <typename F>
void walk(const qubo::Qubo &q, const std::vector<std::size_t> &vars, const VectorXd &extra_linear, F &&visit) {
    const auto k = vars.size();
    VectorXd field(static_cast<Eigen::Index>(k));
    for (std::size_t a = 0; a < k; ++a) {
        field[static_cast<Eigen::Index>(a)] = q.linear[static_cast<Eigen::Index>(vars[a])] +
                                              extra_linear[static_cast<Eigen::Index>(a)];
    }
    MatrixXd coup(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < k; ++b) {
            coup(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                a == b ? 0.0
                       : q.quadratic(static_cast<Eigen::Index>(vars[a]), static_cast<Eigen::Index>(vars[b])) +
                             q.quadratic(static_cast<Eigen::Index>(vars[b]), static_cast<Eigen::Index>(vars[a]));
        }
    }
    std::uint64_t mask = 0;
    double e = 0.0;
    visit(mask, e);
    for (std::uint64_t i = 1; i < (std::uint64_t{1} << k); ++i) {
        const int bit = std::countr_zero(i);
        const auto bb = static_cast<Eigen::Index>(bit);
        const bool on = (mask >> bit) & 1U;
        const double sign = on ? -1.0 : 1.0;
        e += sign * field[bb];
        field += sign * coup.col(bb);
        mask ^= std::uint64_t{1} << bit;
        visit(mask, e);
    }
}

} // namespace

Minimum solve_exact(const qubo::Qubo &q) {
    const auto n = q.dimension();
    if (n > 24) {
        throw std::length_error("solve_exact: dimension " + std::to_string(n) + " over 24");
    }
    std::vector<std::size_t> vars(n);
    std::iota(vars.begin(), vars.end(), 0);
    Incumbent best;
    walk(q, vars, VectorXd::Zero(static_cast<Eigen::Index>(n)),
         [&](std::uint64_t mask, double e) { best.offer(mask, e); });
    Minimum m;
    m.bits = bits_from_index(best.index, n);
    m.energy = qubo::energy(q, m.bits);
    return m;
}

Minimum solve_exact_structured(const qubo::Qubo &q) {
    const auto n = q.dimension();
    std::vector<std::size_t> free;
    std::map<std::pair<int, int>, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < n; ++i) {
        const auto role = q.roles[i].role;
        if (role == qubo::Role::Decision || role == qubo::Role::Value || role == qubo::Role::Cover) {
            free.push_back(i);
        } else {
            groups[{static_cast<int>(role), q.roles[i].group}].push_back(i);
        }
    }
    std::vector<std::vector<std::size_t>> blocks;
    for (auto &[key, idx] : groups) {
        blocks.push_back(idx);
    }
    bool separable = free.size() <= 24;
    for (const auto &b : blocks) {
        separable = separable && b.size() <= 20;
    }
    for (std::size_t x = 0; separable && x < blocks.size(); ++x) {
        for (std::size_t y = x + 1; separable && y < blocks.size(); ++y) {
            for (auto i : blocks[x]) {
                for (auto j : blocks[y]) {
                    if (q.quadratic(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) != 0.0) {
                        separable = false;
                    }
                }
            }
        }
    }
    if (!separable || blocks.empty()) {
        return solve_exact(q);
    }

    // Block-internal energies (no free-variable field) per block assignment.
    std::vector<std::vector<double>> internal(blocks.size());
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        internal[b].assign(std::size_t{1} << blocks[b].size(), 0.0);
        walk(q, blocks[b], VectorXd::Zero(static_cast<Eigen::Index>(blocks[b].size())),
             [&](std::uint64_t mask, double e) { internal[b][mask] = e; });
    }

    Incumbent best;
    VectorXd xfree = VectorXd::Zero(static_cast<Eigen::Index>(n));
    walk(q, free, VectorXd::Zero(static_cast<Eigen::Index>(free.size())), [&](std::uint64_t fmask, double efree) {
        xfree.setZero();
        std::uint64_t index = 0;
        for (std::size_t a = 0; a < free.size(); ++a) {
            if ((fmask >> a) & 1U) {
                xfree[static_cast<Eigen::Index>(free[a])] = 1.0;
                index |= std::uint64_t{1} << free[a];
            }
        }
        double total = efree + q.offset;
        for (std::size_t b = 0; b < blocks.size(); ++b) {
            const auto &blk = blocks[b];
            std::vector<double> g(blk.size());
            for (std::size_t a = 0; a < blk.size(); ++a) {
                g[a] = 2.0 * q.quadratic.row(static_cast<Eigen::Index>(blk[a])).dot(xfree);
            }
            double bmin = 0.0;
            std::uint64_t barg = 0;
            bool has = false;
            for (std::uint64_t mask = 0; mask < internal[b].size(); ++mask) {
                double e = internal[b][mask];
                for (std::size_t a = 0; a < blk.size(); ++a) {
                    if ((mask >> a) & 1U) {
                        e += g[a];
                    }
                }
                if (!has || e < bmin - 1e-9 * (1.0 + std::abs(bmin))) {
                    bmin = e;
                    barg = mask;
                    has = true;
                }
            }
            total += bmin;
            for (std::size_t a = 0; a < blk.size(); ++a) {
                if ((barg >> a) & 1U) {
                    index |= std::uint64_t{1} << blk[a];
                }
            }
        }
        best.offer(index, total);
    });
    Minimum m;
    m.bits = bits_from_index(best.index, n);
    m.energy = qubo::energy(q, m.bits);
    return m;
}

Minimum solve_anneal(const qubo::Qubo &q, const AnnealConfig &cfg) {
    const auto n = q.dimension();
    Minimum out;
    if (n == 0) {
        out.energy = q.offset;
        return out;
    }
    if (cfg.restarts < 1 || cfg.sweeps < 1) {
        throw std::invalid_argument("AnnealConfig: restarts and sweeps must be >= 1");
    }
    const MatrixXd coup = q.quadratic + q.quadratic.transpose();
    double t0 = cfg.t_start;
    double t1 = cfg.t_end;
    if (t0 <= 0.0) {
        t0 = 0.0;
        for (Eigen::Index i = 0; i < coup.rows(); ++i) {
            t0 = std::max(t0, std::abs(q.linear[i]) + coup.row(i).cwiseAbs().sum());
        }
        t0 = std::max(t0, 1e-9);
    }
    if (t1 <= 0.0) {
        double smallest = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < coup.rows(); ++i) {
            if (q.linear[i] != 0.0) {
                smallest = std::min(smallest, std::abs(q.linear[i]));
            }
            for (Eigen::Index j = 0; j < coup.cols(); ++j) {
                if (coup(i, j) != 0.0) {
                    smallest = std::min(smallest, std::abs(coup(i, j)));
                }
            }
        }
        t1 = std::isfinite(smallest) ? 0.05 * smallest : 1e-3 * t0;
        t1 = std::min(t1, t0);
    }
    const double ratio = cfg.sweeps > 1 ? std::pow(t1 / t0, 1.0 / (cfg.sweeps - 1)) : 1.0;

    Incumbent best;
    for (int r = 0; r < cfg.restarts; ++r) {
        std::mt19937_64 rng(uqae::split_seed(cfg.seed, static_cast<std::uint64_t>(r)));
        std::uniform_int_distribution<int> coin(0, 1);
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        VectorXd x(static_cast<Eigen::Index>(n));
        std::uint64_t index = 0;
        for (std::size_t i = 0; i < n; ++i) {
            x[static_cast<Eigen::Index>(i)] = coin(rng);
            if (x[static_cast<Eigen::Index>(i)] > 0.5) {
                index |= std::uint64_t{1} << i;
            }
        }
        VectorXd field = q.linear + coup * x;
        double e = q.linear.dot(x) + x.dot(q.quadratic * x) + q.offset;
        best.offer(index, e);
        double t = t0;
        for (int sweep = 0; sweep < cfg.sweeps; ++sweep, t *= ratio) {
            for (std::size_t i = 0; i < n; ++i) {
                const auto ii = static_cast<Eigen::Index>(i);
                const double sign = x[ii] > 0.5 ? -1.0 : 1.0;
                const double delta = sign * field[ii];
                if (delta <= 0.0 || u01(rng) < std::exp(-delta / t)) {
                    x[ii] += sign;
                    field += sign * coup.col(ii);
                    e += delta;
                    index ^= std::uint64_t{1} << i;
                    if (delta < 0.0) {
                        best.offer(index, e);
                    }
                }
            }
        }
    }
    out.bits = bits_from_index(best.index, n);
    out.energy = qubo::energy(q, out.bits);
    return out;
}

} // namespace qsed::qaoa
