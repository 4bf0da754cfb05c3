#include "qsed/qubo.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace qsed::qubo {

const char *to_string(Role role) {
    switch (role) {
    case Role::Decision: return "decision";
    case Role::Value: return "value";
    case Role::OptimalitySlack: return "optimality_slack";
    case Role::FeasibilitySlack: return "feasibility_slack";
    case Role::Cover: return "cover";
    case Role::CoverSlack: return "cover_slack";
    }
    return "unknown";
}

Qubo::Qubo(std::size_t dimension)
    : quadratic(MatrixXd::Zero(static_cast<Eigen::Index>(dimension), static_cast<Eigen::Index>(dimension))),
      linear(VectorXd::Zero(static_cast<Eigen::Index>(dimension))), roles(dimension) {}

void Qubo::add_coupling(std::size_t i, std::size_t j, double value) {
    if (i == j) {
        add_linear(i, value);
        return;
    }
    const auto ii = static_cast<Eigen::Index>(i);
    const auto jj = static_cast<Eigen::Index>(j);
    quadratic(ii, jj) += 0.5 * value;
    quadratic(jj, ii) += 0.5 * value;
}

void Qubo::add_square(const std::vector<std::pair<std::size_t, double>> &terms, double constant, double lambda) {
    for (std::size_t p = 0; p < terms.size(); ++p) {
        const auto [i, wi] = terms[p];
        add_linear(i, lambda * (wi * wi + 2.0 * constant * wi));
        for (std::size_t q = p + 1; q < terms.size(); ++q) {
            const auto [j, wj] = terms[q];
            add_coupling(i, j, 2.0 * lambda * wi * wj);
        }
    }
    offset += lambda * constant * constant;
}

bool Qubo::symmetric(double tol) const {
    return (quadratic - quadratic.transpose()).cwiseAbs().maxCoeff() <= tol &&
           quadratic.diagonal().cwiseAbs().maxCoeff() <= tol;
}

double energy(const Qubo &q, const Bits &bits) {
    if (bits.size() != q.dimension()) {
        throw std::invalid_argument("energy: bit-vector length " + std::to_string(bits.size()) +
                                    " differs from dimension " + std::to_string(q.dimension()));
    }
    const VectorXd x = to_vector(bits);
    return x.dot(q.quadratic * x) + q.linear.dot(x) + q.offset;
}

double AffineForm::min_over_binary() const {
    return constant + coeffs.cwiseMin(0.0).sum();
}

double AffineForm::max_over_binary() const {
    return constant + coeffs.cwiseMax(0.0).sum();
}

double Register::resolution() const { return std::ldexp(1.0, -m); }

double Register::max_value() const { return std::ldexp(1.0, n + 1) - std::ldexp(1.0, -m); }

double Register::weight(std::size_t bit) const { return std::ldexp(1.0, static_cast<int>(bit) - m); }

Register covering_register(double range, int m) {
    if (!std::isfinite(range)) {
        throw std::domain_error("covering_register: unbounded range (unnormalized cut?)");
    }
    Register r{-m, m};
    while (r.max_value() < range - 1e-9) {
        ++r.n;
    }
    return r;
}

namespace {

int exponent_of(double resolution) {
    const int e = static_cast<int>(std::lround(-std::log2(resolution)));
    if (!(resolution > 0.0) || std::abs(std::ldexp(1.0, -e) - resolution) > 1e-15 * resolution) {
        throw std::invalid_argument("resolution must be a positive power of two");
    }
    return e;
}

bool on_grid(double v, double resolution) {
    const double k = v / resolution;
    return std::abs(k - std::round(k)) <= 1e-9 * std::max(1.0, std::abs(k));
}

template <typename F> void for_each_cut_value(const MasterProblem &mp, F &&f) {
    for (const auto *family : {&mp.optimality, &mp.feasibility}) {
        for (const auto &cut : *family) {
            f(cut.constant);
            for (Eigen::Index i = 0; i < cut.coeffs.size(); ++i) {
                f(cut.coeffs[i]);
            }
        }
    }
}

void check_dimensions(const MasterProblem &mp) {
    for (const auto *family : {&mp.optimality, &mp.feasibility}) {
        for (const auto &cut : *family) {
            if (static_cast<std::size_t>(cut.coeffs.size()) != mp.m()) {
                throw std::invalid_argument("master: cut dimension differs from first-stage dimension");
            }
            if (!std::isfinite(cut.constant) || !cut.coeffs.allFinite()) {
                throw std::domain_error("master: unbounded cut coefficient (unnormalized ray?)");
            }
        }
    }
}

struct Ranges {
    double eta = 0.0;
    double opt_slack = 0.0;
    double fea_slack = 0.0;
};

Ranges required_ranges(const MasterProblem &mp) {
    Ranges r;
    for (const auto &g : mp.optimality) {
        r.eta = std::max(r.eta, g.max_over_binary());
    }
    for (const auto &g : mp.optimality) {
        r.opt_slack = std::max(r.opt_slack, r.eta - g.min_over_binary());
    }
    for (const auto &f : mp.feasibility) {
        r.fea_slack = std::max(r.fea_slack, -f.min_over_binary());
    }
    return r;
}

} // namespace

double choose_resolution(const MasterProblem &mp, const WidthOptions &opts) {
    check_dimensions(mp);
    const int floor_exp = exponent_of(opts.resolution_floor);
    for (int e = 0; e <= floor_exp; ++e) {
        const double res = std::ldexp(1.0, -e);
        bool all = true;
        for_each_cut_value(mp, [&](double v) { all = all && on_grid(v, res); });
        if (all) {
            return res;
        }
    }
    return opts.resolution_floor;
}

AffineForm snap(const AffineForm &f, double resolution) {
    AffineForm out;
    out.constant = std::round(f.constant / resolution) * resolution;
    out.coeffs = (f.coeffs / resolution).array().round().matrix() * resolution;
    return out;
}

MasterProblem snap(const MasterProblem &mp, double resolution, double *distance) {
    MasterProblem out;
    out.a = mp.a;
    double worst = 0.0;
    auto track = [&](const AffineForm &from, const AffineForm &to) {
        worst = std::max(worst, std::abs(from.constant - to.constant));
        if (from.coeffs.size() > 0) {
            worst = std::max(worst, (from.coeffs - to.coeffs).cwiseAbs().maxCoeff());
        }
    };
    for (const auto &g : mp.optimality) {
        out.optimality.push_back(snap(g, resolution));
        track(g, out.optimality.back());
    }
    for (const auto &f : mp.feasibility) {
        out.feasibility.push_back(snap(f, resolution));
        track(f, out.feasibility.back());
    }
    if (distance) {
        *distance = worst;
    }
    return out;
}

MasterWidths choose_widths(const MasterProblem &mp, const WidthOptions &opts) {
    MasterWidths w;
    w.resolution = choose_resolution(mp, opts);
    const auto snapped = snap(mp, w.resolution, &w.snap_distance);
    const int e = exponent_of(w.resolution);
    const auto r = required_ranges(snapped);
    w.eta = covering_register(r.eta, e);
    w.opt_slack = covering_register(r.opt_slack, e);
    w.fea_slack = covering_register(r.fea_slack, e);
    return w;
}

double penalty_rule(double spread, double min_violation) {
    if (!(min_violation > 0.0)) {
        throw std::invalid_argument("penalty_rule: zero representable violation");
    }
    return std::max(1.0, 2.0 * spread / (min_violation * min_violation));
}

Penalties choose_penalties(const MasterProblem &mp, const MasterWidths &widths) {
    const double spread = mp.a.cwiseMax(0.0).sum() - mp.a.cwiseMin(0.0).sum() + widths.eta.max_value();
    Penalties p;
    p.lambda1 = penalty_rule(spread, widths.resolution);
    p.lambda2 = p.lambda1;
    return p;
}

MasterLayout master_layout(const MasterProblem &mp, const MasterWidths &widths) {
    MasterLayout l;
    l.m = mp.m();
    l.eta_offset = l.m;
    std::size_t next = l.eta_offset + widths.eta.bits();
    for (std::size_t k = 0; k < mp.optimality.size(); ++k) {
        l.opt_slack_offset.push_back(next);
        next += widths.opt_slack.bits();
    }
    for (std::size_t k = 0; k < mp.feasibility.size(); ++k) {
        l.fea_slack_offset.push_back(next);
        next += widths.fea_slack.bits();
    }
    l.dimension = next;
    return l;
}

Qubo encode_master(const MasterProblem &snapped, const MasterWidths &widths, const Penalties &penalties) {
    check_dimensions(snapped);
    const double res = widths.resolution;
    const int e = exponent_of(res);
    if (widths.eta.m != e || widths.opt_slack.m != e || widths.fea_slack.m != e) {
        throw std::invalid_argument("encode_master: registers must share the coefficient resolution");
    }
    for_each_cut_value(snapped, [&](double v) {
        if (!on_grid(v, res)) {
            throw std::invalid_argument("encode_master: coefficient " + std::to_string(v) +
                                        " is not on the resolution grid");
        }
    });
    if (!(penalties.lambda1 > 0.0) || !(penalties.lambda2 > 0.0)) {
        throw std::invalid_argument("encode_master: penalties must be positive");
    }
    const auto need = required_ranges(snapped);
    if (widths.eta.max_value() < need.eta - 1e-9 ||
        (!snapped.optimality.empty() && widths.opt_slack.max_value() < need.opt_slack - 1e-9) ||
        (!snapped.feasibility.empty() && widths.fea_slack.max_value() < need.fea_slack - 1e-9)) {
        throw std::overflow_error("encode_master: register widths cannot represent the cut ranges");
    }

    const auto layout = master_layout(snapped, widths);
    Qubo q(layout.dimension);
    const auto m = snapped.m();
    for (std::size_t i = 0; i < m; ++i) {
        q.roles[i] = {Role::Decision, static_cast<int>(i), 1.0};
        q.add_linear(i, snapped.a[static_cast<Eigen::Index>(i)]);
    }
    for (std::size_t b = 0; b < widths.eta.bits(); ++b) {
        const auto idx = layout.eta_offset + b;
        q.roles[idx] = {Role::Value, 0, widths.eta.weight(b)};
        q.add_linear(idx, widths.eta.weight(b));
    }
    for (std::size_t k = 0; k < snapped.optimality.size(); ++k) {
        const auto &g = snapped.optimality[k];
        std::vector<std::pair<std::size_t, double>> terms;
        for (std::size_t b = 0; b < widths.eta.bits(); ++b) {
            terms.emplace_back(layout.eta_offset + b, widths.eta.weight(b));
        }
        for (std::size_t b = 0; b < widths.opt_slack.bits(); ++b) {
            const auto idx = layout.opt_slack_offset[k] + b;
            q.roles[idx] = {Role::OptimalitySlack, static_cast<int>(k), widths.opt_slack.weight(b)};
            terms.emplace_back(idx, -widths.opt_slack.weight(b));
        }
        for (std::size_t i = 0; i < m; ++i) {
            const double c = g.coeffs[static_cast<Eigen::Index>(i)];
            if (c != 0.0) {
                terms.emplace_back(i, -c);
            }
        }
        q.add_square(terms, -g.constant, penalties.lambda1);
    }
    for (std::size_t k = 0; k < snapped.feasibility.size(); ++k) {
        const auto &f = snapped.feasibility[k];
        std::vector<std::pair<std::size_t, double>> terms;
        for (std::size_t b = 0; b < widths.fea_slack.bits(); ++b) {
            const auto idx = layout.fea_slack_offset[k] + b;
            q.roles[idx] = {Role::FeasibilitySlack, static_cast<int>(k), widths.fea_slack.weight(b)};
            terms.emplace_back(idx, widths.fea_slack.weight(b));
        }
        for (std::size_t i = 0; i < m; ++i) {
            const double c = f.coeffs[static_cast<Eigen::Index>(i)];
            if (c != 0.0) {
                terms.emplace_back(i, c);
            }
        }
        q.add_square(terms, f.constant, penalties.lambda2);
    }
    return q;
}

MasterDecoded decode_master(const MasterProblem &mp, const MasterWidths &widths, const Bits &bits) {
    const auto layout = master_layout(mp, widths);
    if (bits.size() != layout.dimension) {
        throw std::invalid_argument("decode_master: bit-vector length mismatch");
    }
    MasterDecoded d;
    d.z0.assign(bits.begin(), bits.begin() + static_cast<std::ptrdiff_t>(layout.m));
    for (std::size_t b = 0; b < widths.eta.bits(); ++b) {
        if (bits[layout.eta_offset + b]) {
            d.eta += widths.eta.weight(b);
        }
    }
    d.objective = (mp.m() > 0 ? mp.a.dot(to_vector(d.z0)) : 0.0) + d.eta;
    return d;
}

MasterIlpSolution solve_master_ilp(const MasterProblem &snapped, const MasterWidths &widths) {
    check_dimensions(snapped);
    const auto m = snapped.m();
    if (m > 24) {
        throw std::length_error("solve_master_ilp: more than 24 first-stage binaries");
    }
    const double res = widths.resolution;
    MasterIlpSolution best;
    for (std::uint64_t k = 0; k < (std::uint64_t{1} << m); ++k) {
        const Bits z0 = bits_from_index(k, m);
        const VectorXd z = to_vector(z0);
        bool ok = true;
        for (const auto &f : snapped.feasibility) {
            ok = ok && f(z) <= 1e-9;
        }
        if (!ok) {
            continue;
        }
        double need = 0.0;
        for (const auto &g : snapped.optimality) {
            need = std::max(need, g(z));
        }
        const double eta = std::ceil(need / res - 1e-9) * res;
        if (eta > widths.eta.max_value() + 1e-9) {
            continue;
        }
        const double obj = (m > 0 ? snapped.a.dot(z) : 0.0) + eta;
        if (!best.feasible || obj < best.objective - 1e-12) {
            best = {true, z0, eta, obj};
        }
    }
    return best;
}

CoverWidths choose_cover_widths(const CoverMatrix &n) {
    std::size_t max_row = 0;
    for (std::size_t r = 0; r < n.size(); ++r) {
        std::size_t sum = 0;
        for (auto v : n[r]) {
            sum += v ? 1 : 0;
        }
        if (sum == 0) {
            throw std::invalid_argument("set cover: row " + std::to_string(r) + " cannot be covered");
        }
        max_row = std::max(max_row, sum);
    }
    return {covering_register(static_cast<double>(max_row) - 1.0, 0)};
}

double cover_penalty(const CoverMatrix &n) {
    const double columns = n.empty() ? 0.0 : static_cast<double>(n.front().size());
    return penalty_rule(columns, 1.0);
}

Qubo encode_set_cover(const CoverMatrix &n, const CoverWidths &widths, double lambda3) {
    if (n.empty()) {
        throw std::invalid_argument("set cover: empty matrix");
    }
    const std::size_t cols = n.front().size();
    std::size_t max_row = 0;
    for (std::size_t r = 0; r < n.size(); ++r) {
        if (n[r].size() != cols) {
            throw std::invalid_argument("set cover: ragged matrix");
        }
        std::size_t sum = 0;
        for (auto v : n[r]) {
            if (v > 1) {
                throw std::invalid_argument("set cover: entries must be binary");
            }
            sum += v;
        }
        if (sum == 0) {
            throw std::invalid_argument("set cover: row " + std::to_string(r) + " cannot be covered");
        }
        max_row = std::max(max_row, sum);
    }
    if (widths.slack.m != 0 || widths.slack.max_value() < static_cast<double>(max_row) - 1.0 - 1e-9) {
        throw std::overflow_error("set cover: slack register cannot represent the row surplus");
    }
    if (!(lambda3 > 0.0)) {
        throw std::invalid_argument("set cover: penalty must be positive");
    }
    const std::size_t sb = widths.slack.bits();
    Qubo q(cols + n.size() * sb);
    for (std::size_t k = 0; k < cols; ++k) {
        q.roles[k] = {Role::Cover, static_cast<int>(k), 1.0};
        q.add_linear(k, 1.0);
    }
    for (std::size_t r = 0; r < n.size(); ++r) {
        std::vector<std::pair<std::size_t, double>> terms;
        for (std::size_t k = 0; k < cols; ++k) {
            if (n[r][k]) {
                terms.emplace_back(k, 1.0);
            }
        }
        for (std::size_t v = 0; v < sb; ++v) {
            const auto idx = cols + r * sb + v;
            q.roles[idx] = {Role::CoverSlack, static_cast<int>(r), widths.slack.weight(v)};
            terms.emplace_back(idx, -widths.slack.weight(v));
        }
        q.add_square(terms, -1.0, lambda3);
    }
    return q;
}

void write_triplets(std::ostream &os, const Qubo &q) {
    const auto n = q.dimension();
    os << "qubo " << n << '\n' << std::setprecision(17);
    for (std::size_t i = 0; i < n; ++i) {
        const double lin = q.linear[static_cast<Eigen::Index>(i)];
        if (lin != 0.0) {
            os << i << ' ' << i << ' ' << lin << '\n';
        }
        for (std::size_t j = i + 1; j < n; ++j) {
            const double c = 2.0 * q.quadratic(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            if (c != 0.0) {
                os << i << ' ' << j << ' ' << c << '\n';
            }
        }
    }
    os << "offset " << q.offset << '\n';
}

Qubo read_triplets(std::istream &is) {
    std::string word;
    std::size_t n = 0;
    if (!(is >> word >> n) || word != "qubo") {
        throw std::runtime_error("read_triplets: missing 'qubo <dimension>' header");
    }
    Qubo q(n);
    std::string line;
    std::getline(is, line);
    while (std::getline(is, line)) {
        if (line.empty()) {
            continue;
        }
        std::istringstream ls(line);
        if (line.rfind("offset", 0) == 0) {
            ls >> word >> q.offset;
            return q;
        }
        std::size_t i = 0, j = 0;
        double c = 0.0;
        if (!(ls >> i >> j >> c) || i >= n || j >= n) {
            throw std::runtime_error("read_triplets: malformed line '" + line + "'");
        }
        q.add_coupling(i, j, c);
    }
    throw std::runtime_error("read_triplets: missing offset line");
}

} // namespace qsed::qubo
