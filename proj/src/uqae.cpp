#include "qsed/uqae.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace qsed::uqae {

double GridEncoding::step() const { return std::ldexp(1.0, -m1); }
double GridEncoding::bias() const { return std::ldexp(1.0, n1) - std::ldexp(1.0, -m1 - 1); }
double GridEncoding::span() const { return std::ldexp(1.0, n1 + 1); }

double GridEncoding::value_at(std::uint64_t index) const {
    return static_cast<double>(index) * step() - bias();
}

std::vector<double> GridEncoding::grid() const {
    std::vector<double> g(grid_size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] = value_at(i);
    }
    return g;
}

void GridEncoding::validate() const {
    if (m1 < 0 || n1 < 0) {
        throw std::invalid_argument("grid encoding: m1 and n1 must be non-negative");
    }
    if (value_qubits() > 20) {
        throw std::invalid_argument("grid encoding: more than 20 value qubits");
    }
}

double grid_value(const Bits &bits, const GridEncoding &enc) {
    if (bits.size() != static_cast<std::size_t>(enc.value_qubits())) {
        throw std::invalid_argument("grid_value: expected " + std::to_string(enc.value_qubits()) +
                                    " bits, got " + std::to_string(bits.size()));
    }
    double sum = 0.0;
    for (std::size_t q = 0; q < bits.size(); ++q) {
        if (bits[q]) {
            sum += std::ldexp(1.0, static_cast<int>(q) - enc.m1);
        }
    }
    return sum - enc.bias();
}

double unify(double zeta, const GridEncoding &enc) {
    const double b = enc.bias();
    if (zeta < -b - 1e-12 || zeta > b + 1e-12) {
        throw std::out_of_range("unify: value outside [-bias, +bias]");
    }
    return (zeta + b) / enc.span();
}

double de_unify(double unified, const GridEncoding &enc) {
    return unified * enc.span() - enc.bias();
}

ErrorDistribution ErrorDistribution::normal(double mean, double stddev) {
    ErrorDistribution d{{NormalComponent{1.0, mean, stddev}}};
    d.validate();
    return d;
}

ErrorDistribution ErrorDistribution::mixture(std::vector<NormalComponent> components) {
    ErrorDistribution d{std::move(components)};
    d.validate();
    return d;
}

void ErrorDistribution::validate() const {
    if (components.empty()) {
        throw std::invalid_argument("error distribution has no components");
    }
    double total = 0.0;
    for (const auto &c : components) {
        if (!(c.stddev > 0.0) || !std::isfinite(c.stddev)) {
            throw std::invalid_argument("error distribution: stddev must be positive");
        }
        if (c.weight < 0.0 || !std::isfinite(c.mean)) {
            throw std::invalid_argument("error distribution: invalid component");
        }
        total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw std::invalid_argument("error distribution: mixture weights must sum to 1");
    }
}

double ErrorDistribution::cdf(double x) const {
    double v = 0.0;
    for (const auto &c : components) {
        v += c.weight * 0.5 * std::erfc(-(x - c.mean) / (c.stddev * std::numbers::sqrt2));
    }
    return v;
}

double ErrorDistribution::pdf(double x) const {
    double v = 0.0;
    for (const auto &c : components) {
        const double z = (x - c.mean) / c.stddev;
        v += c.weight * std::exp(-0.5 * z * z) / (c.stddev * std::sqrt(2.0 * std::numbers::pi));
    }
    return v;
}

std::vector<double> discretize_distribution(const ErrorDistribution &dist, const GridEncoding &enc) {
    dist.validate();
    enc.validate();
    const double h = enc.step() / 2.0;
    std::vector<double> p(enc.grid_size());
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double g = enc.value_at(i);
        p[i] = std::max(0.0, dist.cdf(g + h) - dist.cdf(g - h));
        total += p[i];
    }
    if (!(total > 1e-300)) {
        throw std::domain_error("discretize_distribution: no probability mass on the grid range");
    }
    for (auto &v : p) {
        v /= total;
    }
    return p;
}

double unified_mean(const std::vector<double> &probs, const GridEncoding &enc) {
    if (probs.size() != enc.grid_size()) {
        throw std::invalid_argument("unified_mean: probability/encoding size mismatch");
    }
    double m = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        m += probs[i] * unify(enc.value_at(i), enc);
    }
    return m;
}

qsim::Circuit build_preparation(const std::vector<double> &probs, const GridEncoding &enc) {
    enc.validate();
    if (probs.size() != enc.grid_size()) {
        throw std::invalid_argument("build_preparation: probability vector does not match encoding");
    }
    double total = 0.0;
    std::vector<double> amps(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] < 0.0) {
            throw std::invalid_argument("build_preparation: negative probability");
        }
        total += probs[i];
        amps[i] = std::sqrt(probs[i]);
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw std::invalid_argument("build_preparation: probabilities must sum to 1");
    }
    const int k = enc.value_qubits();
    std::vector<int> value_qubits(static_cast<std::size_t>(k));
    for (int q = 0; q < k; ++q) {
        value_qubits[static_cast<std::size_t>(q)] = q;
    }
    qsim::Circuit c{k + 1, {}};
    c.append(qsim::amplitude_loader(amps, value_qubits));
    c.num_qubits = k + 1;
    // R: rotate the ancilla by 2 asin(sqrt(unified value)) for each grid point.
    for (std::uint64_t z = 0; z < probs.size(); ++z) {
        if (probs[z] == 0.0) {
            continue;
        }
        const double u = unify(enc.value_at(z), enc);
        const double angle = 2.0 * std::asin(std::sqrt(u));
        if (angle == 0.0) {
            continue;
        }
        std::vector<bool> vals(static_cast<std::size_t>(k));
        for (int q = 0; q < k; ++q) {
            vals[static_cast<std::size_t>(q)] = ((z >> q) & 1U) != 0;
        }
        c.add(qsim::controlled(qsim::ry(k, angle), value_qubits, vals));
    }
    return c;
}

qsim::Circuit build_preparation(const ErrorDistribution &dist, const GridEncoding &enc) {
    return build_preparation(discretize_distribution(dist, enc), enc);
}

qsim::Circuit grover_operator(const qsim::Circuit &preparation, int ancilla) {
    const int n = preparation.num_qubits;
    if (ancilla < 0 || ancilla >= n) {
        throw std::out_of_range("grover_operator: ancilla outside register");
    }
    qsim::Circuit q{n, {}};
    q.add(qsim::phase(ancilla, std::numbers::pi));
    q.append(preparation.inverse());
    std::vector<int> all(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        all[static_cast<std::size_t>(i)] = i;
    }
    std::vector<double> phases(std::size_t{1} << n, 0.0);
    phases[0] = std::numbers::pi;
    q.add(qsim::diagonal(all, std::move(phases)));
    q.append(preparation);
    return q;
}

namespace {

double log_likelihood(double theta, const std::vector<std::size_t> &powers,
                      const std::vector<double> &hits, std::size_t shots) {
    constexpr double kFloor = 1e-300;
    double ll = 0.0;
    for (std::size_t j = 0; j < powers.size(); ++j) {
        const double angle = (2.0 * static_cast<double>(powers[j]) + 1.0) * theta;
        const double s = std::sin(angle);
        const double p1 = s * s;
        const double h = hits[j] * static_cast<double>(shots);
        const double m = (1.0 - hits[j]) * static_cast<double>(shots);
        if (h > 0.0) {
            ll += h * std::log(std::max(p1, kFloor));
        }
        if (m > 0.0) {
            ll += m * std::log(std::max(1.0 - p1, kFloor));
        }
    }
    return ll;
}

double maximize_likelihood(const std::vector<std::size_t> &powers, const std::vector<double> &hits,
                           std::size_t shots) {
    const double half_pi = std::numbers::pi / 2.0;
    const std::size_t max_power = powers.empty() ? 1 : powers.back();
    const std::size_t grid = std::max<std::size_t>(4096, 64 * (2 * max_power + 1));
    double best_theta = 0.0;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i <= grid; ++i) {
        const double t = half_pi * static_cast<double>(i) / static_cast<double>(grid);
        const double ll = log_likelihood(t, powers, hits, shots);
        if (ll > best) {
            best = ll;
            best_theta = t;
        }
    }
    // Golden-section refinement inside the winning grid cell pair.
    const double cell = half_pi / static_cast<double>(grid);
    double lo = std::max(0.0, best_theta - cell), hi = std::min(half_pi, best_theta + cell);
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = log_likelihood(x1, powers, hits, shots), f2 = log_likelihood(x2, powers, hits, shots);
    for (int it = 0; it < 80; ++it) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = log_likelihood(x2, powers, hits, shots);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = log_likelihood(x1, powers, hits, shots);
        }
    }
    const double refined = 0.5 * (lo + hi);
    return log_likelihood(refined, powers, hits, shots) >= best ? refined : best_theta;
}

} // namespace

AmplitudeEstimate estimate_amplitude(const qsim::Circuit &preparation, int ancilla, int a,
                                     EstimationMode mode, std::size_t shots, std::uint64_t seed) {
    if (a < 1) {
        throw std::invalid_argument("estimate_amplitude: need at least one power (a >= 1)");
    }
    if (mode == EstimationMode::Sampled && shots == 0) {
        throw std::invalid_argument("estimate_amplitude: sampled mode needs shots > 0");
    }
    const auto q = grover_operator(preparation, ancilla);
    qsim::QuantumState state(preparation.num_qubits);
    qsim::apply(state, preparation);

    AmplitudeEstimate out;
    out.shots = mode == EstimationMode::Sampled ? shots : 1;
    std::size_t applied = 0;
    for (int j = 0; j < a; ++j) {
        const std::size_t power = std::size_t{1} << j;
        while (applied < power) {
            qsim::apply(state, q);
            ++applied;
        }
        const double p1 = qsim::marginal_probabilities(state, {ancilla})[1];
        double frac = p1;
        if (mode == EstimationMode::Sampled) {
            std::mt19937_64 rng(split_seed(seed, static_cast<std::uint64_t>(j)));
            std::binomial_distribution<std::size_t> bin(shots, std::clamp(p1, 0.0, 1.0));
            frac = static_cast<double>(bin(rng)) / static_cast<double>(shots);
        }
        out.powers.push_back(power);
        out.hit_fraction.push_back(frac);
    }
    out.theta = maximize_likelihood(out.powers, out.hit_fraction, out.shots);
    const double s = std::sin(out.theta);
    out.estimate = s * s;
    return out;
}

AmplitudeEstimate estimate_mean(const ErrorDistribution &dist, const GridEncoding &enc, int a,
                                EstimationMode mode, std::size_t shots, std::uint64_t seed) {
    const auto prep = build_preparation(dist, enc);
    return estimate_amplitude(prep, enc.value_qubits(), a, mode, shots, seed);
}

MonteCarloComparison compare_with_monte_carlo(const ErrorDistribution &dist, const GridEncoding &enc,
                                              int a, EstimationMode mode, std::size_t shots,
                                              std::uint64_t seed) {
    const auto probs = discretize_distribution(dist, enc);
    MonteCarloComparison cmp;
    cmp.exact = unified_mean(probs, enc);
    cmp.uqae_estimate = estimate_mean(dist, enc, a, mode, shots, seed).estimate;
    cmp.uqae_error = std::abs(cmp.uqae_estimate - cmp.exact);
    cmp.mc_draws = std::size_t{1} << (a + 1);
    std::mt19937_64 rng(split_seed(seed, 0xC1A55ULL));
    std::discrete_distribution<std::size_t> pick(probs.begin(), probs.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < cmp.mc_draws; ++i) {
        sum += unify(enc.value_at(pick(rng)), enc);
    }
    cmp.mc_estimate = sum / static_cast<double>(cmp.mc_draws);
    cmp.mc_error = std::abs(cmp.mc_estimate - cmp.exact);
    return cmp;
}

double ScenarioSet::total_weight() const {
    double t = 0.0;
    for (const auto &s : scenarios) {
        t += s.weight;
    }
    return t;
}

std::uint64_t split_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

ScenarioSet generate_scenarios(const std::vector<ResUncertainty> &res, const ScenarioMode &mode,
                               std::size_t cap) {
    if (res.empty()) {
        throw std::invalid_argument("generate_scenarios: need at least one RES");
    }
    ScenarioSet set;
    set.mode = mode;
    std::size_t total = 1;
    for (const auto &r : res) {
        r.encoding.validate();
        const std::size_t g = r.encoding.grid_size();
        if (total > cap / g) {
            throw std::length_error("generate_scenarios: scenario product exceeds cap of " +
                                    std::to_string(cap));
        }
        total *= g;
        set.per_res_values.push_back(r.encoding.grid());
        set.per_res_weights.push_back(discretize_distribution(r.distribution, r.encoding));
    }

    // Mixed-radix scenario index with RES 0 most significant.
    auto decode = [&](std::size_t idx) {
        std::vector<std::size_t> digits(res.size());
        for (std::size_t r = res.size(); r-- > 0;) {
            const std::size_t g = set.per_res_values[r].size();
            digits[r] = idx % g;
            idx /= g;
        }
        return digits;
    };
    auto make = [&](const std::vector<std::size_t> &digits, double w) {
        Scenario s;
        s.weight = w;
        for (std::size_t r = 0; r < digits.size(); ++r) {
            s.errors.push_back(set.per_res_values[r][digits[r]]);
        }
        return s;
    };

    if (mode.kind == WeightMode::Exact) {
        set.scenarios.reserve(total);
        for (std::size_t i = 0; i < total; ++i) {
            const auto d = decode(i);
            double w = 1.0;
            for (std::size_t r = 0; r < d.size(); ++r) {
                w *= set.per_res_weights[r][d[r]];
            }
            if (w > 0.0) {
                set.scenarios.push_back(make(d, w));
            }
        }
        return set;
    }

    if (mode.shots == 0) {
        throw std::invalid_argument("generate_scenarios: sampled mode needs shots > 0");
    }
    std::vector<std::vector<std::uint64_t>> draws;
    for (std::size_t r = 0; r < res.size(); ++r) {
        std::vector<double> amps;
        for (double p : set.per_res_weights[r]) {
            amps.push_back(std::sqrt(p));
        }
        const auto state = qsim::prepare_amplitudes(amps, 1e-9);
        std::vector<int> reg(static_cast<std::size_t>(res[r].encoding.value_qubits()));
        for (std::size_t q = 0; q < reg.size(); ++q) {
            reg[q] = static_cast<int>(q);
        }
        std::mt19937_64 rng(split_seed(mode.seed, r));
        draws.push_back(qsim::sample_indices(state, reg, mode.shots, rng));
        std::vector<double> freq(set.per_res_values[r].size(), 0.0);
        for (auto v : draws.back()) {
            freq[v] += 1.0 / static_cast<double>(mode.shots);
        }
        set.per_res_weights[r] = std::move(freq);
    }
    std::map<std::size_t, std::size_t> joint;
    for (std::size_t shot = 0; shot < mode.shots; ++shot) {
        std::size_t idx = 0;
        for (std::size_t r = 0; r < res.size(); ++r) {
            idx = idx * set.per_res_values[r].size() + draws[r][shot];
        }
        ++joint[idx];
    }
    for (const auto &[idx, count] : joint) {
        set.scenarios.push_back(make(decode(idx), static_cast<double>(count) / static_cast<double>(mode.shots)));
    }
    return set;
}

} // namespace qsed::uqae
