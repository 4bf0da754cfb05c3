#include "qsed/dispatch.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

namespace qsed::dispatch {

namespace {

std::string label(const std::string &kind, std::size_t index, const std::string &name) {
    std::string s = kind + " " + std::to_string(index);
    if (!name.empty()) {
        s += " '" + name + "'";
    }
    return s;
}

[[noreturn]] void reject(const std::string &where, const std::string &what) {
    throw std::invalid_argument(where + ": " + what);
}

} // namespace

void DispatchCase::validate() const {
    if (horizon < 1) {
        reject("case", "horizon must be >= 1");
    }
    if (!(base_mva > 0.0)) {
        reject("case", "base_mva must be positive");
    }
    if (buses.empty()) {
        reject("case", "no buses");
    }
    const auto T = static_cast<std::size_t>(horizon);
    const int nb = static_cast<int>(buses.size());
    auto check_bus = [&](const std::string &where, int bus) {
        if (bus < 0 || bus >= nb) {
            reject(where, "bus index " + std::to_string(bus) + " out of range");
        }
    };
    for (std::size_t i = 0; i < buses.size(); ++i) {
        const auto where = label("bus", i, buses[i].name);
        if (buses[i].load_mw.size() != T) {
            reject(where, "load_mw has " + std::to_string(buses[i].load_mw.size()) + " entries, expected " +
                              std::to_string(T));
        }
        for (double v : buses[i].load_mw) {
            if (!std::isfinite(v) || v < 0.0) {
                reject(where, "load must be finite and non-negative");
            }
        }
    }
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto &l = lines[i];
        const auto where = label("line", i, l.name);
        check_bus(where, l.from);
        check_bus(where, l.to);
        if (l.from == l.to) {
            reject(where, "endpoints coincide");
        }
        if (!(l.reactance_pu > 0.0)) {
            reject(where, "reactance must be positive");
        }
        if (!(l.limit_mw >= 0.0)) {
            reject(where, "flow limit must be non-negative");
        }
    }
    for (std::size_t i = 0; i < generators.size(); ++i) {
        const auto &g = generators[i];
        const auto where = label("generator", i, g.name);
        check_bus(where, g.bus);
        if (!(g.p_min_mw >= 0.0)) {
            reject(where, "p_min_mw must be non-negative");
        }
        if (g.p_min_mw > g.p_max_mw) {
            reject(where, "p_min_mw exceeds p_max_mw");
        }
        if (!(g.ramp_mw_per_h >= 0.0)) {
            reject(where, "ramp must be non-negative");
        }
        if (g.startup_cost < 0.0 || g.no_load_cost < 0.0 || g.marginal_cost < 0.0) {
            reject(where, "costs must be non-negative");
        }
        if (g.initial_output_mw && (*g.initial_output_mw < 0.0 || *g.initial_output_mw > g.p_max_mw)) {
            reject(where, "initial output outside [0, p_max_mw]");
        }
    }
    for (std::size_t i = 0; i < storages.size(); ++i) {
        const auto &s = storages[i];
        const auto where = label("storage", i, s.name);
        check_bus(where, s.bus);
        if (!(s.energy_mwh > 0.0)) {
            reject(where, "energy capacity must be positive");
        }
        if (!(s.soc_min >= 0.0 && s.soc_min <= s.soc_max && s.soc_max <= 1.0)) {
            reject(where, "SoC bounds must satisfy 0 <= min <= max <= 1");
        }
        if (!(s.initial_soc >= s.soc_min && s.initial_soc <= s.soc_max)) {
            reject(where, "initial SoC outside bounds");
        }
        if (s.charge_max_mw < 0.0 || s.discharge_max_mw < 0.0) {
            reject(where, "power limits must be non-negative");
        }
        if (s.charge_cost < 0.0 || s.discharge_cost < 0.0) {
            reject(where, "costs must be non-negative");
        }
        if (!(s.round_trip_efficiency > 0.0 && s.round_trip_efficiency <= 1.0)) {
            reject(where, "round-trip efficiency must be in (0, 1]");
        }
    }
    for (std::size_t i = 0; i < res_units.size(); ++i) {
        const auto &r = res_units[i];
        const auto where = label("res", i, r.name);
        check_bus(where, r.bus);
        if (!(r.capacity_mw > 0.0)) {
            reject(where, "capacity must be positive");
        }
        if (r.forecast_mw.size() != T) {
            reject(where, "forecast_mw has " + std::to_string(r.forecast_mw.size()) + " entries, expected " +
                              std::to_string(T));
        }
        for (double f : r.forecast_mw) {
            if (!(f >= 0.0 && f <= r.capacity_mw)) {
                reject(where, "forecast outside [0, capacity]");
            }
        }
        try {
            r.distribution.validate();
            r.encoding.validate();
        } catch (const std::exception &e) {
            reject(where, e.what());
        }
    }

    std::vector<std::vector<int>> adj(buses.size());
    for (const auto &l : lines) {
        adj[static_cast<std::size_t>(l.from)].push_back(l.to);
        adj[static_cast<std::size_t>(l.to)].push_back(l.from);
    }
    std::vector<bool> seen(buses.size(), false);
    std::queue<int> q;
    q.push(0);
    seen[0] = true;
    while (!q.empty()) {
        const int u = q.front();
        q.pop();
        for (int v : adj[static_cast<std::size_t>(u)]) {
            if (!seen[static_cast<std::size_t>(v)]) {
                seen[static_cast<std::size_t>(v)] = true;
                q.push(v);
            }
        }
    }
    for (std::size_t i = 0; i < seen.size(); ++i) {
        if (!seen[i]) {
            reject("network", "bus " + std::to_string(i) + " is disconnected");
        }
    }
}

std::vector<uqae::ResUncertainty> DispatchCase::uncertainties() const {
    std::vector<uqae::ResUncertainty> out;
    out.reserve(res_units.size());
    for (const auto &r : res_units) {
        out.push_back({r.distribution, r.encoding});
    }
    return out;
}

const char *to_string(RowKind kind) {
    switch (kind) {
    case RowKind::BalanceLower: return "balance_lower";
    case RowKind::BalanceUpper: return "balance_upper";
    case RowKind::FlowLower: return "flow_lower";
    case RowKind::FlowUpper: return "flow_upper";
    case RowKind::CurtailLimit: return "curtail_limit";
    case RowKind::OutputMin: return "output_min";
    case RowKind::OutputMax: return "output_max";
    case RowKind::RampUp: return "ramp_up";
    case RowKind::RampDown: return "ramp_down";
    case RowKind::SocDynamicsLower: return "soc_dynamics_lower";
    case RowKind::SocDynamicsUpper: return "soc_dynamics_upper";
    case RowKind::SocMin: return "soc_min";
    case RowKind::SocMax: return "soc_max";
    case RowKind::ChargeLimit: return "charge_limit";
    case RowKind::DischargeLimit: return "discharge_limit";
    case RowKind::ModeExclusive: return "mode_exclusive";
    case RowKind::StartupLink: return "startup_link";
    }
    return "unknown";
}

std::string TwoStageProgram::first_stage_name(std::size_t i) const {
    static const char *names[] = {"u", "y", "c", "e"};
    const auto &t = first_stage.at(i);
    return std::string(names[t.kind]) + "[" + std::to_string(t.device) + "," + std::to_string(t.hour) + "]";
}

std::string TwoStageProgram::second_stage_name(std::size_t j) const {
    static const char *names[] = {"p", "ch", "dis", "soc", "curt", "th+", "th-"};
    const auto &t = second_stage.at(j);
    return std::string(names[t.kind]) + "[" + std::to_string(t.device) + "," + std::to_string(t.hour) + "]";
}

long TwoStageProgram::first_stage_index(FirstStageKind kind, int device, int hour) const {
    for (std::size_t i = 0; i < first_stage.size(); ++i) {
        const auto &t = first_stage[i];
        if (t.kind == static_cast<int>(kind) && t.device == device && t.hour == hour) {
            return static_cast<long>(i);
        }
    }
    return -1;
}

long TwoStageProgram::second_stage_index(SecondStageKind kind, int device, int hour) const {
    for (std::size_t j = 0; j < second_stage.size(); ++j) {
        const auto &t = second_stage[j];
        if (t.kind == static_cast<int>(kind) && t.device == device && t.hour == hour) {
            return static_cast<long>(j);
        }
    }
    return -1;
}

namespace {

struct Entry {
    std::size_t index;
    double value;
};

struct RowBuilder {
    std::vector<Entry> first;
    std::vector<Entry> second;
    std::vector<Entry> uncertain;
    double rhs = 0.0;
    RowTag tag;
};

int slack_bus(const DispatchCase &dc) {
    int best = -1;
    for (const auto &g : dc.generators) {
        if (best < 0 || g.bus < best) {
            best = g.bus;
        }
    }
    return best < 0 ? 0 : best;
}

} // namespace

TwoStageProgram compile(const DispatchCase &dc) {
    dc.validate();
    TwoStageProgram prog;
    prog.source = dc;
    const int T = dc.horizon;
    const int nb = static_cast<int>(dc.buses.size());
    const int slack = slack_bus(dc);

    std::vector<double> a;
    for (std::size_t g = 0; g < dc.generators.size(); ++g) {
        const auto &gen = dc.generators[g];
        if (gen.must_run) {
            continue;
        }
        for (int t = 0; t < T; ++t) {
            prog.first_stage.push_back({static_cast<int>(FirstStageKind::Commit), static_cast<int>(g), t});
            a.push_back(gen.no_load_cost + (t == 0 && !gen.initially_on ? gen.startup_cost : 0.0));
        }
        for (int t = 1; t < T; ++t) {
            prog.first_stage.push_back({static_cast<int>(FirstStageKind::Startup), static_cast<int>(g), t});
            a.push_back(gen.startup_cost);
        }
    }
    for (std::size_t s = 0; s < dc.storages.size(); ++s) {
        if (!dc.storages[s].mode_binaries) {
            continue;
        }
        for (int t = 0; t < T; ++t) {
            prog.first_stage.push_back({static_cast<int>(FirstStageKind::ChargeMode), static_cast<int>(s), t});
            a.push_back(0.0);
            prog.first_stage.push_back({static_cast<int>(FirstStageKind::DischargeMode), static_cast<int>(s), t});
            a.push_back(0.0);
        }
    }

    std::vector<double> b;
    auto add_second = [&](SecondStageKind kind, int device, int t, double cost) {
        prog.second_stage.push_back({static_cast<int>(kind), device, t});
        b.push_back(cost);
    };
    for (int t = 0; t < T; ++t) {
        for (std::size_t g = 0; g < dc.generators.size(); ++g) {
            add_second(SecondStageKind::Output, static_cast<int>(g), t, dc.generators[g].marginal_cost);
        }
        for (std::size_t s = 0; s < dc.storages.size(); ++s) {
            add_second(SecondStageKind::Charge, static_cast<int>(s), t, dc.storages[s].charge_cost);
            add_second(SecondStageKind::Discharge, static_cast<int>(s), t, dc.storages[s].discharge_cost);
            add_second(SecondStageKind::Soc, static_cast<int>(s), t, 0.0);
        }
        for (std::size_t r = 0; r < dc.res_units.size(); ++r) {
            add_second(SecondStageKind::Curtail, static_cast<int>(r), t, 0.0);
        }
        for (int i = 0; i < nb; ++i) {
            if (i == slack) {
                continue;
            }
            add_second(SecondStageKind::AnglePos, i, t, 0.0);
            add_second(SecondStageKind::AngleNeg, i, t, 0.0);
        }
    }
    prog.m = a.size();
    prog.n = b.size();
    prog.h = dc.res_units.size() * static_cast<std::size_t>(T);

    auto fs = [&](FirstStageKind k, int dev, int t) { return prog.first_stage_index(k, dev, t); };
    auto ss = [&](SecondStageKind k, int dev, int t) {
        const long j = prog.second_stage_index(k, dev, t);
        if (j < 0) {
            throw std::logic_error("dispatch: missing second-stage variable");
        }
        return static_cast<std::size_t>(j);
    };
    auto xi_index = [&](std::size_t r, int t) { return r * static_cast<std::size_t>(T) + static_cast<std::size_t>(t); };

    std::vector<RowBuilder> rows;
    auto negated = [](RowBuilder r, RowKind kind) {
        for (auto &e : r.first) e.value = -e.value;
        for (auto &e : r.second) e.value = -e.value;
        for (auto &e : r.uncertain) e.value = -e.value;
        r.rhs = -r.rhs;
        r.tag.kind = kind;
        return r;
    };
    // Adds coeff * u_{g,t}; a must-run unit contributes to the rhs instead.
    auto commit_term = [&](RowBuilder &row, int g, int t, double coeff) {
        const auto &gen = dc.generators[static_cast<std::size_t>(g)];
        if (gen.must_run) {
            row.rhs -= coeff;
        } else {
            row.first.push_back({static_cast<std::size_t>(fs(FirstStageKind::Commit, g, t)), coeff});
        }
    };
    // Adds coeff * (flow on line l) in terms of bus angles.
    auto flow_terms = [&](RowBuilder &row, std::size_t l, int t, double coeff) {
        const auto &line = dc.lines[l];
        const double k = coeff * dc.base_mva / line.reactance_pu;
        for (auto [bus, sign] : {std::pair{line.from, 1.0}, std::pair{line.to, -1.0}}) {
            if (bus == slack) {
                continue;
            }
            row.second.push_back({ss(SecondStageKind::AnglePos, bus, t), sign * k});
            row.second.push_back({ss(SecondStageKind::AngleNeg, bus, t), -sign * k});
        }
    };

    for (int t = 0; t < T; ++t) {
        const auto tt = static_cast<std::size_t>(t);
        for (int i = 0; i < nb; ++i) {
            RowBuilder row;
            row.tag = {RowKind::BalanceLower, i, t};
            row.rhs = dc.buses[static_cast<std::size_t>(i)].load_mw[tt];
            for (std::size_t g = 0; g < dc.generators.size(); ++g) {
                if (dc.generators[g].bus == i) {
                    row.second.push_back({ss(SecondStageKind::Output, static_cast<int>(g), t), 1.0});
                }
            }
            for (std::size_t s = 0; s < dc.storages.size(); ++s) {
                if (dc.storages[s].bus == i) {
                    row.second.push_back({ss(SecondStageKind::Discharge, static_cast<int>(s), t), 1.0});
                    row.second.push_back({ss(SecondStageKind::Charge, static_cast<int>(s), t), -1.0});
                }
            }
            for (std::size_t r = 0; r < dc.res_units.size(); ++r) {
                if (dc.res_units[r].bus == i) {
                    row.second.push_back({ss(SecondStageKind::Curtail, static_cast<int>(r), t), -1.0});
                    row.uncertain.push_back({xi_index(r, t), -1.0});
                }
            }
            for (std::size_t l = 0; l < dc.lines.size(); ++l) {
                if (dc.lines[l].from == i) {
                    flow_terms(row, l, t, -1.0);
                } else if (dc.lines[l].to == i) {
                    flow_terms(row, l, t, 1.0);
                }
            }
            rows.push_back(row);
            rows.push_back(negated(row, RowKind::BalanceUpper));
        }
        for (std::size_t l = 0; l < dc.lines.size(); ++l) {
            RowBuilder row;
            row.tag = {RowKind::FlowLower, static_cast<int>(l), t};
            flow_terms(row, l, t, 1.0);
            row.rhs = -dc.lines[l].limit_mw;
            rows.push_back(row);
            RowBuilder up;
            up.tag = {RowKind::FlowUpper, static_cast<int>(l), t};
            flow_terms(up, l, t, -1.0);
            up.rhs = -dc.lines[l].limit_mw;
            rows.push_back(up);
        }
        for (std::size_t r = 0; r < dc.res_units.size(); ++r) {
            RowBuilder row;
            row.tag = {RowKind::CurtailLimit, static_cast<int>(r), t};
            row.second.push_back({ss(SecondStageKind::Curtail, static_cast<int>(r), t), -1.0});
            row.uncertain.push_back({xi_index(r, t), -1.0});
            rows.push_back(row);
        }
        for (std::size_t g = 0; g < dc.generators.size(); ++g) {
            const auto &gen = dc.generators[g];
            const int gi = static_cast<int>(g);
            const auto p = ss(SecondStageKind::Output, gi, t);
            RowBuilder lo;
            lo.tag = {RowKind::OutputMin, gi, t};
            lo.second.push_back({p, 1.0});
            commit_term(lo, gi, t, -gen.p_min_mw);
            rows.push_back(lo);
            RowBuilder hi;
            hi.tag = {RowKind::OutputMax, gi, t};
            hi.second.push_back({p, -1.0});
            commit_term(hi, gi, t, gen.p_max_mw);
            rows.push_back(hi);

            if (gen.ramp_mw_per_h >= gen.p_max_mw) {
                continue;
            }
            const double R = gen.ramp_mw_per_h;
            const double P = gen.p_max_mw;
            if (t > 0) {
                const auto prev = ss(SecondStageKind::Output, gi, t - 1);
                // p_t - p_{t-1} <= R + P (1 - u_{t-1})
                RowBuilder up;
                up.tag = {RowKind::RampUp, gi, t};
                up.second.push_back({p, -1.0});
                up.second.push_back({prev, 1.0});
                up.rhs = -R - P;
                commit_term(up, gi, t - 1, -P);
                rows.push_back(up);
                // p_{t-1} - p_t <= R + P (1 - u_t)
                RowBuilder down;
                down.tag = {RowKind::RampDown, gi, t};
                down.second.push_back({p, 1.0});
                down.second.push_back({prev, -1.0});
                down.rhs = -R - P;
                commit_term(down, gi, t, -P);
                rows.push_back(down);
            } else if (gen.initial_output_mw) {
                const double p0 = *gen.initial_output_mw;
                const double u0 = gen.initially_on ? 1.0 : 0.0;
                RowBuilder up;
                up.tag = {RowKind::RampUp, gi, t};
                up.second.push_back({p, -1.0});
                up.rhs = -R - P * (1.0 - u0) - p0;
                rows.push_back(up);
                RowBuilder down;
                down.tag = {RowKind::RampDown, gi, t};
                down.second.push_back({p, 1.0});
                down.rhs = p0 - R - P;
                commit_term(down, gi, t, -P);
                rows.push_back(down);
            }
        }
        for (std::size_t s = 0; s < dc.storages.size(); ++s) {
            const auto &st = dc.storages[s];
            const int si = static_cast<int>(s);
            const double eta = std::sqrt(st.round_trip_efficiency);
            const auto ch = ss(SecondStageKind::Charge, si, t);
            const auto dis = ss(SecondStageKind::Discharge, si, t);
            const auto soc = ss(SecondStageKind::Soc, si, t);
            RowBuilder dyn;
            dyn.tag = {RowKind::SocDynamicsLower, si, t};
            dyn.second.push_back({soc, 1.0});
            dyn.second.push_back({ch, -eta});
            dyn.second.push_back({dis, 1.0 / eta});
            if (t > 0) {
                dyn.second.push_back({ss(SecondStageKind::Soc, si, t - 1), -1.0});
            } else {
                dyn.rhs = st.initial_soc * st.energy_mwh;
            }
            rows.push_back(dyn);
            rows.push_back(negated(dyn, RowKind::SocDynamicsUpper));
            RowBuilder smin;
            smin.tag = {RowKind::SocMin, si, t};
            smin.second.push_back({soc, 1.0});
            smin.rhs = st.soc_min * st.energy_mwh;
            rows.push_back(smin);
            RowBuilder smax;
            smax.tag = {RowKind::SocMax, si, t};
            smax.second.push_back({soc, -1.0});
            smax.rhs = -st.soc_max * st.energy_mwh;
            rows.push_back(smax);
            RowBuilder cl;
            cl.tag = {RowKind::ChargeLimit, si, t};
            cl.second.push_back({ch, -1.0});
            RowBuilder dl;
            dl.tag = {RowKind::DischargeLimit, si, t};
            dl.second.push_back({dis, -1.0});
            if (st.mode_binaries) {
                cl.first.push_back({static_cast<std::size_t>(fs(FirstStageKind::ChargeMode, si, t)), st.charge_max_mw});
                dl.first.push_back(
                    {static_cast<std::size_t>(fs(FirstStageKind::DischargeMode, si, t)), st.discharge_max_mw});
            } else {
                cl.rhs = -st.charge_max_mw;
                dl.rhs = -st.discharge_max_mw;
            }
            rows.push_back(cl);
            rows.push_back(dl);
            if (st.mode_binaries) {
                RowBuilder ex;
                ex.tag = {RowKind::ModeExclusive, si, t};
                ex.first.push_back({static_cast<std::size_t>(fs(FirstStageKind::ChargeMode, si, t)), -1.0});
                ex.first.push_back({static_cast<std::size_t>(fs(FirstStageKind::DischargeMode, si, t)), -1.0});
                ex.rhs = -1.0;
                rows.push_back(ex);
            }
        }
        if (t > 0) {
            for (std::size_t g = 0; g < dc.generators.size(); ++g) {
                if (dc.generators[g].must_run) {
                    continue;
                }
                const int gi = static_cast<int>(g);
                RowBuilder link;
                link.tag = {RowKind::StartupLink, gi, t};
                link.first.push_back({static_cast<std::size_t>(fs(FirstStageKind::Startup, gi, t)), 1.0});
                link.first.push_back({static_cast<std::size_t>(fs(FirstStageKind::Commit, gi, t)), -1.0});
                link.first.push_back({static_cast<std::size_t>(fs(FirstStageKind::Commit, gi, t - 1)), 1.0});
                rows.push_back(link);
            }
        }
    }

    const auto nr = static_cast<Eigen::Index>(rows.size());
    prog.a = Eigen::Map<const VectorXd>(a.data(), static_cast<Eigen::Index>(a.size()));
    prog.b = Eigen::Map<const VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
    prog.B = MatrixXd::Zero(nr, static_cast<Eigen::Index>(prog.m));
    prog.C = MatrixXd::Zero(nr, static_cast<Eigen::Index>(prog.n));
    prog.A = MatrixXd::Zero(nr, static_cast<Eigen::Index>(prog.h));
    prog.d = VectorXd::Zero(nr);
    for (Eigen::Index i = 0; i < nr; ++i) {
        const auto &row = rows[static_cast<std::size_t>(i)];
        for (const auto &e : row.first) prog.B(i, static_cast<Eigen::Index>(e.index)) += e.value;
        for (const auto &e : row.second) prog.C(i, static_cast<Eigen::Index>(e.index)) += e.value;
        for (const auto &e : row.uncertain) prog.A(i, static_cast<Eigen::Index>(e.index)) += e.value;
        prog.d[i] = row.rhs;
        prog.rows.push_back(row.tag);
    }
    return prog;
}

std::vector<double> apply_error(const ResUnit &res, double zeta) {
    std::vector<double> out;
    out.reserve(res.forecast_mw.size());
    for (double f : res.forecast_mw) {
        out.push_back(std::clamp(f + zeta * res.capacity_mw, 0.0, res.capacity_mw));
    }
    return out;
}

VectorXd realize(const TwoStageProgram &prog, const uqae::Scenario &scenario) {
    const auto &units = prog.source.res_units;
    if (scenario.errors.size() != units.size()) {
        throw std::invalid_argument("realize: scenario has " + std::to_string(scenario.errors.size()) +
                                    " errors for " + std::to_string(units.size()) + " RES units");
    }
    VectorXd xi(static_cast<Eigen::Index>(prog.h));
    const auto T = static_cast<std::size_t>(prog.source.horizon);
    for (std::size_t r = 0; r < units.size(); ++r) {
        const auto out = apply_error(units[r], scenario.errors[r]);
        for (std::size_t t = 0; t < T; ++t) {
            xi[static_cast<Eigen::Index>(r * T + t)] = out[t];
        }
    }
    return xi;
}

VectorXd block_rhs(const TwoStageProgram &prog, const VectorXd &xi, const VectorXd &z0) {
    VectorXd rhs = prog.d;
    if (prog.h > 0) {
        rhs += prog.A * xi;
    }
    if (prog.m > 0) {
        rhs -= prog.B * z0;
    }
    return rhs;
}

lp::LinearProgram recourse_lp(const TwoStageProgram &prog, const VectorXd &rhs) {
    return lp::LinearProgram::nonnegative(lp::Sense::Minimize, prog.b, prog.C, rhs,
                                          std::vector<lp::RowSense>(prog.num_rows(), lp::RowSense::GreaterEqual));
}

FirstStageEvaluation evaluate_first_stage(const TwoStageProgram &prog, const uqae::ScenarioSet &set,
                                          const Bits &z0) {
    if (z0.size() != prog.m) {
        throw std::invalid_argument("evaluate_first_stage: z0 has wrong dimension");
    }
    const VectorXd z = to_vector(z0);
    FirstStageEvaluation ev;
    ev.first_stage_cost = prog.m > 0 ? prog.a.dot(z) : 0.0;
    ev.feasible = true;
    for (const auto &sc : set.scenarios) {
        const auto out = lp::solve(recourse_lp(prog, block_rhs(prog, realize(prog, sc), z)));
        ScenarioSolution sol;
        sol.status = out.status;
        if (out.status == lp::LpStatus::Optimal) {
            sol.cost = out.objective;
            sol.x = out.primal;
            ev.expected_recourse += sc.weight * out.objective;
        } else if (out.status == lp::LpStatus::Infeasible) {
            ev.feasible = false;
        } else {
            throw std::runtime_error("evaluate_first_stage: recourse LP " +
                                     std::string(out.status == lp::LpStatus::Unbounded ? "unbounded" : "failed") +
                                     ": " + out.message);
        }
        ev.scenarios.push_back(std::move(sol));
    }
    ev.total = ev.first_stage_cost + ev.expected_recourse;
    return ev;
}

namespace {

FirstStageEvaluation evaluate_monolithic(const TwoStageProgram &prog, const uqae::ScenarioSet &set,
                                         const Bits &z0) {
    const VectorXd z = to_vector(z0);
    const auto S = static_cast<Eigen::Index>(set.size());
    const auto n = static_cast<Eigen::Index>(prog.n);
    const auto r = static_cast<Eigen::Index>(prog.num_rows());
    lp::LinearProgram big;
    big.sense = lp::Sense::Minimize;
    big.objective = VectorXd(S * n);
    big.constraints = MatrixXd::Zero(S * r, S * n);
    big.rhs = VectorXd(S * r);
    for (Eigen::Index s = 0; s < S; ++s) {
        const auto &sc = set.scenarios[static_cast<std::size_t>(s)];
        big.objective.segment(s * n, n) = sc.weight * prog.b;
        big.constraints.block(s * r, s * n, r, n) = prog.C;
        big.rhs.segment(s * r, r) = block_rhs(prog, realize(prog, sc), z);
    }
    big.row_senses.assign(static_cast<std::size_t>(S * r), lp::RowSense::GreaterEqual);
    big.lower = VectorXd::Zero(S * n);
    big.upper = VectorXd::Constant(S * n, lp::kInfinity);
    const auto out = lp::solve(big);

    FirstStageEvaluation ev;
    ev.first_stage_cost = prog.m > 0 ? prog.a.dot(z) : 0.0;
    ev.feasible = out.status == lp::LpStatus::Optimal;
    if (out.status == lp::LpStatus::Failed || out.status == lp::LpStatus::Unbounded) {
        throw std::runtime_error("extensive_form: monolithic LP did not solve: " + out.message);
    }
    if (ev.feasible) {
        ev.expected_recourse = out.objective;
        for (Eigen::Index s = 0; s < S; ++s) {
            ScenarioSolution sol;
            sol.status = lp::LpStatus::Optimal;
            sol.x = out.primal.segment(s * n, n);
            sol.cost = prog.b.dot(sol.x);
            ev.scenarios.push_back(std::move(sol));
        }
    }
    ev.total = ev.first_stage_cost + ev.expected_recourse;
    return ev;
}

} // namespace

ExtensiveFormResult extensive_form(const TwoStageProgram &prog, const uqae::ScenarioSet &set,
                                   const ExtensiveFormOptions &opts) {
    if (prog.m > opts.max_first_stage) {
        throw std::length_error("extensive_form: " + std::to_string(prog.m) + " first-stage binaries exceed cap " +
                                std::to_string(opts.max_first_stage));
    }
    if (set.size() * prog.n > opts.max_size) {
        throw std::length_error("extensive_form: S*n = " + std::to_string(set.size() * prog.n) + " exceeds cap " +
                                std::to_string(opts.max_size));
    }
    ExtensiveFormResult best;
    const std::uint64_t count = std::uint64_t{1} << prog.m;
    for (std::uint64_t k = 0; k < count; ++k) {
        const Bits z0 = bits_from_index(k, prog.m);
        ++best.assignments_checked;
        auto ev = opts.monolithic ? evaluate_monolithic(prog, set, z0) : evaluate_first_stage(prog, set, z0);
        if (!ev.feasible) {
            continue;
        }
        if (!best.feasible || ev.total < best.objective - 1e-12) {
            best.feasible = true;
            best.objective = ev.total;
            best.z0 = z0;
            best.evaluation = std::move(ev);
        }
    }
    return best;
}

ScheduleReport decode_schedule(const TwoStageProgram &prog, const Bits &z0, const VectorXd &x) {
    if (z0.size() != prog.m || static_cast<std::size_t>(x.size()) != prog.n) {
        throw std::invalid_argument("decode_schedule: dimension mismatch (z0 " + std::to_string(z0.size()) + "/" +
                                    std::to_string(prog.m) + ", x " + std::to_string(x.size()) + "/" +
                                    std::to_string(prog.n) + ")");
    }
    const auto &dc = prog.source;
    const auto T = static_cast<std::size_t>(dc.horizon);
    ScheduleReport rep;
    rep.commitment.assign(dc.generators.size(), std::vector<int>(T, 0));
    rep.output_mw.assign(dc.generators.size(), std::vector<double>(T, 0.0));
    rep.storage_mw.assign(dc.storages.size(), std::vector<double>(T, 0.0));
    rep.soc_mwh.assign(dc.storages.size(), std::vector<double>(T, 0.0));
    rep.curtail_mw.assign(dc.res_units.size(), std::vector<double>(T, 0.0));
    rep.flow_mw.assign(dc.lines.size(), std::vector<double>(T, 0.0));
    for (std::size_t g = 0; g < dc.generators.size(); ++g) {
        if (dc.generators[g].must_run) {
            std::fill(rep.commitment[g].begin(), rep.commitment[g].end(), 1);
        }
    }

    for (std::size_t i = 0; i < prog.m; ++i) {
        const auto &tag = prog.first_stage[i];
        const auto dev = static_cast<std::size_t>(tag.device);
        const auto t = static_cast<std::size_t>(tag.hour);
        if (!z0[i]) {
            continue;
        }
        switch (static_cast<FirstStageKind>(tag.kind)) {
        case FirstStageKind::Commit: {
            const auto &gen = dc.generators[dev];
            rep.commitment[dev][t] = 1;
            rep.no_load_cost += gen.no_load_cost;
            if (t == 0 && !gen.initially_on) {
                rep.startup_cost += gen.startup_cost;
            }
            break;
        }
        case FirstStageKind::Startup: rep.startup_cost += dc.generators[dev].startup_cost; break;
        default: break;
        }
    }

    std::vector<std::vector<double>> angle(dc.buses.size(), std::vector<double>(T, 0.0));
    for (std::size_t j = 0; j < prog.n; ++j) {
        const auto &tag = prog.second_stage[j];
        const auto dev = static_cast<std::size_t>(tag.device);
        const auto t = static_cast<std::size_t>(tag.hour);
        const double v = x[static_cast<Eigen::Index>(j)];
        switch (static_cast<SecondStageKind>(tag.kind)) {
        case SecondStageKind::Output:
            rep.output_mw[dev][t] = v;
            rep.energy_cost += dc.generators[dev].marginal_cost * v;
            break;
        case SecondStageKind::Charge:
            rep.storage_mw[dev][t] -= v;
            rep.storage_cost += dc.storages[dev].charge_cost * v;
            break;
        case SecondStageKind::Discharge:
            rep.storage_mw[dev][t] += v;
            rep.storage_cost += dc.storages[dev].discharge_cost * v;
            break;
        case SecondStageKind::Soc: rep.soc_mwh[dev][t] = v; break;
        case SecondStageKind::Curtail: rep.curtail_mw[dev][t] = v; break;
        case SecondStageKind::AnglePos: angle[dev][t] += v; break;
        case SecondStageKind::AngleNeg: angle[dev][t] -= v; break;
        }
    }
    for (std::size_t l = 0; l < dc.lines.size(); ++l) {
        const auto &line = dc.lines[l];
        for (std::size_t t = 0; t < T; ++t) {
            rep.flow_mw[l][t] = dc.base_mva *
                                (angle[static_cast<std::size_t>(line.from)][t] - angle[static_cast<std::size_t>(line.to)][t]) /
                                line.reactance_pu;
        }
    }
    rep.first_stage_cost = rep.startup_cost + rep.no_load_cost;
    rep.second_stage_cost = rep.energy_cost + rep.storage_cost;
    rep.total_cost = rep.first_stage_cost + rep.second_stage_cost;
    return rep;
}

double expected_total(const TwoStageProgram &prog, const Bits &z0, const std::vector<VectorXd> &xs,
                      const std::vector<double> &weights) {
    if (xs.size() != weights.size()) {
        throw std::invalid_argument("expected_total: scenario count mismatch");
    }
    double first = 0.0;
    double second = 0.0;
    for (std::size_t s = 0; s < xs.size(); ++s) {
        const auto rep = decode_schedule(prog, z0, xs[s]);
        first = rep.first_stage_cost;
        second += weights[s] * rep.second_stage_cost;
    }
    if (xs.empty()) {
        first = decode_schedule(prog, z0, VectorXd::Zero(static_cast<Eigen::Index>(prog.n))).first_stage_cost;
    }
    return first + second;
}

} // namespace qsed::dispatch
