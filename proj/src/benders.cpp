#include "qsed/benders.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <stdexcept>
#include <thread>

namespace qsed::benders {

SubproblemResult solve_subproblem(const dispatch::TwoStageProgram &prog, const VectorXd &xi, const Bits &z0,
                                  std::size_t scenario, std::size_t trial) {
    if (z0.size() != prog.m) {
        throw std::invalid_argument("solve_subproblem: z0 has wrong dimension");
    }
    VectorXd base = prog.d;
    if (prog.h > 0) {
        base += prog.A * xi;
    }
    const VectorXd z = to_vector(z0);
    const VectorXd obj = prog.m > 0 ? VectorXd(base - prog.B * z) : base;
    const auto dual_lp = lp::LinearProgram::nonnegative(
        lp::Sense::Maximize, obj, prog.C.transpose(), prog.b,
        std::vector<lp::RowSense>(prog.n, lp::RowSense::LessEqual));
    const auto out = lp::solve(dual_lp);
    auto form_of = [&](const VectorXd &u) {
        qubo::AffineForm f;
        f.constant = base.dot(u);
        f.coeffs = prog.m > 0 ? VectorXd(-(prog.B.transpose() * u)) : VectorXd();
        return f;
    };
    switch (out.status) {
    case lp::LpStatus::Optimal: {
        OptimalityCut cut;
        cut.scenario = scenario;
        cut.dual = out.primal;
        cut.form = form_of(out.primal);
        cut.value = out.objective;
        return cut;
    }
    case lp::LpStatus::Unbounded: {
        const double scale = out.ray.lpNorm<Eigen::Infinity>();
        if (!(scale > 0.0)) {
            throw std::runtime_error("solve_subproblem: zero ray");
        }
        FeasibilityCut cut;
        cut.scenario = scenario;
        cut.trial = trial;
        cut.ray = out.ray / scale;
        cut.form = form_of(cut.ray);
        return cut;
    }
    default:
        throw std::logic_error("solve_subproblem: dual recourse LP " +
                               std::string(out.status == lp::LpStatus::Infeasible ? "infeasible" : "failed") +
                               " for scenario " + std::to_string(scenario) + ": " + out.message);
    }
}

qubo::AffineForm aggregate_optimality(const std::vector<OptimalityCut> &cuts, const std::vector<double> &weights) {
    if (cuts.size() != weights.size()) {
        throw std::invalid_argument("aggregate_optimality: one cut per scenario required (" +
                                    std::to_string(cuts.size()) + " cuts, " + std::to_string(weights.size()) +
                                    " weights)");
    }
    if (cuts.empty()) {
        throw std::invalid_argument("aggregate_optimality: no cuts");
    }
    qubo::AffineForm agg;
    agg.coeffs = VectorXd::Zero(cuts.front().form.coeffs.size());
    std::vector<bool> seen(cuts.size(), false);
    for (std::size_t s = 0; s < cuts.size(); ++s) {
        const auto id = cuts[s].scenario;
        if (id >= cuts.size() || seen[id]) {
            throw std::invalid_argument("aggregate_optimality: missing or repeated scenario cut");
        }
        seen[id] = true;
        agg.constant += weights[id] * cuts[s].form.constant;
        agg.coeffs += weights[id] * cuts[s].form.coeffs;
    }
    return agg;
}

const char *to_string(MasterBackend b) {
    switch (b) {
    case MasterBackend::IlpOracle: return "ilp-oracle";
    case MasterBackend::QuboExact: return "qubo-exact";
    case MasterBackend::QuboQaoa: return "qubo-qaoa";
    case MasterBackend::QuboAnneal: return "qubo-anneal";
    }
    return "unknown";
}

MasterBackend master_from_string(const std::string &s) {
    for (auto b : {MasterBackend::IlpOracle, MasterBackend::QuboExact, MasterBackend::QuboQaoa,
                   MasterBackend::QuboAnneal}) {
        if (s == to_string(b)) {
            return b;
        }
    }
    throw std::invalid_argument("unknown master backend '" + s + "'");
}

bool solve_master_oracle(const qubo::MasterProblem &mp, Bits &z0, double &objective) {
    const auto m = mp.m();
    if (m > 24) {
        throw std::length_error("ilp-oracle master: more than 24 first-stage binaries");
    }
    bool found = false;
    for (std::uint64_t k = 0; k < (std::uint64_t{1} << m); ++k) {
        const Bits cand = bits_from_index(k, m);
        const VectorXd z = to_vector(cand);
        bool ok = true;
        for (const auto &f : mp.feasibility) {
            if (f(z) > 1e-9) {
                ok = false;
                break;
            }
        }
        if (!ok) {
            continue;
        }
        double eta = 0.0;
        for (const auto &g : mp.optimality) {
            eta = std::max(eta, g(z));
        }
        const double obj = (m > 0 ? mp.a.dot(z) : 0.0) + eta;
        if (!found || obj < objective - 1e-12) {
            found = true;
            objective = obj;
            z0 = cand;
        }
    }
    return found;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
    return std::chrono::duration<double>(Clock::now() - t).count();
}

bool same_form(const qubo::AffineForm &x, const qubo::AffineForm &y) {
    return std::abs(x.constant - y.constant) <= 1e-9 * (1.0 + std::abs(x.constant)) &&
           (x.coeffs - y.coeffs).cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + x.coeffs.cwiseAbs().maxCoeff());
}

double eta_at(const std::vector<qubo::AffineForm> &cuts, const VectorXd &z) {
    double eta = 0.0;
    for (const auto &g : cuts) {
        eta = std::max(eta, g(z));
    }
    return eta;
}

void put_register(Bits &bits, std::size_t offset, const qubo::Register &reg, double value) {
    const auto k = static_cast<std::uint64_t>(std::llround(value / reg.resolution()));
    for (std::size_t b = 0; b < reg.bits(); ++b) {
        bits[offset + b] = static_cast<std::uint8_t>((k >> b) & 1U);
    }
}

EncodingCheck check_encoding(const qubo::MasterProblem &snapped, const qubo::MasterWidths &widths,
                             const qubo::Qubo &q) {
    EncodingCheck chk;
    chk.checked = true;
    const auto ground = qaoa::solve_exact(q);
    const auto ilp = qubo::solve_master_ilp(snapped, widths);
    const auto dec = qubo::decode_master(snapped, widths, ground.bits);
    chk.ground_energy = ground.energy;
    chk.ilp_objective = ilp.objective;
    if (!ilp.feasible) {
        return chk;
    }
    const VectorXd z = to_vector(dec.z0);
    bool admissible = true;
    for (const auto &f : snapped.feasibility) {
        admissible = admissible && f(z) <= 1e-9;
    }
    for (const auto &g : snapped.optimality) {
        admissible = admissible && dec.eta >= g(z) - 1e-9;
    }
    const double tol = 1e-9 * (1.0 + std::abs(ilp.objective));
    chk.ground_state_optimal = admissible && std::abs(dec.objective - ilp.objective) <= tol &&
                               std::abs(ground.energy - dec.objective) <= tol;

    const auto layout = qubo::master_layout(snapped, widths);
    Bits bits(layout.dimension, 0);
    std::copy(ilp.z0.begin(), ilp.z0.end(), bits.begin());
    const VectorXd zi = to_vector(ilp.z0);
    put_register(bits, layout.eta_offset, widths.eta, ilp.eta);
    for (std::size_t k = 0; k < snapped.optimality.size(); ++k) {
        put_register(bits, layout.opt_slack_offset[k], widths.opt_slack, ilp.eta - snapped.optimality[k](zi));
    }
    for (std::size_t k = 0; k < snapped.feasibility.size(); ++k) {
        put_register(bits, layout.fea_slack_offset[k], widths.fea_slack, -snapped.feasibility[k](zi));
    }
    chk.feasible_energy_identity = std::abs(qubo::energy(q, bits) - ilp.objective) <= tol;
    return chk;
}

std::vector<SubproblemResult> solve_all(const dispatch::TwoStageProgram &prog, const std::vector<VectorXd> &xis,
                                        const Bits &z0, std::size_t trial, unsigned threads) {
    const std::size_t S = xis.size();
    std::vector<SubproblemResult> out(S);
    unsigned workers = threads ? threads : std::max(1U, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, S));
    std::vector<std::exception_ptr> errors(workers);
    auto work = [&](unsigned w) {
        try {
            for (std::size_t s = w; s < S; s += workers) {
                out[s] = solve_subproblem(prog, xis[s], z0, s, trial);
            }
        } catch (...) {
            errors[w] = std::current_exception();
        }
    };
    if (workers <= 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back(work, w);
        }
        for (auto &t : pool) {
            t.join();
        }
    }
    for (auto &e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    return out;
}

} // namespace

BendersResult run(const dispatch::TwoStageProgram &prog, const uqae::ScenarioSet &scenarios,
                  const BendersConfig &cfg) {
    if (scenarios.scenarios.empty()) {
        throw std::invalid_argument("benders: empty scenario set");
    }
    if (std::abs(scenarios.total_weight() - 1.0) > 1e-9) {
        throw std::invalid_argument("benders: scenario weights do not sum to 1");
    }
    if (cfg.max_iterations == 0) {
        throw std::invalid_argument("benders: iteration cap must be >= 1");
    }
    std::vector<VectorXd> xis;
    std::vector<double> weights;
    for (const auto &sc : scenarios.scenarios) {
        xis.push_back(dispatch::realize(prog, sc));
        weights.push_back(sc.weight);
    }

    BendersResult res;
    bool stopped = false;
    for (std::size_t it = 1; it <= cfg.max_iterations && !stopped; ++it) {
        IterationRecord rec;
        rec.iteration = it;
        rec.master_backend = to_string(cfg.master);

        qubo::MasterProblem mp;
        mp.a = prog.a;
        mp.optimality = res.aggregates;
        for (auto k : res.selected) {
            mp.feasibility.push_back(res.feasibility_cuts[k].form);
        }

        auto t0 = Clock::now();
        Bits z0;
        if (cfg.master == MasterBackend::IlpOracle) {
            double obj = 0.0;
            if (!solve_master_oracle(mp, z0, obj)) {
                res.stop_reason = "master infeasible";
                break;
            }
            rec.lower = obj;
        } else {
            const auto widths = qubo::choose_widths(mp, cfg.widths);
            const auto snapped = qubo::snap(mp, widths.resolution);
            const auto q = qubo::encode_master(snapped, widths, qubo::choose_penalties(snapped, widths));
            rec.qubo_dimension = q.dimension();
            rec.snap_distance = widths.snap_distance;
            Bits bits;
            if (cfg.master == MasterBackend::QuboExact) {
                bits = qaoa::solve_exact_structured(q).bits;
            } else if (cfg.master == MasterBackend::QuboQaoa &&
                       q.dimension() <= static_cast<std::size_t>(cfg.qaoa.qubit_cap)) {
                auto qc = cfg.qaoa;
                qc.seed = uqae::split_seed(cfg.qaoa.seed, it);
                bits = qaoa::solve_qaoa(q, qc).bits;
            } else {
                if (cfg.master == MasterBackend::QuboQaoa) {
                    rec.master_backend = "qubo-anneal";
                    res.notices.push_back("iteration " + std::to_string(it) + ": master QUBO of dimension " +
                                          std::to_string(q.dimension()) + " exceeds the qubit cap " +
                                          std::to_string(cfg.qaoa.qubit_cap) + "; annealing used");
                }
                auto ac = cfg.anneal;
                ac.seed = uqae::split_seed(cfg.anneal.seed, it);
                bits = qaoa::solve_anneal(q, ac).bits;
            }
            if (cfg.encoding_check_bits > 0 && q.dimension() <= cfg.encoding_check_bits) {
                rec.encoding = check_encoding(snapped, widths, q);
            }
            z0 = qubo::decode_master(snapped, widths, bits).z0;
            const VectorXd z = to_vector(z0);
            rec.lower = (prog.m > 0 ? prog.a.dot(z) : 0.0) + eta_at(mp.optimality, z);
        }
        rec.master_seconds = seconds_since(t0);
        rec.trial = z0;

        t0 = Clock::now();
        const auto results = solve_all(prog, xis, z0, it, cfg.threads);
        rec.subproblem_seconds = seconds_since(t0);

        std::vector<OptimalityCut> opt;
        std::vector<std::size_t> fresh;
        for (const auto &r : results) {
            if (const auto *o = std::get_if<OptimalityCut>(&r)) {
                opt.push_back(*o);
            } else {
                fresh.push_back(res.feasibility_cuts.size());
                res.feasibility_cuts.push_back(std::get<FeasibilityCut>(r));
            }
        }
        rec.trial_feasible = fresh.empty();
        bool new_aggregate = false;
        bool new_selected = false;
        if (rec.trial_feasible) {
            rec.optimality_cuts = opt.size();
            const auto agg = aggregate_optimality(opt, weights);
            double recourse = 0.0;
            for (const auto &c : opt) {
                recourse += weights[c.scenario] * c.value;
            }
            const double value = (prog.m > 0 ? prog.a.dot(to_vector(z0)) : 0.0) + recourse;
            if (value < res.objective) {
                res.objective = value;
                res.z0 = z0;
            }
            new_aggregate = std::none_of(res.aggregates.begin(), res.aggregates.end(),
                                         [&](const qubo::AffineForm &g) { return same_form(g, agg); });
            if (new_aggregate) {
                res.aggregates.push_back(agg);
            }
        } else {
            t0 = Clock::now();
            rec.feasibility_new = fresh.size();
            if (std::find(res.infeasible_trials.begin(), res.infeasible_trials.end(), z0) ==
                res.infeasible_trials.end()) {
                res.infeasible_trials.push_back(z0);
            }
            std::vector<std::size_t> next;
            if (cfg.selection == cutsel::Backend::None) {
                next.resize(res.feasibility_cuts.size());
                for (std::size_t k = 0; k < next.size(); ++k) {
                    next[k] = k;
                }
            } else {
                std::vector<std::size_t> candidates = res.selected;
                candidates.insert(candidates.end(), fresh.begin(), fresh.end());
                std::sort(candidates.begin(), candidates.end());
                candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
                std::vector<qubo::AffineForm> forms;
                for (auto k : candidates) {
                    forms.push_back(res.feasibility_cuts[k].form);
                }
                const auto inst = cutsel::build_cover_matrix(forms, res.infeasible_trials, candidates);
                cutsel::SelectOptions so;
                so.qaoa = cfg.qaoa;
                so.qaoa.seed = uqae::split_seed(cfg.qaoa.seed ^ 0x5E1EC7ULL, it);
                so.anneal = cfg.anneal;
                const auto sel = cutsel::select(inst, cfg.selection, so);
                if (!sel.notice.empty()) {
                    res.notices.push_back("iteration " + std::to_string(it) + ": " + sel.notice);
                }
                for (auto c : sel.columns) {
                    next.push_back(candidates[c]);
                }
            }
            for (const auto &trial : res.infeasible_trials) {
                const VectorXd z = to_vector(trial);
                if (std::none_of(next.begin(), next.end(),
                                 [&](std::size_t k) { return res.feasibility_cuts[k].form(z) > 1e-9; })) {
                    throw std::logic_error("benders: selected cuts no longer exclude an infeasible trial");
                }
            }
            new_selected = std::any_of(next.begin(), next.end(), [&](std::size_t k) {
                return std::find(res.selected.begin(), res.selected.end(), k) == res.selected.end();
            });
            res.selected = std::move(next);
            rec.selection_seconds = seconds_since(t0);
        }
        rec.upper = res.objective;
        rec.aggregates = res.aggregates.size();
        rec.feasibility_total = res.feasibility_cuts.size();
        rec.feasibility_selected = res.selected.size();
        res.lower = rec.lower;
        res.trace.push_back(rec);

        const bool gap_closed =
            std::isfinite(res.objective) && res.objective - rec.lower <= cfg.epsilon * (1.0 + std::abs(res.objective));
        if (cfg.termination == Termination::Gap && gap_closed) {
            res.converged = true;
            res.stop_reason = "gap";
            stopped = true;
        } else if (cfg.termination == Termination::NoNewCuts && !new_aggregate && !new_selected) {
            res.converged = gap_closed;
            res.stop_reason = "no new cuts";
            stopped = true;
        }
    }
    if (!stopped && res.stop_reason.empty()) {
        res.stop_reason = "iteration cap";
    }
    return res;
}

} // namespace qsed::benders
