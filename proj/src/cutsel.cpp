#include "qsed/cutsel.hpp"

#include <algorithm>
#include <bit>
#include <map>
#include <numeric>
#include <stdexcept>

namespace qsed::cutsel {

void CoverInstance::validate() const {
    const auto c = cols();
    for (std::size_t r = 0; r < n.size(); ++r) {
        if (n[r].size() != c) {
            throw std::invalid_argument("cover: ragged matrix");
        }
        if (std::none_of(n[r].begin(), n[r].end(), [](auto v) { return v != 0; })) {
            throw std::invalid_argument("cover: row " + std::to_string(r) + " cannot be covered");
        }
        for (auto v : n[r]) {
            if (v > 1) {
                throw std::invalid_argument("cover: entries must be binary");
            }
        }
    }
}

CoverInstance build_cover_matrix(const std::vector<qubo::AffineForm> &cuts, const std::vector<Bits> &trials,
                                 std::vector<std::size_t> cut_ids, std::vector<std::size_t> trial_ids, double tol) {
    CoverInstance inst;
    if (cut_ids.empty()) {
        cut_ids.resize(cuts.size());
        std::iota(cut_ids.begin(), cut_ids.end(), 0);
    }
    if (trial_ids.empty()) {
        trial_ids.resize(trials.size());
        std::iota(trial_ids.begin(), trial_ids.end(), 0);
    }
    if (cut_ids.size() != cuts.size() || trial_ids.size() != trials.size()) {
        throw std::invalid_argument("build_cover_matrix: id map length mismatch");
    }
    inst.cuts = std::move(cut_ids);
    inst.trials = std::move(trial_ids);
    inst.n.assign(trials.size(), std::vector<std::uint8_t>(cuts.size(), 0));
    for (std::size_t r = 0; r < trials.size(); ++r) {
        const VectorXd z = to_vector(trials[r]);
        bool any = false;
        for (std::size_t k = 0; k < cuts.size(); ++k) {
            if (cuts[k](z) > tol) {
                inst.n[r][k] = 1;
                any = true;
            }
        }
        if (!any) {
            throw std::logic_error("build_cover_matrix: trial " + std::to_string(inst.trials[r]) +
                                   " violates no feasibility cut");
        }
    }
    return inst;
}

const char *to_string(Backend b) {
    switch (b) {
    case Backend::None: return "none";
    case Backend::Greedy: return "greedy";
    case Backend::QuboExact: return "qubo-exact";
    case Backend::QuboQaoa: return "qubo-qaoa";
    }
    return "unknown";
}

Backend backend_from_string(const std::string &s) {
    for (auto b : {Backend::None, Backend::Greedy, Backend::QuboExact, Backend::QuboQaoa}) {
        if (s == to_string(b)) {
            return b;
        }
    }
    throw std::invalid_argument("unknown cut-selection backend '" + s + "'");
}

bool covers(const CoverInstance &inst, const std::vector<std::size_t> &columns) {
    for (const auto &row : inst.n) {
        if (std::none_of(columns.begin(), columns.end(), [&](std::size_t k) { return k < row.size() && row[k]; })) {
            return false;
        }
    }
    return true;
}

std::vector<std::size_t> greedy_cover(const CoverInstance &inst) {
    inst.validate();
    std::vector<bool> covered(inst.rows(), false);
    std::size_t left = inst.rows();
    std::vector<std::size_t> chosen;
    while (left > 0) {
        std::size_t best = 0, best_gain = 0;
        for (std::size_t k = 0; k < inst.cols(); ++k) {
            std::size_t gain = 0;
            for (std::size_t r = 0; r < inst.rows(); ++r) {
                gain += (!covered[r] && inst.n[r][k]) ? 1 : 0;
            }
            if (gain > best_gain) {
                best_gain = gain;
                best = k;
            }
        }
        chosen.push_back(best);
        for (std::size_t r = 0; r < inst.rows(); ++r) {
            if (!covered[r] && inst.n[r][best]) {
                covered[r] = true;
                --left;
            }
        }
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

std::vector<std::size_t> exhaustive_minimum(const CoverInstance &inst) {
    inst.validate();
    const auto c = inst.cols();
    if (c > 24) {
        throw std::length_error("exhaustive_minimum: more than 24 columns");
    }
    std::vector<std::uint32_t> row_masks(inst.rows(), 0);
    for (std::size_t r = 0; r < inst.rows(); ++r) {
        for (std::size_t k = 0; k < c; ++k) {
            if (inst.n[r][k]) {
                row_masks[r] |= 1U << k;
            }
        }
    }
    std::vector<std::size_t> best;
    int best_size = static_cast<int>(c) + 1;
    for (std::uint32_t s = 0; s < (1U << c); ++s) {
        const int size = std::popcount(s);
        if (size > best_size) {
            continue;
        }
        if (!std::all_of(row_masks.begin(), row_masks.end(), [&](std::uint32_t m) { return (m & s) != 0; })) {
            continue;
        }
        std::vector<std::size_t> cols;
        for (std::size_t k = 0; k < c; ++k) {
            if ((s >> k) & 1U) {
                cols.push_back(k);
            }
        }
        if (size < best_size || cols < best) {
            best_size = size;
            best = std::move(cols);
        }
    }
    return best;
}

namespace {

struct Reduced {
    CoverInstance inst;
    std::vector<std::size_t> original; ///< reduced column -> original column
};

Reduced merge_duplicate_columns(const CoverInstance &inst) {
    Reduced red;
    std::map<std::vector<std::uint8_t>, std::size_t> seen;
    for (std::size_t k = 0; k < inst.cols(); ++k) {
        std::vector<std::uint8_t> col(inst.rows());
        for (std::size_t r = 0; r < inst.rows(); ++r) {
            col[r] = inst.n[r][k];
        }
        if (seen.emplace(col, k).second) {
            red.original.push_back(k);
        }
    }
    red.inst.trials = inst.trials;
    red.inst.n.assign(inst.rows(), std::vector<std::uint8_t>(red.original.size(), 0));
    for (std::size_t j = 0; j < red.original.size(); ++j) {
        red.inst.cuts.push_back(inst.cuts.empty() ? red.original[j] : inst.cuts[red.original[j]]);
        for (std::size_t r = 0; r < inst.rows(); ++r) {
            red.inst.n[r][j] = inst.n[r][red.original[j]];
        }
    }
    return red;
}

} // namespace

Selection select(const CoverInstance &inst, Backend backend, const SelectOptions &opts) {
    inst.validate();
    Selection sel;
    if (backend == Backend::None) {
        sel.columns.resize(inst.cols());
        std::iota(sel.columns.begin(), sel.columns.end(), 0);
        return sel;
    }
    const auto red = merge_duplicate_columns(inst);
    std::vector<std::size_t> picked;
    if (backend == Backend::Greedy) {
        picked = greedy_cover(red.inst);
    } else {
        const auto widths = qubo::choose_cover_widths(red.inst.n);
        const auto q = qubo::encode_set_cover(red.inst.n, widths, qubo::cover_penalty(red.inst.n));
        sel.qubo_dimension = q.dimension();
        Bits bits;
        if (backend == Backend::QuboExact) {
            bits = qaoa::solve_exact_structured(q).bits;
        } else if (q.dimension() <= static_cast<std::size_t>(opts.qaoa.qubit_cap)) {
            bits = qaoa::solve_qaoa(q, opts.qaoa).bits;
        } else {
            sel.notice = "cover QUBO of dimension " + std::to_string(q.dimension()) +
                         " exceeds the qubit cap; annealing used";
            bits = qaoa::solve_anneal(q, opts.anneal).bits;
        }
        for (std::size_t k = 0; k < red.inst.cols(); ++k) {
            if (bits[k]) {
                picked.push_back(k);
            }
        }
        if (!covers(red.inst, picked)) {
            if (backend == Backend::QuboExact) {
                throw std::logic_error("select: exact cover QUBO ground state is not a cover");
            }
            // Complete a heuristic answer with greedy picks over the uncovered rows.
            CoverInstance rest;
            for (std::size_t r = 0; r < red.inst.rows(); ++r) {
                if (std::none_of(picked.begin(), picked.end(), [&](std::size_t k) { return red.inst.n[r][k]; })) {
                    rest.n.push_back(red.inst.n[r]);
                }
            }
            rest.cuts = red.inst.cuts;
            for (auto k : greedy_cover(rest)) {
                picked.push_back(k);
            }
            std::sort(picked.begin(), picked.end());
            picked.erase(std::unique(picked.begin(), picked.end()), picked.end());
            sel.repaired = true;
        }
    }
    for (auto k : picked) {
        sel.columns.push_back(red.original[k]);
    }
    std::sort(sel.columns.begin(), sel.columns.end());
    return sel;
}

} // namespace qsed::cutsel
