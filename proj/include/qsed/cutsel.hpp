#pragma once

// Minimum set cover over feasibility cuts: keep the fewest cuts that still
// exclude every infeasible trial seen so far.

#include <cstddef>
#include <string>
#include <vector>

#include "qsed/linalg.hpp"
#include "qsed/qaoa.hpp"
#include "qsed/qubo.hpp"

namespace qsed::cutsel {

struct CoverInstance {
    qubo::CoverMatrix n;            ///< rows: trials, columns: cuts
    std::vector<std::size_t> trials; ///< row id -> trial id
    std::vector<std::size_t> cuts;   ///< column id -> cut id

    std::size_t rows() const { return n.size(); }
    std::size_t cols() const { return n.empty() ? cuts.size() : n.front().size(); }
    void validate() const;
};

/// N[r][k] = 1 iff cut k evaluated at trial r exceeds `tol`. Throws
/// std::logic_error when a trial violates none of the cuts.
CoverInstance build_cover_matrix(const std::vector<qubo::AffineForm> &cuts, const std::vector<Bits> &trials,
                                 std::vector<std::size_t> cut_ids = {}, std::vector<std::size_t> trial_ids = {},
                                 double tol = 1e-9);

enum class Backend { None, Greedy, QuboExact, QuboQaoa };

const char *to_string(Backend b);
Backend backend_from_string(const std::string &s);

bool covers(const CoverInstance &inst, const std::vector<std::size_t> &columns);

/// Most newly covered rows first, ties to the lowest column.
std::vector<std::size_t> greedy_cover(const CoverInstance &inst);

/// Minimum cover by enumeration in order of size, ties to the
/// lexicographically smallest column set. At most 24 columns.
std::vector<std::size_t> exhaustive_minimum(const CoverInstance &inst);

struct SelectOptions {
    qaoa::QaoaConfig qaoa;
    qaoa::AnnealConfig anneal;
};

struct Selection {
    std::vector<std::size_t> columns; ///< ascending column indices into the instance
    std::size_t qubo_dimension = 0;
    bool repaired = false;  ///< heuristic output was completed greedily
    std::string notice;
};

/// Columns with identical incidence are merged (lowest index kept) before the
/// backend runs. Backend None returns every column.
Selection select(const CoverInstance &inst, Backend backend, const SelectOptions &opts = {});

} // namespace qsed::cutsel
