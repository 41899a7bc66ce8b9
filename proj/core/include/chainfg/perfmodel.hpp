#pragma once

#include <vector>

#include "chainfg/eliminate.hpp"
#include "chainfg/graph.hpp"

namespace chainfg {

/// Analytic model of one partial-QR block: a single Evaluate unit feeding n_u
/// time-multiplexed Update units, with the Evaluate phase of the next column
/// overlapping the Update phase of the current one. dual_lane models the
/// second decomposition block used by parallel elimination; it changes only
/// how stage costs combine, not the per-step arithmetic.
struct PipelineConfig {
    int n_u = 5;
    double eval_cycles_per_row = 1.0;
    double update_cycles_per_entry = 1.0;
    bool dual_lane = false;
};

struct CycleStep {
    int stage = 0;
    int index = 0;  // eliminated keyframe
    int abar_rows = 0;
    int abar_cols = 0;  // value columns
    double cycles = 0.0;
};

struct CycleReport {
    /// Elimination cycles: sum of per-step cycles, except that with
    /// dual_lane the two members of a pair stage cost max(left, right).
    double total_cycles = 0.0;
    /// Entry-proportional back substitution; root plus the heavier side when
    /// dual_lane splits the two outward sweeps.
    double back_substitution_cycles = 0.0;
    std::vector<CycleStep> per_step;
    double utilization = 0.0;  // busy-unit cycles / (total_cycles x unit count)
    int max_abar_rows = 0;
};

/// Pipelined cycles for eliminating k columns of an m x n (value columns)
/// augmented matrix: E_1 + sum_{j=1..k-1} max(U_j, E_{j+1}) + U_k with
/// E_j = eval_cycles_per_row * (m - j + 1) and
/// U_j = update_cycles_per_entry * (m - j + 1) * (n - j + 1) / n_u.
double qr_cycles(int m, int n, int k, const PipelineConfig& cfg);

/// Cycle model of a whole elimination pass. The per-step dimensions are
/// derived structurally from the graph and match the elimination trace (and
/// the kernel's phase log) exactly.
CycleReport elimination_cycles(const ChainFactorGraph& graph, EliminationMode mode, const PipelineConfig& cfg);

struct SweepRow {
    EliminationMode mode;
    int n_u;
    double total_cycles;  // elimination + back substitution
    int max_abar_rows;
    double utilization;
};

/// Evaluate both modes over a grid of Update-unit counts.
std::vector<SweepRow> sweep(const std::vector<int>& nu_grid, const ChainFactorGraph& graph,
                            const PipelineConfig& base);

}  // namespace chainfg
