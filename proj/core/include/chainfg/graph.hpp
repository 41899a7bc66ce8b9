#pragma once

#include <map>
#include <string>
#include <vector>

#include "chainfg/factors.hpp"
#include "chainfg/mat.hpp"

namespace chainfg {

/// Chain factor graph over keyframes 1..n. Binary factors are keyed by their
/// left index j and always connect (j, j+1). GPS factors may be absent at
/// some indices as long as at least one exists (gauge fixing).
struct ChainFactorGraph {
    StateLayout layout;
    int n = 0;
    std::map<int, GpsFactor> gps;
    std::map<int, BetweenFactor> between;
    std::map<int, MotionFactor> motion;

    int state_dim() const { return layout.state_dim(); }
};

struct Violation {
    int index;
    std::string reason;
};

/// Check every structural invariant; returns one entry per violation (empty
/// means ok). Violations are data, not exceptions.
std::vector<Violation> validate(const ChainFactorGraph& graph);

struct AssembledSystem {
    Mat jacobian;  // whitened A_b, block rows in factor order, block cols x_1..x_n
    Vec rhs;       // whitened eps_b
};

/// Stack all whitened block rows into the full system. Block rows are
/// ordered (g_1, b_1, m_1, g_2, b_2, m_2, ...), skipping absent factors.
AssembledSystem assemble(const ChainFactorGraph& graph, const StateVec& states);

/// Sum of squared whitened residuals over all factors.
double cost(const ChainFactorGraph& graph, const StateVec& states);

/// Whitened rows of every factor in the fixed assembly order.
std::vector<WhitenedBlockRow> linearize_all(const ChainFactorGraph& graph, const StateVec& states);

/// Four-variable linear-mode chain with g_1..g_4 and b_1..b_3, unit
/// covariances, and measurements consistent with ground-truth positions
/// (0,0), (1,0), (2,0), (3,0).
ChainFactorGraph toy_example();

/// The ground truth the toy measurements were generated from.
StateVec toy_ground_truth();

}  // namespace chainfg
