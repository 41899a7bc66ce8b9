#pragma once

#include <map>
#include <optional>
#include <vector>

#include "chainfg/eliminate.hpp"
#include "chainfg/graph.hpp"

namespace chainfg {

/// Chained Bayes tree: per-keyframe conditionals in serial orientation
/// (parent = i + 1, root = n), the cached separator factors, the accumulated
/// factor graph (factors are retained so updates can replay them) and the
/// linearization points. After a parallel-mode update the newest conditional
/// may transiently point backward; the next update restores the serial
/// orientation.
struct ChainBayesTree {
    ChainFactorGraph graph;
    StateVec lin_points;
    std::vector<ChainConditional> conditionals;
    std::map<int, TauFactor> tau_cache;  // separator index -> factor summarizing everything left of it
    int root_index = 0;
    std::vector<StepTrace> last_update_trace;

    int n() const { return graph.n; }
};

/// New factors arriving with keyframe n + 1: an optional GPS factor at
/// n + 1 and at least one binary factor connecting (n, n + 1) whenever the
/// tree is non-empty.
struct UpdateFactors {
    std::optional<GpsFactor> gps;
    std::optional<BetweenFactor> between;
    std::optional<MotionFactor> motion;
};

/// Bootstrap by one serial batch elimination.
ChainBayesTree init(const ChainFactorGraph& graph, const StateVec& states);

/// Incorporate keyframe n + 1: the conditionals of the two most recent
/// keyframes are discarded and the sub-factor-graph over {n-1, n, n+1} is
/// rebuilt from the cached separator factor plus replayed and new factors,
/// then re-eliminated (serially by default; EliminationMode::Parallel uses
/// the two-ended order on the three-variable subgraph). Conditionals with
/// index <= n - 2 are untouched.
void update(ChainBayesTree& tree, const UpdateFactors& add, const KeyframeState& x_init,
            EliminationMode mode = EliminationMode::Serial);

/// Serial back substitution over the tree's conditionals.
Vec solve(const ChainBayesTree& tree);

/// Current estimate: linearization points retracted by solve(tree).
StateVec estimate(const ChainBayesTree& tree);

/// Full re-elimination at a new linearization point; equivalent to
/// init(accumulated graph, new_states).
void relinearize(ChainBayesTree& tree, const StateVec& new_states);

}  // namespace chainfg
