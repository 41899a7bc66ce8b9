#include "chainfg/incremental.hpp"

#include <stdexcept>
#include <string>

#include "chainfg/errors.hpp"
#include "chainfg/solver.hpp"

namespace chainfg {

namespace {

template <typename M>
const typename M::mapped_type* find_ptr(const M& m, int key) {
    auto it = m.find(key);
    return it == m.end() ? nullptr : &it->second;
}

AbarInputs inputs_for(const ChainFactorGraph& graph, int index, bool with_binaries, const TauFactor* tau) {
    AbarInputs in;
    if (tau) in.taus.push_back(tau);
    in.gps = find_ptr(graph.gps, index);
    if (with_binaries) {
        in.between = find_ptr(graph.between, index);
        in.motion = find_ptr(graph.motion, index);
    }
    return in;
}

/// Serial re-elimination of keyframes lo..hi, seeded by the cached separator
/// factor entering x_lo (if any). Writes conditionals, refreshes tau cache
/// entries and records the step trace.
void re_eliminate_serial(ChainBayesTree& tree, int lo, int hi) {
    std::optional<TauFactor> carry;
    if (auto it = tree.tau_cache.find(lo); it != tree.tau_cache.end()) carry = it->second;

    int stage = 1;
    for (int i = lo; i <= hi; ++i) {
        auto step = eliminate_step(inputs_for(tree.graph, i, i < hi, carry ? &*carry : nullptr), i,
                                   Direction::Forward, tree.lin_points, tree.graph.layout);
        step.trace.stage = stage++;
        tree.last_update_trace.push_back(step.trace);
        tree.conditionals[i - 1] = std::move(step.cond);
        carry = std::move(step.tau);
        if (carry) tree.tau_cache[carry->on_index] = *carry;
    }
    tree.root_index = hi;
}

/// Two-ended re-elimination of the three-variable subgraph {lo, lo+1, lo+2}:
/// the outer pair first, then the middle as root. The newest conditional
/// ends up parented backward; solve() and the next update handle that.
void re_eliminate_parallel3(ChainBayesTree& tree, int lo) {
    const int mid = lo + 1;
    const int hi = lo + 2;

    std::optional<TauFactor> cached;
    if (auto it = tree.tau_cache.find(lo); it != tree.tau_cache.end()) cached = it->second;

    auto left = eliminate_step(inputs_for(tree.graph, lo, true, cached ? &*cached : nullptr), lo,
                               Direction::Forward, tree.lin_points, tree.graph.layout);
    left.trace.stage = 1;

    AbarInputs right_in;
    right_in.gps = find_ptr(tree.graph.gps, hi);
    right_in.between = find_ptr(tree.graph.between, hi - 1);
    right_in.motion = find_ptr(tree.graph.motion, hi - 1);
    auto right = eliminate_step(right_in, hi, Direction::Backward, tree.lin_points, tree.graph.layout);
    right.trace.stage = 1;

    AbarInputs mid_in;
    if (left.tau) mid_in.taus.push_back(&*left.tau);
    if (right.tau) mid_in.taus.push_back(&*right.tau);
    mid_in.gps = find_ptr(tree.graph.gps, mid);
    auto root = eliminate_step(mid_in, mid, Direction::Forward, tree.lin_points, tree.graph.layout);
    root.trace.stage = 2;

    tree.last_update_trace = {left.trace, right.trace, root.trace};
    tree.conditionals[lo - 1] = std::move(left.cond);
    tree.conditionals[hi - 1] = std::move(right.cond);
    tree.conditionals[mid - 1] = std::move(root.cond);
    // Only the left-summarizing separator factor is cached; the right-side
    // information is replayed from stored factors on the next update.
    if (left.tau) tree.tau_cache[left.tau->on_index] = *left.tau;
    tree.tau_cache.erase(hi);
    tree.root_index = mid;
}

}  // namespace

ChainBayesTree init(const ChainFactorGraph& graph, const StateVec& states) {
    const auto violations = validate(graph);
    if (!violations.empty()) throw std::invalid_argument("invalid graph: " + violations.front().reason);
    if (static_cast<int>(states.size()) != graph.n)
        throw std::invalid_argument("states do not cover all keyframes");

    ChainBayesTree tree;
    tree.graph = graph;
    tree.lin_points = states;
    auto res = eliminate_serial(graph, states);
    tree.conditionals = std::move(res.net.conditionals);
    tree.root_index = graph.n;
    for (auto& [key, taus] : res.tau_cache) tree.tau_cache[key] = taus.front();
    tree.last_update_trace = std::move(res.trace);
    return tree;
}

void update(ChainBayesTree& tree, const UpdateFactors& add, const KeyframeState& x_init, EliminationMode mode) {
    const int j = tree.n();
    const int new_index = j + 1;

    if (add.gps && add.gps->index != new_index)
        throw ChainViolationError("gps factor at x" + std::to_string(add.gps->index) + ", expected x" +
                                  std::to_string(new_index));
    if (add.between && add.between->index != j)
        throw ChainViolationError("between factor at b" + std::to_string(add.between->index) + ", expected b" +
                                  std::to_string(j));
    if (add.motion && add.motion->index != j)
        throw ChainViolationError("motion factor at m" + std::to_string(add.motion->index) + ", expected m" +
                                  std::to_string(j));
    if (j >= 1 && !add.between && !add.motion)
        throw ChainViolationError("keyframe x" + std::to_string(new_index) +
                                  " arrives without a binary factor to x" + std::to_string(j));

    tree.graph.n = new_index;
    if (add.gps) tree.graph.gps[new_index] = *add.gps;
    if (add.between) tree.graph.between[j] = *add.between;
    if (add.motion) tree.graph.motion[j] = *add.motion;
    tree.lin_points.push_back(x_init);
    tree.conditionals.resize(new_index);
    tree.last_update_trace.clear();

    const int lo = std::max(1, j - 1);
    if (mode == EliminationMode::Parallel && new_index - lo == 2)
        re_eliminate_parallel3(tree, lo);
    else
        re_eliminate_serial(tree, lo, new_index);
}

Vec solve(const ChainBayesTree& tree) {
    ChainBayesNet net;
    net.conditionals = tree.conditionals;
    net.root_index = tree.root_index;
    net.mode = EliminationMode::Serial;
    return solve_net(net);
}

StateVec estimate(const ChainBayesTree& tree) {
    if (tree.n() == 0) return {};
    return retract(tree.lin_points, solve(tree), tree.graph.layout);
}

void relinearize(ChainBayesTree& tree, const StateVec& new_states) {
    tree = init(tree.graph, new_states);
}

}  // namespace chainfg
