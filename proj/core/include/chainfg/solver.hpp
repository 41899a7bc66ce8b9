#pragma once

#include <vector>

#include "chainfg/eliminate.hpp"
#include "chainfg/graph.hpp"

namespace chainfg {

struct SolveConfig {
    EliminationMode mode = EliminationMode::Serial;
    int max_iterations = 50;
    double delta_tol = 1e-8;  // infinity norm on the increment
    bool cost_decrease_required = true;
    ExecPolicy policy = ExecPolicy::SingleThread;
};

struct SolveReport {
    int iterations = 0;
    double final_cost = 0.0;
    std::vector<double> cost_history;  // cost of each accepted state, starting at x0
    bool converged = false;
    std::vector<double> delta_norm_history;  // one entry per computed increment
};

/// Componentwise X + scale * delta with theta components re-wrapped into
/// (-pi, pi]. delta is the flat increment of back substitution.
StateVec retract(const StateVec& states, const Vec& delta, const StateLayout& layout, double scale = 1.0);

/// Iterate linearize -> eliminate(mode) -> back-substitute -> retract until
/// the increment norm falls below delta_tol or max_iterations is hit. When
/// cost_decrease_required is set, an increment whose full step raises the
/// cost is halved up to 10 times; if no decrease is found the solve stops at
/// the last accepted state with converged = false.
std::pair<StateVec, SolveReport> gauss_newton(const ChainFactorGraph& graph, const StateVec& x0,
                                              const SolveConfig& config = {});

}  // namespace chainfg
