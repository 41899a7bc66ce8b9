#include "chainfg/solver.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "chainfg/errors.hpp"

namespace chainfg {

StateVec retract(const StateVec& states, const Vec& delta, const StateLayout& layout, double scale) {
    const int d = layout.state_dim();
    if (delta.size() != states.size() * static_cast<std::size_t>(d))
        throw std::invalid_argument("retract: increment size does not match layout x keyframe count");
    StateVec out = states;
    for (std::size_t i = 0; i < states.size(); ++i) {
        const double* di = delta.data() + i * d;
        int at = 0;
        out[i].x += scale * di[at++];
        out[i].y += scale * di[at++];
        if (layout.has_theta()) out[i].theta = wrap_angle(out[i].theta + scale * di[at++]);
        if (layout.vel_dim == 2) {
            out[i].vx += scale * di[at++];
            out[i].vy += scale * di[at++];
        }
        if (layout.bias_dim == 1) out[i].bias += scale * di[at++];
    }
    return out;
}

std::pair<StateVec, SolveReport> gauss_newton(const ChainFactorGraph& graph, const StateVec& x0,
                                              const SolveConfig& config) {
    if (config.max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
    if (!(config.delta_tol > 0.0)) throw std::invalid_argument("delta_tol must be positive");
    if (static_cast<int>(x0.size()) != graph.n)
        throw std::invalid_argument("initial states do not cover all keyframes");

    const auto violations = validate(graph);
    if (!violations.empty())
        throw std::invalid_argument("invalid graph: " + violations.front().reason);

    StateVec states = x0;
    SolveReport report;
    double current_cost = cost(graph, states);
    report.cost_history.push_back(current_cost);

    for (int it = 1; it <= config.max_iterations; ++it) {
        report.iterations = it;

        Vec delta;
        try {
            if (config.mode == EliminationMode::Serial) {
                auto res = eliminate_serial(graph, states);
                delta = back_substitute_serial(res.net);
            } else {
                auto res = eliminate_parallel(graph, states, config.policy);
                delta = back_substitute_parallel(res.net, config.policy);
            }
        } catch (const SingularSystemError& e) {
            throw SingularSystemError(std::string(e.what()) + " (iteration " + std::to_string(it) + ")",
                                      e.index());
        }

        const double dn = inf_norm(delta);
        report.delta_norm_history.push_back(dn);
        if (dn < config.delta_tol) {
            report.converged = true;
            break;
        }

        if (config.cost_decrease_required) {
            double scale = 1.0;
            bool accepted = false;
            for (int h = 0; h <= 10; ++h) {
                StateVec candidate = retract(states, delta, graph.layout, scale);
                const double c = cost(graph, candidate);
                if (std::isnan(c) || std::isinf(c)) throw DivergenceError("cost diverged (nan/inf)");
                if (c <= current_cost) {
                    states = std::move(candidate);
                    current_cost = c;
                    accepted = true;
                    break;
                }
                scale *= 0.5;
            }
            if (!accepted) break;  // no decrease found; stop at the last accepted state
            report.cost_history.push_back(current_cost);
        } else {
            states = retract(states, delta, graph.layout);
            current_cost = cost(graph, states);
            if (std::isnan(current_cost) || std::isinf(current_cost))
                throw DivergenceError("cost diverged (nan/inf)");
            report.cost_history.push_back(current_cost);
        }
    }

    report.final_cost = current_cost;
    return {std::move(states), std::move(report)};
}

}  // namespace chainfg
