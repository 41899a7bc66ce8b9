#include "chainfg/graph.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "chainfg/blockla.hpp"
#include "chainfg/errors.hpp"

namespace chainfg {

namespace {

bool sigma_spd(const Mat& sigma, int dim) {
    if (sigma.rows != dim || sigma.cols != dim) return false;
    try {
        cholesky_lower(sigma);
    } catch (const CovarianceError&) {
        return false;
    }
    return true;
}

}  // namespace

std::vector<Violation> validate(const ChainFactorGraph& graph) {
    std::vector<Violation> out;
    const StateLayout& layout = graph.layout;

    if (graph.n < 0) out.push_back({0, "keyframe count negative"});
    if ((layout.pose_dim != 2 && layout.pose_dim != 3) || (layout.vel_dim != 0 && layout.vel_dim != 2) ||
        (layout.bias_dim != 0 && layout.bias_dim != 1))
        out.push_back({0, "invalid state layout"});
    else if (layout.bias_dim == 1 && (layout.vel_dim != 2 || !layout.has_theta()))
        out.push_back({0, "bias component requires velocity and heading in the layout"});
    if (graph.n == 0) {
        if (!graph.gps.empty() || !graph.between.empty() || !graph.motion.empty())
            out.push_back({0, "factors present in empty graph"});
        return out;
    }

    for (const auto& [j, f] : graph.gps) {
        if (j < 1 || j > graph.n) out.push_back({j, "gps index out of range"});
        if (f.index != j) out.push_back({j, "gps key/index mismatch"});
        if (!sigma_spd(f.sigma, 2)) out.push_back({j, "gps covariance not SPD"});
    }
    for (const auto& [j, f] : graph.between) {
        if (j < 1 || j >= graph.n) out.push_back({j, "between index out of range"});
        if (f.index != j) out.push_back({j, "between key/index mismatch"});
        if (!sigma_spd(f.sigma, layout.has_theta() ? 3 : 2)) out.push_back({j, "between covariance not SPD"});
        if (layout.has_theta() && !(f.dtheta > -std::numbers::pi && f.dtheta <= std::numbers::pi))
            out.push_back({j, "between dtheta outside (-pi, pi]"});
    }
    for (const auto& [j, f] : graph.motion) {
        if (j < 1 || j >= graph.n) out.push_back({j, "motion index out of range"});
        if (f.index != j) out.push_back({j, "motion key/index mismatch"});
        if (layout.vel_dim != 2) out.push_back({j, "motion factor but layout has no velocity"});
        else if (!sigma_spd(f.sigma, 4 + layout.bias_dim)) out.push_back({j, "motion covariance not SPD"});
        if (!(f.dt > 0.0)) out.push_back({j, "motion dt not positive"});
    }

    if (graph.gps.empty()) out.push_back({0, "gauge unfixed: no unary factor"});
    for (int j = 1; j < graph.n; ++j)
        if (!graph.between.count(j) && !graph.motion.count(j))
            out.push_back({j, "disconnected at " + std::to_string(j) + "-" + std::to_string(j + 1)});

    return out;
}

std::vector<WhitenedBlockRow> linearize_all(const ChainFactorGraph& graph, const StateVec& states) {
    std::vector<WhitenedBlockRow> rows;
    for (int j = 1; j <= graph.n; ++j) {
        if (auto it = graph.gps.find(j); it != graph.gps.end())
            rows.push_back(linearize(it->second, states, graph.layout));
        if (auto it = graph.between.find(j); it != graph.between.end())
            rows.push_back(linearize(it->second, states, graph.layout));
        if (auto it = graph.motion.find(j); it != graph.motion.end())
            rows.push_back(linearize(it->second, states, graph.layout));
    }
    return rows;
}

AssembledSystem assemble(const ChainFactorGraph& graph, const StateVec& states) {
    const int d = graph.state_dim();
    const auto rows = linearize_all(graph, states);

    int m = 0;
    for (const auto& r : rows) m += static_cast<int>(r.residual.size());

    AssembledSystem sys;
    sys.jacobian = Mat(m, graph.n * d);
    sys.rhs.assign(m, 0.0);

    int at = 0;
    for (const auto& row : rows) {
        const int rd = static_cast<int>(row.residual.size());
        for (const auto& entry : row.blocks) sys.jacobian.set_block(at, (entry.index - 1) * d, entry.block);
        for (int r = 0; r < rd; ++r) sys.rhs[at + r] = row.residual[r];
        at += rd;
    }
    return sys;
}

double cost(const ChainFactorGraph& graph, const StateVec& states) {
    double total = 0.0;
    for (const auto& row : linearize_all(graph, states))
        for (double r : row.residual) total += r * r;
    return total;
}

ChainFactorGraph toy_example() {
    ChainFactorGraph g;
    g.layout = StateLayout::linear_mode();
    g.n = 4;
    for (int j = 1; j <= 4; ++j) g.gps[j] = GpsFactor{j, static_cast<double>(j - 1), 0.0, Mat::identity(2)};
    for (int j = 1; j <= 3; ++j) g.between[j] = BetweenFactor{j, 1.0, 0.0, 0.0, Mat::identity(2)};
    return g;
}

StateVec toy_ground_truth() {
    StateVec states(4);
    for (int i = 0; i < 4; ++i) states[i].x = static_cast<double>(i);
    return states;
}

}  // namespace chainfg
