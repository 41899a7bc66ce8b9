#pragma once

#include <cmath>
#include <functional>
#include <random>

#include "chainfg/eliminate.hpp"
#include "chainfg/graph.hpp"

namespace testsupport {

using namespace chainfg;

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Mat random_mat(int rows, int cols, std::mt19937_64& rng, double scale = 1.0) {
    Mat m(rows, cols);
    for (auto& v : m.data) v = scale * uniform(rng, -1.0, 1.0);
    return m;
}

/// Random SPD matrix with bounded condition number.
inline Mat random_spd(int dim, std::mt19937_64& rng) {
    Mat l(dim, dim);
    for (int c = 0; c < dim; ++c) {
        for (int r = c + 1; r < dim; ++r) l(r, c) = 0.3 * uniform(rng, -1.0, 1.0);
        l(c, c) = uniform(rng, 0.5, 1.5);
    }
    Mat sigma(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) {
            double s = 0.0;
            for (int k = 0; k <= std::min(i, j); ++k) s += l(i, k) * l(j, k);
            sigma(i, j) = s;
        }
    return sigma;
}

inline StateVec random_states(int n, const StateLayout& layout, std::mt19937_64& rng, double pose_range = 5.0) {
    StateVec states(n);
    for (auto& s : states) {
        s.x = uniform(rng, -pose_range, pose_range);
        s.y = uniform(rng, -pose_range, pose_range);
        if (layout.has_theta()) s.theta = uniform(rng, -3.0, 3.0);
        if (layout.vel_dim == 2) {
            s.vx = uniform(rng, -1.0, 1.0);
            s.vy = uniform(rng, -1.0, 1.0);
        }
        if (layout.bias_dim == 1) s.bias = uniform(rng, -0.5, 0.5);
    }
    return states;
}

inline StateVec perturb_states(const StateVec& states, const StateLayout& layout, std::mt19937_64& rng,
                               double scale = 0.1) {
    StateVec out = states;
    for (auto& s : out) {
        s.x += uniform(rng, -scale, scale);
        s.y += uniform(rng, -scale, scale);
        if (layout.has_theta()) s.theta = wrap_angle(s.theta + uniform(rng, -scale, scale));
        if (layout.vel_dim == 2) {
            s.vx += uniform(rng, -scale, scale);
            s.vy += uniform(rng, -scale, scale);
        }
        if (layout.bias_dim == 1) s.bias += uniform(rng, -scale, scale);
    }
    return out;
}

struct RandomChainOptions {
    double gps_prob = 0.7;       // gps at keyframe 1 is always present (gauge)
    double motion_prob = 0.8;    // only applies when the layout has velocity
    double between_prob = 1.0;   // pairs lacking between keep motion for connectivity
};

/// Random chain-valid graph: connected, gauge fixed, random SPD covariances
/// and random measurements. GPS is pinned at both ends (a pose-mode chain
/// anchored at a single keyframe leaves one heading direction free), interior
/// keyframes draw from gps_prob.
inline ChainFactorGraph random_chain(int n, const StateLayout& layout, std::mt19937_64& rng,
                                     const RandomChainOptions& opt = {}) {
    ChainFactorGraph g;
    g.layout = layout;
    g.n = n;
    for (int i = 1; i <= n; ++i) {
        if (i == 1 || i == n || uniform(rng, 0.0, 1.0) < opt.gps_prob) {
            GpsFactor f;
            f.index = i;
            f.zx = uniform(rng, -5.0, 5.0);
            f.zy = uniform(rng, -5.0, 5.0);
            f.sigma = random_spd(2, rng);
            g.gps[i] = f;
        }
    }
    for (int i = 1; i < n; ++i) {
        const bool can_motion = layout.vel_dim == 2;
        bool add_motion = can_motion && uniform(rng, 0.0, 1.0) < opt.motion_prob;
        bool add_between = uniform(rng, 0.0, 1.0) < opt.between_prob;
        if (!add_between && !add_motion) add_between = true;  // keep the chain connected
        if (add_between) {
            BetweenFactor f;
            f.index = i;
            f.dx = uniform(rng, -2.0, 2.0);
            f.dy = uniform(rng, -2.0, 2.0);
            if (layout.has_theta()) f.dtheta = wrap_angle(uniform(rng, -1.0, 1.0));
            f.sigma = random_spd(layout.has_theta() ? 3 : 2, rng);
            g.between[i] = f;
        }
        if (add_motion) {
            MotionFactor f;
            f.index = i;
            f.dt = uniform(rng, 0.2, 2.0);
            f.sigma = random_spd(4 + layout.bias_dim, rng);
            g.motion[i] = f;
        }
    }
    return g;
}

/// Stack the conditionals into a full (n*d) x (n*d) matrix plus rhs; for a
/// serial net this is the square-root information matrix R.
inline std::pair<Mat, Vec> stacked_r(const ChainBayesNet& net) {
    const int n = net.n();
    const int d = net.state_dim();
    Mat r(n * d, n * d);
    Vec rhs(static_cast<std::size_t>(n) * d, 0.0);
    for (const auto& c : net.conditionals) {
        const int row0 = (c.index - 1) * d;
        r.set_block(row0, (c.index - 1) * d, c.r_block);
        if (c.parent) r.set_block(row0, (*c.parent - 1) * d, c.t_block);
        for (int k = 0; k < d; ++k) rhs[row0 + k] = c.d_block[k];
    }
    return {r, rhs};
}

inline double rel_mat_diff(const Mat& a, const Mat& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        num = std::max(num, std::abs(a.data[i] - b.data[i]));
        den = std::max(den, std::abs(b.data[i]));
    }
    return num / std::max(den, 1e-300);
}

/// Central finite differences of a raw residual function w.r.t. one
/// keyframe's components; angle residual rows are differenced with wrapping.
inline Mat fd_residual_jacobian(const std::function<Vec(const StateVec&)>& res_fn, const StateVec& states,
                                int keyframe, const StateLayout& layout, double step = 1e-6) {
    const int d = layout.state_dim();
    const Vec base = res_fn(states);
    const int rd = static_cast<int>(base.size());
    const bool angle_row = layout.has_theta();
    Mat jac(rd, d);
    for (int c = 0; c < d; ++c) {
        StateVec plus = states, minus = states;
        auto bump = [&](KeyframeState& s, double eps) {
            Vec v = state_to_vector(s, layout);
            v[c] += eps;
            s = state_from_vector(v, layout);
        };
        bump(plus[keyframe - 1], step);
        bump(minus[keyframe - 1], -step);
        const Vec rp = res_fn(plus);
        const Vec rm = res_fn(minus);
        for (int r = 0; r < rd; ++r) {
            double diff = rp[r] - rm[r];
            if (angle_row && r == 2 && rd == 3) diff = wrap_angle(diff);  // between-pose angle row
            jac(r, c) = diff / (2.0 * step);
        }
    }
    return jac;
}

}  // namespace testsupport
