#include "chainfg/factors.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "chainfg/blockla.hpp"
#include "chainfg/errors.hpp"

namespace chainfg {

double wrap_angle(double t) {
    double w = std::remainder(t, 2.0 * std::numbers::pi);
    if (w <= -std::numbers::pi) w += 2.0 * std::numbers::pi;
    return w;
}

Vec state_to_vector(const KeyframeState& s, const StateLayout& layout) {
    Vec v;
    v.reserve(layout.state_dim());
    v.push_back(s.x);
    v.push_back(s.y);
    if (layout.has_theta()) v.push_back(s.theta);
    if (layout.vel_dim == 2) {
        v.push_back(s.vx);
        v.push_back(s.vy);
    }
    if (layout.bias_dim == 1) v.push_back(s.bias);
    return v;
}

KeyframeState state_from_vector(const Vec& v, const StateLayout& layout) {
    if (static_cast<int>(v.size()) != layout.state_dim())
        throw std::invalid_argument("state_from_vector: size mismatch");
    KeyframeState s;
    int at = 0;
    s.x = v[at++];
    s.y = v[at++];
    if (layout.has_theta()) s.theta = wrap_angle(v[at++]);
    if (layout.vel_dim == 2) {
        s.vx = v[at++];
        s.vy = v[at++];
    }
    if (layout.bias_dim == 1) s.bias = v[at++];
    return s;
}

namespace {

const KeyframeState& state_at(const StateVec& states, int index) {
    if (index < 1 || index > static_cast<int>(states.size()))
        throw std::out_of_range("keyframe index " + std::to_string(index) + " out of range (n = " +
                                std::to_string(states.size()) + ")");
    return states[static_cast<std::size_t>(index) - 1];
}

void check_sigma(const Mat& sigma, int dim, const char* what) {
    if (sigma.rows != dim || sigma.cols != dim)
        throw CovarianceError(std::string(what) + ": covariance must be " + std::to_string(dim) + "x" +
                              std::to_string(dim));
}

}  // namespace

int residual_dim(const GpsFactor&, const StateLayout&) { return 2; }
int residual_dim(const BetweenFactor&, const StateLayout& layout) { return layout.has_theta() ? 3 : 2; }
int residual_dim(const MotionFactor&, const StateLayout& layout) { return 4 + layout.bias_dim; }

Vec residual(const GpsFactor& f, const StateVec& states, const StateLayout&) {
    const KeyframeState& s = state_at(states, f.index);
    return {f.zx - s.x, f.zy - s.y};
}

Vec residual(const BetweenFactor& f, const StateVec& states, const StateLayout& layout) {
    const KeyframeState& a = state_at(states, f.index);
    const KeyframeState& b = state_at(states, f.index + 1);
    const double ddx = b.x - a.x;
    const double ddy = b.y - a.y;
    if (!layout.has_theta()) return {f.dx - ddx, f.dy - ddy};
    const double c = std::cos(a.theta);
    const double s = std::sin(a.theta);
    // h_t = R(-theta_j) (t_{j+1} - t_j)
    const double hx = c * ddx + s * ddy;
    const double hy = -s * ddx + c * ddy;
    return {f.dx - hx, f.dy - hy, wrap_angle(f.dtheta - (b.theta - a.theta))};
}

Vec residual(const MotionFactor& f, const StateVec& states, const StateLayout& layout) {
    if (layout.vel_dim != 2) throw LayoutError("motion factor requires a velocity component in the layout");
    if (layout.bias_dim == 1 && !layout.has_theta())
        throw LayoutError("bias component requires a heading in the layout");
    const KeyframeState& a = state_at(states, f.index);
    const KeyframeState& b = state_at(states, f.index + 1);
    double ax = 0.0, ay = 0.0;  // dt^2/2 b_j u(theta_j)
    if (layout.bias_dim == 1) {
        const double half_dt2 = 0.5 * f.dt * f.dt;
        ax = half_dt2 * a.bias * std::cos(a.theta);
        ay = half_dt2 * a.bias * std::sin(a.theta);
    }
    Vec r = {a.x + a.vx * f.dt + ax - b.x, a.y + a.vy * f.dt + ay - b.y, a.vx - b.vx, a.vy - b.vy};
    if (layout.bias_dim == 1) r.push_back(a.bias - b.bias);
    return r;
}

Mat whitening_root(const Mat& sigma) { return invert_lower_triangular(cholesky_lower(sigma)); }

namespace detail {

Mat gps_block(const Mat& w, const StateLayout& layout) {
    Mat block(2, layout.state_dim());
    block.set_block(0, 0, w);  // dh/dp = I2, so the whitened block is W itself
    return block;
}

std::pair<Mat, Mat> between_blocks_linear(const Mat& w, const StateLayout& layout) {
    const int d = layout.state_dim();
    Mat bj(2, d), bj1(2, d);
    for (int c = 0; c < 2; ++c)
        for (int r = 0; r < 2; ++r) {
            bj(r, c) = -w(r, c);
            bj1(r, c) = w(r, c);
        }
    return {bj, bj1};
}

std::pair<Mat, Mat> between_blocks_pose(const Mat& w, const BetweenPoseParams& p, const StateLayout& layout) {
    Mat raw_j(3, 3), raw_j1(3, 3);
    raw_j(0, 0) = -p.c;
    raw_j(0, 1) = -p.s;
    raw_j(0, 2) = p.u;
    raw_j(1, 0) = p.s;
    raw_j(1, 1) = -p.c;
    raw_j(1, 2) = p.v;
    raw_j(2, 2) = -1.0;
    raw_j1(0, 0) = p.c;
    raw_j1(0, 1) = p.s;
    raw_j1(1, 0) = -p.s;
    raw_j1(1, 1) = p.c;
    raw_j1(2, 2) = 1.0;

    const int d = layout.state_dim();
    Mat bj(3, d), bj1(3, d);
    bj.set_block(0, 0, mat_mul(w, raw_j));
    bj1.set_block(0, 0, mat_mul(w, raw_j1));
    return {bj, bj1};
}

std::pair<Mat, Mat> motion_blocks(const Mat& w, const MotionParams& p, const StateLayout& layout) {
    const int rd = 4 + layout.bias_dim;
    const int d = layout.state_dim();
    const int vo = layout.vel_offset();
    const int bo = layout.bias_offset();

    Mat raw_j(rd, d), raw_j1(rd, d);
    for (int k = 0; k < 2; ++k) {
        raw_j(k, k) = -1.0;           // d h_pos / d p_j
        raw_j(k, vo + k) = -p.dt;     // d h_pos / d v_j
        raw_j(2 + k, vo + k) = -1.0;  // d h_vel / d v_j
        raw_j1(k, k) = 1.0;
        raw_j1(2 + k, vo + k) = 1.0;
    }
    if (layout.bias_dim == 1) {
        const double half_dt2 = 0.5 * p.dt * p.dt;
        raw_j(0, 2) = -half_dt2 * p.bias * (-p.s);  // d h_pos / d theta_j
        raw_j(1, 2) = -half_dt2 * p.bias * p.c;
        raw_j(0, bo) = -half_dt2 * p.c;  // d h_pos / d b_j
        raw_j(1, bo) = -half_dt2 * p.s;
        raw_j(4, bo) = -1.0;
        raw_j1(4, bo) = 1.0;
    }
    return {mat_mul(w, raw_j), mat_mul(w, raw_j1)};
}

MotionParams motion_params(const MotionFactor& f, const StateVec& states, const StateLayout& layout) {
    MotionParams p;
    p.dt = f.dt;
    if (layout.bias_dim == 1) {
        const KeyframeState& a = state_at(states, f.index);
        p.c = std::cos(a.theta);
        p.s = std::sin(a.theta);
        p.bias = a.bias;
    }
    return p;
}

BetweenPoseParams between_pose_params(const BetweenFactor& f, const StateVec& states, const StateLayout&) {
    const KeyframeState& a = state_at(states, f.index);
    const KeyframeState& b = state_at(states, f.index + 1);
    const double ddx = b.x - a.x;
    const double ddy = b.y - a.y;
    BetweenPoseParams p;
    p.c = std::cos(a.theta);
    p.s = std::sin(a.theta);
    p.u = -p.s * ddx + p.c * ddy;  // d h_t / d theta_j
    p.v = -p.c * ddx - p.s * ddy;
    return p;
}

}  // namespace detail

WhitenedBlockRow linearize(const GpsFactor& f, const StateVec& states, const StateLayout& layout) {
    check_sigma(f.sigma, 2, "gps");
    const Mat w = whitening_root(f.sigma);
    WhitenedBlockRow row;
    row.residual = mat_vec(w, residual(f, states, layout));
    row.blocks.push_back({f.index, detail::gps_block(w, layout)});
    return row;
}

WhitenedBlockRow linearize(const BetweenFactor& f, const StateVec& states, const StateLayout& layout) {
    const int rd = residual_dim(f, layout);
    check_sigma(f.sigma, rd, "between");
    const Mat w = whitening_root(f.sigma);
    WhitenedBlockRow row;
    row.residual = mat_vec(w, residual(f, states, layout));
    auto [bj, bj1] = layout.has_theta()
                         ? detail::between_blocks_pose(w, detail::between_pose_params(f, states, layout), layout)
                         : detail::between_blocks_linear(w, layout);
    row.blocks.push_back({f.index, std::move(bj)});
    row.blocks.push_back({f.index + 1, std::move(bj1)});
    return row;
}

WhitenedBlockRow linearize(const MotionFactor& f, const StateVec& states, const StateLayout& layout) {
    const int rd = residual_dim(f, layout);
    check_sigma(f.sigma, rd, "motion");
    if (!(f.dt > 0.0)) throw std::invalid_argument("motion factor requires dt > 0");
    const Mat w = whitening_root(f.sigma);
    WhitenedBlockRow row;
    row.residual = mat_vec(w, residual(f, states, layout));
    auto [bj, bj1] = detail::motion_blocks(w, detail::motion_params(f, states, layout), layout);
    row.blocks.push_back({f.index, std::move(bj)});
    row.blocks.push_back({f.index + 1, std::move(bj1)});
    return row;
}

}  // namespace chainfg
