#pragma once

#include <utility>
#include <vector>

#include "chainfg/mat.hpp"

namespace chainfg {

/// Block layout of one composite keyframe variable. Components are ordered
/// (x, y[, theta][, vx, vy][, bias]); every keyframe is a single variable
/// node, so one factor block spans state_dim() columns.
struct StateLayout {
    int pose_dim = 2;  // 2 = (x, y), 3 = (x, y, theta)
    int vel_dim = 0;   // 0 or 2
    int bias_dim = 0;  // 0 or 1

    int state_dim() const { return pose_dim + vel_dim + bias_dim; }
    bool has_theta() const { return pose_dim == 3; }
    int vel_offset() const { return pose_dim; }
    int bias_offset() const { return pose_dim + vel_dim; }

    static StateLayout linear_mode() { return {2, 0, 0}; }
    static StateLayout pose_mode() { return {3, 0, 0}; }
    static StateLayout full_mode() { return {3, 2, 1}; }

    bool operator==(const StateLayout&) const = default;
};

struct KeyframeState {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;  // used iff pose_dim == 3; kept in (-pi, pi]
    double vx = 0.0;
    double vy = 0.0;
    double bias = 0.0;
};

/// states[i - 1] holds keyframe i (ids are 1-based throughout).
using StateVec = std::vector<KeyframeState>;

/// Wrap an angle into (-pi, pi].
double wrap_angle(double t);

Vec state_to_vector(const KeyframeState& s, const StateLayout& layout);
KeyframeState state_from_vector(const Vec& v, const StateLayout& layout);

/// Position measurement of keyframe `index`: h(x) = (x, y).
struct GpsFactor {
    int index = 0;
    double zx = 0.0;
    double zy = 0.0;
    Mat sigma;  // 2x2 SPD
};

/// Relative-pose measurement between keyframes (index, index + 1).
/// Linear mode: h = p_{j+1} - p_j (2-dim z). Pose mode: h = (R(-theta_j)
/// (t_{j+1} - t_j), theta_{j+1} - theta_j) with the angle residual wrapped.
struct BetweenFactor {
    int index = 0;
    double dx = 0.0;
    double dy = 0.0;
    double dtheta = 0.0;  // ignored in linear mode
    Mat sigma;            // 2x2 or 3x3 SPD matching the mode
};

/// Constant-velocity kinematic constraint between keyframes (index,
/// index + 1); the measurement is identically zero:
/// h = (p_{j+1} - p_j - v_j dt - dt^2/2 b_j u(theta_j), v_{j+1} - v_j
///      [, b_{j+1} - b_j])
/// with u(theta) the heading unit vector. The bias models a longitudinal
/// acceleration offset; the double-integration term in the position rows is
/// what makes the absolute bias observable (a pure random walk would leave a
/// constant-bias nullspace in every graph).
struct MotionFactor {
    int index = 0;
    double dt = 0.0;
    Mat sigma;  // (4 + bias_dim) SPD
};

/// Whitened residual and per-variable Jacobian blocks of one factor:
/// block = Sigma^{-1/2} dh/dX, residual = Sigma^{-1/2} (z - h(X)).
struct WhitenedBlockRow {
    struct Entry {
        int index;
        Mat block;  // residual_dim x state_dim
    };
    Vec residual;
    std::vector<Entry> blocks;
};

int residual_dim(const GpsFactor&, const StateLayout&);
int residual_dim(const BetweenFactor&, const StateLayout&);
int residual_dim(const MotionFactor&, const StateLayout&);

Vec residual(const GpsFactor& f, const StateVec& states, const StateLayout& layout);
Vec residual(const BetweenFactor& f, const StateVec& states, const StateLayout& layout);
Vec residual(const MotionFactor& f, const StateVec& states, const StateLayout& layout);

WhitenedBlockRow linearize(const GpsFactor& f, const StateVec& states, const StateLayout& layout);
WhitenedBlockRow linearize(const BetweenFactor& f, const StateVec& states, const StateLayout& layout);
WhitenedBlockRow linearize(const MotionFactor& f, const StateVec& states, const StateLayout& layout);

/// Sigma^{-1/2} as the inverse of the lower Cholesky factor.
Mat whitening_root(const Mat& sigma);

namespace detail {

// Structural block builders. Both linearize() and the compressed-storage
// decoder construct whitened Jacobian blocks through these, so a decoded
// block is bit-identical to the one produced at linearization time.

struct BetweenPoseParams {
    double c = 1.0;  // cos(theta_j)
    double s = 0.0;  // sin(theta_j)
    double u = 0.0;  // d h_t / d theta_j, first row
    double v = 0.0;  // second row
};

struct MotionParams {
    double dt = 0.0;
    double c = 1.0;     // cos(theta_j); only used when the layout has a bias
    double s = 0.0;     // sin(theta_j)
    double bias = 0.0;  // b_j at the linearization point
};

Mat gps_block(const Mat& w, const StateLayout& layout);
std::pair<Mat, Mat> between_blocks_linear(const Mat& w, const StateLayout& layout);
std::pair<Mat, Mat> between_blocks_pose(const Mat& w, const BetweenPoseParams& p, const StateLayout& layout);
std::pair<Mat, Mat> motion_blocks(const Mat& w, const MotionParams& p, const StateLayout& layout);

BetweenPoseParams between_pose_params(const BetweenFactor& f, const StateVec& states, const StateLayout& layout);
MotionParams motion_params(const MotionFactor& f, const StateVec& states, const StateLayout& layout);

}  // namespace detail

}  // namespace chainfg
