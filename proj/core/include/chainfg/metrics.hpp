#pragma once

#include <vector>

#include "chainfg/factors.hpp"

namespace chainfg {

struct TrajectoryPoint {
    int index = 0;
    KeyframeState state;
};

/// Ordered keyframe states with strictly increasing indices.
struct Trajectory {
    StateLayout layout;
    std::vector<TrajectoryPoint> points;
};

struct RpeResult {
    double rmse = 0.0;
    double max_error = 0.0;
};

/// Relative pose error over consecutive keyframe pairs, translation only.
/// Each step's relative translation is expressed in the earlier ground-truth
/// frame before differencing; the error is the Euclidean norm.
RpeResult rpe(const Trajectory& estimate, const Trajectory& truth);

}  // namespace chainfg
