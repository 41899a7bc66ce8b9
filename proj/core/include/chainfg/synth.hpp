#pragma once

#include <cstdint>

#include "chainfg/graph.hpp"
#include "chainfg/metrics.hpp"

namespace chainfg {

/// Per-sensor measurement noise standard deviations (meters / radians). A
/// zero entry yields exact measurements with unit covariance in the records.
struct NoiseSpec {
    double gps = 0.1;
    double lidar = 0.05;
    double motion = 0.02;
};

struct SynthDataset {
    ChainFactorGraph graph;
    Trajectory truth;
};

/// Deterministic synthetic chain: ground truth follows a unit-step path with
/// sinusoidal heading; GPS at every keyframe, a between factor on every
/// consecutive pair, and (when the layout has velocity) a motion factor with
/// dt = 1. Measurements are truth plus Gaussian noise drawn from `seed`.
SynthDataset generate_dataset(int n, const StateLayout& layout, const NoiseSpec& noise, std::uint64_t seed);

}  // namespace chainfg
