#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "chainfg/graph.hpp"
#include "chainfg/metrics.hpp"
#include "chainfg/solver.hpp"

namespace chainfg {

/// One measurement line. Grammar (one record per line, `#` starts a comment,
/// covariances listed as upper-triangle entries row by row):
///   LAYOUT linear|pose|full
///   GPS j zx zy | s00 s01 s11
///   BETWEEN j dx dy[ dtheta] | upper-triangle sigma
///   MOTION j dt | upper-triangle sigma
struct MeasurementRecord {
    std::variant<GpsFactor, BetweenFactor, MotionFactor> factor;
    int line = 0;
};

struct MeasurementFile {
    StateLayout layout;
    std::vector<MeasurementRecord> records;
};

/// Parse the stream. The state layout must be known before the first record,
/// either from a LAYOUT directive or from `layout_override`; when both are
/// given they must agree. Throws ParseError with a 1-based line number.
MeasurementFile parse_measurements(std::istream& in, std::optional<StateLayout> layout_override = {});
MeasurementFile read_measurement_file(const std::filesystem::path& path,
                                      std::optional<StateLayout> layout_override = {});

/// Assemble parsed records into a chain graph (n = highest referenced
/// keyframe). Duplicate records for the same slot raise ParseError.
ChainFactorGraph build_graph(const MeasurementFile& file);

std::string format_measurements(const ChainFactorGraph& graph);

const char* layout_name(const StateLayout& layout);
std::optional<StateLayout> layout_from_name(const std::string& name);

Trajectory states_to_trajectory(const StateVec& states, const StateLayout& layout);
StateVec trajectory_to_states(const Trajectory& trajectory);

/// CSV with header `index,x,y,theta[,vx,vy,bias]`; theta is written as 0 in
/// linear mode.
std::string format_trajectory_csv(const Trajectory& trajectory);
Trajectory parse_trajectory_csv(std::istream& in);
Trajectory read_trajectory_file(const std::filesystem::path& path);

/// Line-oriented report: one `iteration cost delta_inf` row per iteration.
std::string format_solve_report(const SolveReport& report);

/// Write via a temporary file in the same directory plus rename, so an
/// interrupted run never leaves a partial output.
void atomic_write(const std::filesystem::path& path, const std::string& content);
void atomic_write(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

std::string format_double(double v);  // %.17g

}  // namespace chainfg
