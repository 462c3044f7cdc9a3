#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nlkv {

/// One sample of a vehicle trajectory on the longitudinal road axis.
/// Time in seconds, position in meters.
struct TrajectoryPoint {
    double t{0.0};
    double x{0.0};

    friend bool operator==(const TrajectoryPoint&, const TrajectoryPoint&) = default;
};

/// Time-ordered polyline of a single vehicle.
struct VehicleTrajectory {
    std::string vehicle_id;
    std::vector<TrajectoryPoint> points;

    [[nodiscard]] double start_time() const { return points.front().t; }
    [[nodiscard]] double end_time() const { return points.back().t; }

    friend bool operator==(const VehicleTrajectory&, const VehicleTrajectory&) = default;
};

enum class TimeUnit { seconds, milliseconds, frames };
enum class LengthUnit { meters, feet, kilometers };

[[nodiscard]] TimeUnit parse_time_unit(std::string_view name);
[[nodiscard]] LengthUnit parse_length_unit(std::string_view name);
[[nodiscard]] std::string_view to_string(TimeUnit unit);
[[nodiscard]] std::string_view to_string(LengthUnit unit);

/// Units the raw file was declared in. `frame_rate_hz` applies to TimeUnit::frames.
struct UnitDeclaration {
    TimeUnit time{TimeUnit::seconds};
    LengthUnit position{LengthUnit::meters};
    double frame_rate_hz{10.0};

    [[nodiscard]] double seconds_per_unit() const;
    [[nodiscard]] double meters_per_unit() const;
};

/// Axis-aligned space-time rectangle [t0, t0+T] x [x0, x0+X].
struct Domain {
    double t0{0.0};
    double x0{0.0};
    double T{0.0};
    double X{0.0};
};

/// Collection of validated trajectories plus the extents of the data.
class TrajectorySet {
public:
    TrajectorySet() = default;
    TrajectorySet(std::vector<VehicleTrajectory> trajectories, UnitDeclaration units = {});

    [[nodiscard]] const std::vector<VehicleTrajectory>& trajectories() const noexcept { return trajectories_; }
    [[nodiscard]] const UnitDeclaration& units_declared() const noexcept { return units_; }
    [[nodiscard]] std::size_t size() const noexcept { return trajectories_.size(); }
    [[nodiscard]] bool empty() const noexcept { return trajectories_.empty(); }
    [[nodiscard]] std::size_t point_count() const noexcept;

    /// Bounding box of every point in the set.
    [[nodiscard]] const Domain& domain() const noexcept { return domain_; }
    [[nodiscard]] double time_extent() const noexcept { return domain_.T; }
    [[nodiscard]] double space_extent() const noexcept { return domain_.X; }

private:
    std::vector<VehicleTrajectory> trajectories_;
    UnitDeclaration units_;
    Domain domain_;
};

/// Column mapping for delimited trajectory files.
struct ColumnSchema {
    std::string vehicle_id{"vehicle_id"};
    std::string time{"t_s"};
    std::string position{"x_m"};
    UnitDeclaration units{};
    /// 0 means detect from the header row (tab if present, comma otherwise).
    char delimiter{0};
};

/// Canonical `vehicle_id,t_s,x_m` layout.
[[nodiscard]] ColumnSchema generic_profile();
/// NGSIM layout: Vehicle_ID, Frame_ID at 10 Hz, Local_Y in feet.
[[nodiscard]] ColumnSchema ngsim_profile();
[[nodiscard]] ColumnSchema profile_by_name(std::string_view name);

struct ValidationOptions {
    /// Reject a trajectory when backward displacement exceeds this share of
    /// its total absolute displacement.
    double max_negative_fraction{0.01};
};

struct RejectionReport {
    std::string vehicle_id;
    std::size_t backward_steps{0};
    double negative_displacement{0.0};
    double total_displacement{0.0};
    double negative_fraction{0.0};
};

struct ValidationResult {
    std::optional<VehicleTrajectory> trajectory;
    std::optional<RejectionReport> rejection;
    std::size_t duplicates_removed{0};
    std::size_t backward_steps{0};

    [[nodiscard]] bool accepted() const noexcept { return trajectory.has_value(); }
};

/// Collapse duplicate timestamps (keep first), then reject or clamp
/// backward motion. Input must already be sorted by time.
[[nodiscard]] ValidationResult validate_trajectory(VehicleTrajectory trajectory,
                                                   const ValidationOptions& options = {});

struct ParseReport {
    std::size_t rows{0};
    std::size_t vehicles_seen{0};
    std::size_t dropped_short{0};
    std::size_t duplicates_removed{0};
    std::size_t backward_steps_clamped{0};
    std::vector<RejectionReport> rejected;
    bool lane_column_ignored{false};
    /// Offsets subtracted so that the set starts at t = 0, x = 0.
    double time_offset_s{0.0};
    double position_offset_m{0.0};
};

struct ParseResult {
    TrajectorySet set;
    ParseReport report;
};

/// Read a delimited trajectory file, convert to seconds/meters, group by
/// vehicle, validate each vehicle and shift the origin to (0, 0).
///
/// Throws DataError on malformed rows (with line number), empty input or a
/// degenerate extent, ConfigError on missing columns.
[[nodiscard]] ParseResult parse_trajectories(std::istream& source, const ColumnSchema& schema,
                                             const ValidationOptions& options = {});

/// Split wherever the union of trajectory time spans has a hole longer than
/// `gap_threshold` seconds. Each trajectory lands in exactly one segment.
[[nodiscard]] std::vector<TrajectorySet> segment_contiguous(const TrajectorySet& set,
                                                            double gap_threshold);

}  // namespace nlkv
