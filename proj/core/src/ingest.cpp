#include "nlkv/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <numeric>

#include <spdlog/spdlog.h>

#include "nlkv/error.hpp"

namespace nlkv {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n\"");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n\"");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line, char delimiter) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(delimiter, start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

std::optional<double> to_double(std::string_view s) {
    double value{};
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, value);
    if (ec != std::errc{} || ptr != end || !std::isfinite(value)) return std::nullopt;
    return value;
}

bool looks_like_lane_column(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return lower == "lane" || lower == "lane_id" || lower == "lane_no";
}

}  // namespace

TimeUnit parse_time_unit(std::string_view name) {
    if (name == "s" || name == "seconds") return TimeUnit::seconds;
    if (name == "ms" || name == "milliseconds") return TimeUnit::milliseconds;
    if (name == "frames") return TimeUnit::frames;
    throw ConfigError("unknown time unit '" + std::string(name) + "'");
}

LengthUnit parse_length_unit(std::string_view name) {
    if (name == "m" || name == "meters") return LengthUnit::meters;
    if (name == "ft" || name == "feet") return LengthUnit::feet;
    if (name == "km" || name == "kilometers") return LengthUnit::kilometers;
    throw ConfigError("unknown length unit '" + std::string(name) + "'");
}

std::string_view to_string(TimeUnit unit) {
    switch (unit) {
        case TimeUnit::seconds: return "seconds";
        case TimeUnit::milliseconds: return "milliseconds";
        case TimeUnit::frames: return "frames";
    }
    return "?";
}

std::string_view to_string(LengthUnit unit) {
    switch (unit) {
        case LengthUnit::meters: return "meters";
        case LengthUnit::feet: return "feet";
        case LengthUnit::kilometers: return "kilometers";
    }
    return "?";
}

double UnitDeclaration::seconds_per_unit() const {
    switch (time) {
        case TimeUnit::seconds: return 1.0;
        case TimeUnit::milliseconds: return 1e-3;
        case TimeUnit::frames:
            if (!(frame_rate_hz > 0.0)) throw ConfigError("frame rate must be positive");
            return 1.0 / frame_rate_hz;
    }
    return 1.0;
}

double UnitDeclaration::meters_per_unit() const {
    switch (position) {
        case LengthUnit::meters: return 1.0;
        case LengthUnit::feet: return 0.3048;
        case LengthUnit::kilometers: return 1000.0;
    }
    return 1.0;
}

TrajectorySet::TrajectorySet(std::vector<VehicleTrajectory> trajectories, UnitDeclaration units)
    : trajectories_(std::move(trajectories)), units_(units) {
    double t_min = std::numeric_limits<double>::infinity();
    double t_max = -t_min;
    double x_min = t_min;
    double x_max = -t_min;
    for (const auto& traj : trajectories_) {
        for (const auto& p : traj.points) {
            t_min = std::min(t_min, p.t);
            t_max = std::max(t_max, p.t);
            x_min = std::min(x_min, p.x);
            x_max = std::max(x_max, p.x);
        }
    }
    if (std::isfinite(t_min)) domain_ = Domain{t_min, x_min, t_max - t_min, x_max - x_min};
}

std::size_t TrajectorySet::point_count() const noexcept {
    return std::accumulate(trajectories_.begin(), trajectories_.end(), std::size_t{0},
                           [](std::size_t acc, const auto& t) { return acc + t.points.size(); });
}

ColumnSchema generic_profile() { return ColumnSchema{}; }

ColumnSchema ngsim_profile() {
    ColumnSchema schema;
    schema.vehicle_id = "Vehicle_ID";
    schema.time = "Frame_ID";
    schema.position = "Local_Y";
    schema.units = UnitDeclaration{TimeUnit::frames, LengthUnit::feet, 10.0};
    return schema;
}

ColumnSchema profile_by_name(std::string_view name) {
    if (name == "generic") return generic_profile();
    if (name == "ngsim") return ngsim_profile();
    throw ConfigError("unknown schema profile '" + std::string(name) + "'");
}

ValidationResult validate_trajectory(VehicleTrajectory trajectory, const ValidationOptions& options) {
    ValidationResult result;
    auto& pts = trajectory.points;

    const auto before = pts.size();
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const TrajectoryPoint& a, const TrajectoryPoint& b) { return a.t == b.t; }),
              pts.end());
    result.duplicates_removed = before - pts.size();

    double negative = 0.0;
    double total = 0.0;
    for (std::size_t k = 1; k < pts.size(); ++k) {
        const double step = pts[k].x - pts[k - 1].x;
        total += std::abs(step);
        if (step < 0.0) {
            negative -= step;
            ++result.backward_steps;
        }
    }

    if (total > 0.0 && negative / total > options.max_negative_fraction) {
        result.rejection = RejectionReport{trajectory.vehicle_id, result.backward_steps, negative, total,
                                           negative / total};
        return result;
    }

    double running = pts.empty() ? 0.0 : pts.front().x;
    for (auto& p : pts) {
        running = std::max(running, p.x);
        p.x = running;
    }
    result.trajectory = std::move(trajectory);
    return result;
}

ParseResult parse_trajectories(std::istream& source, const ColumnSchema& schema,
                               const ValidationOptions& options) {
    const double sec_per_unit = schema.units.seconds_per_unit();
    const double m_per_unit = schema.units.meters_per_unit();

    std::string line;
    std::size_t line_no = 0;
    std::string header;
    while (std::getline(source, line)) {
        ++line_no;
        if (!trim(line).empty()) {
            header = line;
            break;
        }
    }
    if (header.empty()) throw DataError("empty trajectory file");

    const char delimiter =
        schema.delimiter != 0 ? schema.delimiter : (header.find('\t') != std::string::npos ? '\t' : ',');
    const auto columns = split(header, delimiter);

    auto column_index = [&](const std::string& name) {
        const auto it = std::find(columns.begin(), columns.end(), name);
        if (it == columns.end()) throw ConfigError("column '" + name + "' not found in header");
        return static_cast<std::size_t>(it - columns.begin());
    };
    const auto id_col = column_index(schema.vehicle_id);
    const auto t_col = column_index(schema.time);
    const auto x_col = column_index(schema.position);
    const auto needed = std::max({id_col, t_col, x_col}) + 1;

    ParseResult result;
    result.report.lane_column_ignored =
        std::any_of(columns.begin(), columns.end(), [](auto c) { return looks_like_lane_column(c); });
    if (result.report.lane_column_ignored) {
        spdlog::info("lane column present; all lanes are aggregated onto one axis");
    }

    std::map<std::string, std::vector<TrajectoryPoint>, std::less<>> grouped;
    while (std::getline(source, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split(line, delimiter);
        if (fields.size() < needed) {
            throw DataError("malformed row at line " + std::to_string(line_no) + ": expected at least " +
                            std::to_string(needed) + " fields");
        }
        const auto t = to_double(fields[t_col]);
        const auto x = to_double(fields[x_col]);
        if (!t || !x || fields[id_col].empty()) {
            throw DataError("malformed row at line " + std::to_string(line_no));
        }
        grouped[std::string(fields[id_col])].push_back({*t * sec_per_unit, *x * m_per_unit});
        ++result.report.rows;
    }
    if (result.report.rows == 0) throw DataError("trajectory file has a header but no rows");

    std::vector<VehicleTrajectory> accepted;
    for (auto& [id, points] : grouped) {
        ++result.report.vehicles_seen;
        std::stable_sort(points.begin(), points.end(),
                         [](const auto& a, const auto& b) { return a.t < b.t; });
        auto validated = validate_trajectory(VehicleTrajectory{id, std::move(points)}, options);
        result.report.duplicates_removed += validated.duplicates_removed;
        if (!validated.accepted()) {
            result.report.rejected.push_back(*validated.rejection);
            continue;
        }
        if (validated.trajectory->points.size() < 2) {
            ++result.report.dropped_short;
            continue;
        }
        result.report.backward_steps_clamped += validated.backward_steps;
        accepted.push_back(std::move(*validated.trajectory));
    }
    if (result.report.dropped_short > 0) {
        spdlog::warn("dropped {} vehicle(s) with fewer than 2 points", result.report.dropped_short);
    }
    if (!result.report.rejected.empty()) {
        spdlog::warn("rejected {} vehicle(s) for backward motion", result.report.rejected.size());
    }
    if (accepted.empty()) throw DataError("no usable trajectories after validation");

    const TrajectorySet raw(std::move(accepted), schema.units);
    const auto& box = raw.domain();
    if (!(box.T > 0.0) || !(box.X > 0.0)) {
        throw DataError("trajectory set has zero time or space extent");
    }
    result.report.time_offset_s = box.t0;
    result.report.position_offset_m = box.x0;

    auto shifted = raw.trajectories();
    for (auto& traj : shifted) {
        for (auto& p : traj.points) {
            p.t -= box.t0;
            p.x -= box.x0;
        }
    }
    result.set = TrajectorySet(std::move(shifted), schema.units);
    return result;
}

std::vector<TrajectorySet> segment_contiguous(const TrajectorySet& set, double gap_threshold) {
    if (!(gap_threshold > 0.0)) throw ConfigError("gap threshold must be positive");
    const auto& trajs = set.trajectories();
    if (trajs.empty()) return {};

    std::vector<std::size_t> order(trajs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return trajs[a].start_time() < trajs[b].start_time();
    });

    std::vector<std::vector<std::size_t>> groups;
    double covered_until = -std::numeric_limits<double>::infinity();
    for (const auto idx : order) {
        if (groups.empty() || trajs[idx].start_time() - covered_until > gap_threshold) groups.emplace_back();
        groups.back().push_back(idx);
        covered_until = std::max(covered_until, trajs[idx].end_time());
    }

    std::vector<TrajectorySet> segments;
    segments.reserve(groups.size());
    for (auto& group : groups) {
        // keep the original vehicle order inside a segment
        std::sort(group.begin(), group.end());
        std::vector<VehicleTrajectory> members;
        members.reserve(group.size());
        for (const auto idx : group) members.push_back(trajs[idx]);
        segments.emplace_back(std::move(members), set.units_declared());
    }
    return segments;
}

}  // namespace nlkv
