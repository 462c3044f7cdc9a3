#include "nlkv/fields.hpp"

#include <algorithm>
#include <cmath>

#include "nlkv/error.hpp"

namespace nlkv {

namespace {

// Sorted, de-duplicated union of subdomain start/end coordinates along one
// axis. Every subdomain is then an exact union of contiguous base bins.
struct BaseAxis {
    std::vector<double> edges;
    std::vector<std::size_t> first;  // per subdomain: first base bin
    std::vector<std::size_t> last;   // per subdomain: one past the last base bin

    [[nodiscard]] std::size_t bins() const { return edges.size() - 1; }
};

BaseAxis make_base_axis(double origin, double step, double length, std::size_t count) {
    BaseAxis axis;
    std::vector<double> starts(count);
    std::vector<double> ends(count);
    for (std::size_t i = 0; i < count; ++i) {
        starts[i] = origin + static_cast<double>(i) * step;
        ends[i] = starts[i] + length;
    }
    std::vector<double> all;
    all.reserve(2 * count);
    std::merge(starts.begin(), starts.end(), ends.begin(), ends.end(), std::back_inserter(all));

    const double eps = 1e-9 * std::max({1.0, std::abs(origin), all.back() - origin});
    for (const double v : all) {
        if (axis.edges.empty() || v - axis.edges.back() > eps) axis.edges.push_back(v);
    }

    auto index_of = [&](double v) {
        return static_cast<std::size_t>(std::lower_bound(axis.edges.begin(), axis.edges.end(), v - eps) -
                                        axis.edges.begin());
    };
    axis.first.resize(count);
    axis.last.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        axis.first[i] = index_of(starts[i]);
        axis.last[i] = index_of(ends[i]);
    }
    return axis;
}

// Base bin containing v, or npos when v lies outside [front, back).
std::size_t bin_of(const std::vector<double>& edges, double v) {
    if (v < edges.front() || v >= edges.back()) return static_cast<std::size_t>(-1);
    return static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), v) - edges.begin()) - 1;
}

class BaseAccumulator {
public:
    BaseAccumulator(const BaseAxis& time, const BaseAxis& space)
        : time_(time), space_(space), cols_(space.bins()),
          travel_time_(time.bins() * cols_, 0.0), distance_(time.bins() * cols_, 0.0) {}

    void add(const VehicleTrajectory& trajectory) {
        const auto& pts = trajectory.points;
        for (std::size_t k = 1; k < pts.size(); ++k) add_segment(pts[k - 1], pts[k]);
    }

    [[nodiscard]] const std::vector<double>& travel_time() const { return travel_time_; }
    [[nodiscard]] const std::vector<double>& distance() const { return distance_; }
    [[nodiscard]] std::size_t cols() const { return cols_; }

private:
    void add_segment(const TrajectoryPoint& p, const TrajectoryPoint& q) {
        const auto& te = time_.edges;
        if (!(q.t > p.t) || q.t <= te.front() || p.t >= te.back()) return;
        const double slope = (q.x - p.x) / (q.t - p.t);
        const double t_begin = std::max(p.t, te.front());
        const double t_end = std::min(q.t, te.back());
        auto row = static_cast<std::size_t>(std::upper_bound(te.begin(), te.end(), t_begin) - te.begin()) - 1;
        for (; row < time_.bins() && te[row] < t_end; ++row) {
            const double ta = std::max(t_begin, te[row]);
            const double tb = std::min(t_end, te[row + 1]);
            if (!(tb > ta)) continue;
            const double xa = p.x + slope * (ta - p.t);
            const double xb = p.x + slope * (tb - p.t);
            add_piece(row, tb - ta, xa, xb);
        }
    }

    void add_piece(std::size_t row, double duration, double xa, double xb) {
        const auto& xe = space_.edges;
        double* tt = travel_time_.data() + row * cols_;
        double* dd = distance_.data() + row * cols_;
        if (xa == xb) {
            const auto col = bin_of(xe, xa);
            if (col < cols_) tt[col] += duration;
            return;
        }
        const double lo = std::min(xa, xb);
        const double hi = std::max(xa, xb);
        const double span = hi - lo;
        const double sign = xb > xa ? 1.0 : -1.0;
        const double clip_lo = std::max(lo, xe.front());
        const double clip_hi = std::min(hi, xe.back());
        if (!(clip_hi > clip_lo)) return;
        auto col = static_cast<std::size_t>(std::upper_bound(xe.begin(), xe.end(), clip_lo) - xe.begin()) - 1;
        for (; col < cols_ && xe[col] < clip_hi; ++col) {
            const double overlap = std::min(clip_hi, xe[col + 1]) - std::max(clip_lo, xe[col]);
            if (!(overlap > 0.0)) continue;
            tt[col] += duration * (overlap / span);
            dd[col] += sign * overlap;
        }
    }

    const BaseAxis& time_;
    const BaseAxis& space_;
    std::size_t cols_;
    std::vector<double> travel_time_;
    std::vector<double> distance_;
};

// Window sums over base bins, first along space then along time. Summation
// order is fixed, so results do not depend on anything but the inputs.
std::vector<double> window_sums(const std::vector<double>& base, std::size_t base_cols, const BaseAxis& time,
                                const BaseAxis& space) {
    const std::size_t base_rows = time.bins();
    const std::size_t cols = space.first.size();
    std::vector<double> by_space(base_rows * cols, 0.0);
    for (std::size_t r = 0; r < base_rows; ++r) {
        const double* row = base.data() + r * base_cols;
        for (std::size_t j = 0; j < cols; ++j) {
            double s = 0.0;
            for (std::size_t c = space.first[j]; c < space.last[j]; ++c) s += row[c];
            by_space[r * cols + j] = s;
        }
    }
    const std::size_t rows = time.first.size();
    std::vector<double> out(rows * cols, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
        double* dst = out.data() + i * cols;
        for (std::size_t r = time.first[i]; r < time.last[i]; ++r) {
            const double* src = by_space.data() + r * cols;
            for (std::size_t j = 0; j < cols; ++j) dst[j] += src[j];
        }
    }
    return out;
}

}  // namespace

void GridSpec::validate() const {
    if (!(dt > 0.0 && dx > 0.0 && ts > 0.0 && xs > 0.0 && tm > 0.0)) {
        throw ConfigError("grid parameters must all be positive");
    }
    if (ts > dt) throw ConfigError("sliding time step ts must not exceed dt");
    if (xs > dx) throw ConfigError("sliding space step xs must not exceed dx");
    if (tm < ts) throw ConfigError("transition time tm must be at least ts");
}

long long floor_steps(double ratio) noexcept {
    return static_cast<long long>(std::floor(ratio + 1e-9 * std::max(1.0, std::abs(ratio))));
}

GridDims grid_dims(const GridSpec& spec, double T, double X) {
    spec.validate();
    const double tol_t = 1e-9 * std::max(1.0, spec.dt);
    const double tol_x = 1e-9 * std::max(1.0, spec.dx);
    if (T < spec.dt - tol_t || X < spec.dx - tol_x) throw DataError("domain too small for grid");
    const auto I = std::max(0LL, floor_steps((T - spec.dt) / spec.ts));
    const auto J = std::max(0LL, floor_steps((X - spec.dx) / spec.xs));
    return GridDims{static_cast<std::size_t>(I), static_cast<std::size_t>(J)};
}

std::string_view to_string(Quantity q) {
    switch (q) {
        case Quantity::speed: return "speed";
        case Quantity::density: return "density";
        case Quantity::acceleration: return "acceleration";
        case Quantity::anticipated_density: return "anticipated_density";
    }
    return "?";
}

Contribution cell_contributions(const VehicleTrajectory& trajectory, const CellRect& cell) {
    Contribution out;
    const auto& pts = trajectory.points;
    for (std::size_t k = 1; k < pts.size(); ++k) {
        const auto& p = pts[k - 1];
        const auto& q = pts[k];
        const double dt = q.t - p.t;
        const double dx = q.x - p.x;
        if (!(dt > 0.0)) continue;

        if (dx == 0.0) {
            if (p.x < cell.x0 || p.x >= cell.x1) continue;
            const double ta = std::max(p.t, cell.t0);
            const double tb = std::min(q.t, cell.t1);
            if (tb > ta) out.duration += tb - ta;
            continue;
        }

        // Liang-Barsky parametric clipping of p + u*(q - p), u in [0, 1].
        double u0 = 0.0;
        double u1 = 1.0;
        const double dirs[4] = {-dt, dt, -dx, dx};
        const double dists[4] = {p.t - cell.t0, cell.t1 - p.t, p.x - cell.x0, cell.x1 - p.x};
        bool visible = true;
        for (int e = 0; e < 4 && visible; ++e) {
            const double r = dists[e] / dirs[e];
            if (dirs[e] < 0.0) {
                u0 = std::max(u0, r);
            } else {
                u1 = std::min(u1, r);
            }
            visible = u0 < u1;
        }
        if (!visible) continue;
        out.duration += (u1 - u0) * dt;
        out.distance += (u1 - u0) * dx;
    }
    return out;
}

CellRect SpeedDensityFields::cell(std::size_t i, std::size_t j) const {
    const double t0 = domain.t0 + static_cast<double>(i) * spec.ts;
    const double x0 = domain.x0 + static_cast<double>(j) * spec.xs;
    return CellRect{t0, t0 + spec.dt, x0, x0 + spec.dx};
}

SpeedDensityFields estimate_vk_fields(std::span<const VehicleTrajectory> trajectories, const Domain& domain,
                                      const GridSpec& spec) {
    const auto dims = grid_dims(spec, domain.T, domain.X);
    const auto time_axis = make_base_axis(domain.t0, spec.ts, spec.dt, dims.rows());
    const auto space_axis = make_base_axis(domain.x0, spec.xs, spec.dx, dims.cols());

    BaseAccumulator acc(time_axis, space_axis);
    for (const auto& traj : trajectories) acc.add(traj);

    const auto sum_t = window_sums(acc.travel_time(), acc.cols(), time_axis, space_axis);
    const auto sum_x = window_sums(acc.distance(), acc.cols(), time_axis, space_axis);

    SpeedDensityFields out{spec, domain, MacroField(dims, Quantity::speed), MacroField(dims, Quantity::density)};
    const double area = spec.dx * spec.dt;
    for (std::size_t i = 0; i < dims.rows(); ++i) {
        for (std::size_t j = 0; j < dims.cols(); ++j) {
            const double t = sum_t[i * dims.cols() + j];
            if (t < kMinCellTravelTime) continue;
            out.density.set(i, j, t / area);
            out.speed.set(i, j, sum_x[i * dims.cols() + j] / t);
        }
    }
    return out;
}

SpeedDensityFields estimate_vk_fields(const TrajectorySet& set, const GridSpec& spec) {
    return estimate_vk_fields(set.trajectories(), set.domain(), spec);
}

MacroField estimate_acceleration_field(const MacroField& speed, const GridSpec& spec) {
    spec.validate();
    MacroField accel(speed.dims(), Quantity::acceleration);
    const auto I = static_cast<long long>(speed.dims().I);
    for (std::size_t i = 0; i < speed.rows(); ++i) {
        if (static_cast<long long>(i) > I - 1) break;
        for (std::size_t j = 0; j < speed.cols(); ++j) {
            const auto& v = speed.at(i, j);
            if (!v) continue;
            const auto b = floor_steps(*v * spec.ts / spec.xs);
            const auto next = speed.lookup(static_cast<long long>(i) + 1, static_cast<long long>(j) + b);
            if (!next) continue;
            accel.set(i, j, (*next - *v) / spec.ts);
        }
    }
    return accel;
}

SignField label_signs(const MacroField& acceleration, double zero_tol) {
    SignField signs(acceleration.dims());
    for (std::size_t i = 0; i < acceleration.rows(); ++i) {
        for (std::size_t j = 0; j < acceleration.cols(); ++j) {
            const auto& a = acceleration.at(i, j);
            if (!a) continue;
            if (*a > zero_tol) {
                signs.set(i, j, 0);
            } else if (*a < -zero_tol) {
                signs.set(i, j, 1);
            }
        }
    }
    return signs;
}

}  // namespace nlkv
