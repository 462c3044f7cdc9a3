#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "nlkv/ingest.hpp"

namespace nlkv {

/// Sliding-grid discretization. Subdomain (i, j) covers
/// [i*ts, i*ts + dt] x [j*xs, j*xs + dx] relative to the domain origin.
struct GridSpec {
    double dt{50.0};  ///< subdomain duration [s]
    double dx{300.0}; ///< subdomain length [m]
    double ts{2.0};   ///< sliding time step [s]
    double xs{3.0};   ///< sliding space step [m]
    double tm{12.0};  ///< anticipation (transition) time [s]

    /// Throws ConfigError unless all values are positive, ts <= dt, xs <= dx
    /// and tm >= ts.
    void validate() const;
};

/// Largest subdomain indices. The grid has (I + 1) x (J + 1) cells.
struct GridDims {
    std::size_t I{0};
    std::size_t J{0};

    [[nodiscard]] std::size_t rows() const noexcept { return I + 1; }
    [[nodiscard]] std::size_t cols() const noexcept { return J + 1; }
    friend bool operator==(const GridDims&, const GridDims&) = default;
};

/// I = floor((T - dt)/ts), J = floor((X - dx)/xs). Throws DataError
/// ("domain too small for grid") when T < dt or X < dx.
[[nodiscard]] GridDims grid_dims(const GridSpec& spec, double T, double X);

/// floor() that tolerates representation error just below an integer,
/// e.g. 0.3/0.1 evaluating to 2.9999999999999996.
[[nodiscard]] long long floor_steps(double ratio) noexcept;

enum class Quantity { speed, density, acceleration, anticipated_density };

[[nodiscard]] std::string_view to_string(Quantity q);

/// Dense row-major grid of optional cells; row index is time (i), column
/// index is space (j). Empty cells are explicit.
template <typename T>
class CellGrid {
public:
    CellGrid() = default;
    explicit CellGrid(GridDims dims) : dims_(dims), cells_(dims.rows() * dims.cols()) {}

    [[nodiscard]] const GridDims& dims() const noexcept { return dims_; }
    [[nodiscard]] std::size_t rows() const noexcept { return dims_.rows(); }
    [[nodiscard]] std::size_t cols() const noexcept { return dims_.cols(); }

    [[nodiscard]] const std::optional<T>& at(std::size_t i, std::size_t j) const {
        return cells_[i * cols() + j];
    }
    void set(std::size_t i, std::size_t j, T value) { cells_[i * cols() + j] = value; }
    void clear(std::size_t i, std::size_t j) { cells_[i * cols() + j].reset(); }

    /// Bounds-checked lookup; out-of-range indices read as empty.
    [[nodiscard]] std::optional<T> lookup(long long i, long long j) const {
        if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= rows() || static_cast<std::size_t>(j) >= cols()) {
            return std::nullopt;
        }
        return at(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    }

    [[nodiscard]] std::size_t defined_count() const noexcept {
        std::size_t n = 0;
        for (const auto& c : cells_) n += c.has_value() ? 1 : 0;
        return n;
    }

private:
    GridDims dims_;
    std::vector<std::optional<T>> cells_;
};

/// Scalar field over the sliding grid. SI units: m/s, veh/m, m/s^2.
class MacroField : public CellGrid<double> {
public:
    MacroField() = default;
    MacroField(GridDims dims, Quantity quantity) : CellGrid<double>(dims), quantity_(quantity) {}

    [[nodiscard]] Quantity quantity() const noexcept { return quantity_; }

private:
    Quantity quantity_{Quantity::speed};
};

/// Acceleration-sign labels: 0 accelerating, 1 decelerating.
using SignField = CellGrid<std::uint8_t>;

/// Space-time rectangle [t0, t1] x [x0, x1].
struct CellRect {
    double t0{0.0};
    double t1{0.0};
    double x0{0.0};
    double x1{0.0};
};

/// Distance travelled and time spent by one vehicle inside a rectangle.
struct Contribution {
    double distance{0.0};
    double duration{0.0};
};

/// Clip the linearly interpolated trajectory to `cell`. A vehicle standing
/// still is counted on the half-open interval [x0, x1).
[[nodiscard]] Contribution cell_contributions(const VehicleTrajectory& trajectory, const CellRect& cell);

struct SpeedDensityFields {
    GridSpec spec;
    Domain domain;
    MacroField speed;    ///< V [m/s]
    MacroField density;  ///< K [veh/m]

    [[nodiscard]] CellRect cell(std::size_t i, std::size_t j) const;
};

/// Cells whose accumulated travel time is below this are empty.
inline constexpr double kMinCellTravelTime = 1e-6;

/// Edie estimates over every subdomain of `domain`:
/// K = sum(t_n) / (dx*dt), V = sum(x_n) / sum(t_n).
[[nodiscard]] SpeedDensityFields estimate_vk_fields(std::span<const VehicleTrajectory> trajectories,
                                                    const Domain& domain, const GridSpec& spec);
[[nodiscard]] SpeedDensityFields estimate_vk_fields(const TrajectorySet& set, const GridSpec& spec);

/// A(i,j) = (V(i+1, j+b) - V(i,j)) / ts with b = floor(V(i,j)*ts/xs);
/// empty whenever either speed cell is missing or out of range.
[[nodiscard]] MacroField estimate_acceleration_field(const MacroField& speed, const GridSpec& spec);

/// 0 where A > zero_tol, 1 where A < -zero_tol, empty otherwise.
[[nodiscard]] SignField label_signs(const MacroField& acceleration, double zero_tol = 1e-9);

}  // namespace nlkv
