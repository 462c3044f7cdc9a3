#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "nlkv/fields.hpp"

namespace nlkv {

/// Non-local sample: anticipated density, current speed and the
/// acceleration-sign label (0 accelerating, 1 decelerating). SI units.
/// `i`, `j` and `acceleration` record the source cell for diagnostics.
struct NlkvSample {
    double k_a{0.0};  ///< veh/m
    double v{0.0};    ///< m/s
    std::uint8_t y{0};
    std::uint32_t i{0};
    std::uint32_t j{0};
    double acceleration{0.0};  ///< m/s^2, NaN when unknown
};

/// Local density-speed sample. SI units.
struct LkvSample {
    double k{0.0};  ///< veh/m
    double v{0.0};  ///< m/s
};

/// Index offsets of the anticipated cell: i' = i + time_shift,
/// j' = j + floor(V(i,j) * tm / xs).
[[nodiscard]] long long anticipation_time_shift(const GridSpec& spec) noexcept;
[[nodiscard]] long long anticipation_space_shift(double speed, const GridSpec& spec) noexcept;

/// Ka(i,j) = K(i', j'); empty where V(i,j) is empty, the shifted cell is
/// outside the grid or K(i',j') is empty.
[[nodiscard]] MacroField anticipated_density_field(const MacroField& density, const MacroField& speed,
                                                   const GridSpec& spec);

struct AssemblyOptions {
    /// Below this many samples a warning is logged.
    std::size_t min_samples{100};
};

/// One sample per cell where Ka, V and y are all defined, row-major order.
/// `acceleration` is optional and only feeds the provenance column.
[[nodiscard]] std::vector<NlkvSample> assemble_nlkv(const MacroField& anticipated_density, const MacroField& speed,
                                                    const SignField& signs,
                                                    const MacroField* acceleration = nullptr,
                                                    const AssemblyOptions& options = {});

/// One sample per cell where K and V are defined, row-major order.
[[nodiscard]] std::vector<LkvSample> assemble_lkv(const MacroField& density, const MacroField& speed,
                                                  const AssemblyOptions& options = {});

/// All fields derived from one contiguous trajectory segment.
struct FieldBundle {
    SpeedDensityFields vk;
    MacroField acceleration;
    SignField signs;
    MacroField anticipated_density;
};

/// V, K, A, y and Ka for one segment.
[[nodiscard]] FieldBundle estimate_field_bundle(const TrajectorySet& segment, const GridSpec& spec,
                                                double zero_tol = 1e-9);

}  // namespace nlkv
