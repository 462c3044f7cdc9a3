#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nlkv/anticipation.hpp"
#include "nlkv/fields.hpp"
#include "nlkv/fitting.hpp"
#include "nlkv/ingest.hpp"
#include "nlkv/models.hpp"
#include "nlkv/validation.hpp"

// Text formats. Numbers are written in shortest round-trip form; samples and
// parameters are stored in km/h and veh/km, fields in SI.
namespace nlkv::io {

/// Shortest decimal text that parses back to the same double.
[[nodiscard]] std::string format_number(double value);

/// `vehicle_id,t_s,x_m`, one row per point.
void write_trajectories_csv(std::ostream& out, const TrajectorySet& set);
[[nodiscard]] TrajectorySet read_trajectories_csv(std::istream& in);

/// Geometry needed to place a field dump back on its grid.
struct FieldMeta {
    GridSpec spec;
    Domain domain;
    GridDims dims;
    Quantity quantity{Quantity::speed};
};

[[nodiscard]] std::string_view si_unit(Quantity quantity) noexcept;

/// `i,j,t0_s,x0_m,value` for defined cells; the sidecar carries the grid
/// size so empty cells can be restored.
void write_field_csv(std::ostream& out, const MacroField& field, const GridSpec& spec, const Domain& domain);
void write_sign_csv(std::ostream& out, const SignField& signs, const GridSpec& spec, const Domain& domain);
[[nodiscard]] MacroField read_field_csv(std::istream& in, GridDims dims, Quantity quantity);
[[nodiscard]] SignField read_sign_csv(std::istream& in, GridDims dims);

[[nodiscard]] std::string field_meta_json(const FieldMeta& meta);
[[nodiscard]] FieldMeta field_meta_from_json(std::string_view text);

/// `k_a_veh_per_km,v_km_per_h,y` plus `i,j,a_mps2` when `provenance`.
void write_nlkv_csv(std::ostream& out, std::span<const NlkvSample> samples, bool provenance = true);
[[nodiscard]] std::vector<NlkvSample> read_nlkv_csv(std::istream& in);

/// `k_veh_per_km,v_km_per_h`.
void write_lkv_csv(std::ostream& out, std::span<const LkvSample> samples);
[[nodiscard]] std::vector<LkvSample> read_lkv_csv(std::istream& in);

/// {"model": ..., "params": {...}, "units": {"speed": "km/h", "density": "veh/km"}}
[[nodiscard]] std::string params_json(const FdParams& params);
[[nodiscard]] FdParams params_from_json(std::string_view text);

[[nodiscard]] std::string fit_report_json(const FitResult& fit);

/// `k_bin_lo,k_bin_hi,v_bin_lo,v_bin_hi,p,n`; p is blank for empty bins.
void write_surface_csv(std::ostream& out, const DecelProbSurface& surface);
/// `k_bin,k_lo,k_hi,v_star,dv,p`.
void write_centered_csv(std::ostream& out, const CenteredCurves& curves);
/// `z_lo,z_hi,n,empirical,predicted`.
void write_calibration_csv(std::ostream& out, std::span<const CalibrationBin> bins);

[[nodiscard]] std::string recovery_report_json(const RecoveryReport& report);

/// `k_veh_per_km,v_km_per_h` over `points` equally spaced densities in [lo, hi].
void write_curve_csv(std::ostream& out, const FdParams& params, double lo, double hi, std::size_t points);

}  // namespace nlkv::io
