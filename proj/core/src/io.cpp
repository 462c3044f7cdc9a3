#include "nlkv/io.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>

#include <json.hpp>

#include "nlkv/error.hpp"

namespace nlkv::io {

namespace {

using json = nlohmann::ordered_json;

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

// Minimal reader for the comma-separated tables written below.
class Table {
public:
    explicit Table(std::istream& in) : in_(in) {
        if (!std::getline(in_, header_)) throw DataError("empty table");
        std::size_t c = 0;
        for (auto name : split(header_)) index_.emplace(std::string(name), c++);
    }

    [[nodiscard]] std::size_t column(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw DataError("missing column '" + name + "'");
        return it->second;
    }
    [[nodiscard]] bool has(const std::string& name) const { return index_.count(name) != 0; }

    bool next() {
        while (std::getline(in_, line_)) {
            ++line_no_;
            if (trim(line_).empty()) continue;
            fields_ = split(line_);
            if (fields_.size() != index_.size()) {
                throw DataError("line " + std::to_string(line_no_ + 1) + ": expected " + std::to_string(index_.size()) +
                                " fields, got " + std::to_string(fields_.size()));
            }
            return true;
        }
        return false;
    }

    [[nodiscard]] std::string_view text(std::size_t c) const { return fields_[c]; }

    [[nodiscard]] std::optional<double> maybe_number(std::size_t c) const {
        const auto s = fields_[c];
        if (s.empty()) return std::nullopt;
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size()) {
            throw DataError("line " + std::to_string(line_no_ + 1) + ": bad number '" + std::string(s) + "'");
        }
        return v;
    }

    [[nodiscard]] double number(std::size_t c) const {
        auto v = maybe_number(c);
        if (!v) throw DataError("line " + std::to_string(line_no_ + 1) + ": missing value");
        return *v;
    }

private:
    std::istream& in_;
    std::string header_;
    std::string line_;
    std::size_t line_no_{0};
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<std::string_view> fields_;
};

std::string optional_number(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json params_object(const FdParams& params) {
    json p = json::object();
    const auto names = parameter_names(kind_of(params));
    const auto values = to_vector(params);
    for (std::size_t d = 0; d < names.size(); ++d) p[std::string(names[d])] = values[d];
    return p;
}

json model_json(const FdParams& params) {
    return json{{"model", model_name(kind_of(params))},
                {"params", params_object(params)},
                {"units", {{"speed", "km/h"}, {"density", "veh/km"}}}};
}

json deltas_json(const std::vector<ParamDelta>& deltas) {
    json out = json::array();
    for (const auto& d : deltas) {
        out.push_back({{"name", d.name},
                       {"reference", d.reference},
                       {"value", d.value},
                       {"relative_error", d.relative_error},
                       {"tolerance", d.tolerance},
                       {"pass", d.pass}});
    }
    return out;
}

json run_json(const RecoveryRun& run) {
    json out{{"seed", run.seed}, {"nlkv_samples", run.nlkv_count}, {"lkv_samples", run.lkv_count}};
    out["nlkv_ece"] = run.nlkv_fit ? json::parse(fit_report_json(*run.nlkv_fit)) : json(nullptr);
    out["lkv_lse"] = run.lkv_fit ? json::parse(fit_report_json(*run.lkv_fit)) : json(nullptr);
    return out;
}

template <typename Grid, typename Format>
void write_grid(std::ostream& out, const Grid& grid, const GridSpec& spec, const Domain& domain, Format fmt) {
    out << "i,j,t0_s,x0_m,value\n";
    for (std::size_t i = 0; i < grid.rows(); ++i) {
        for (std::size_t j = 0; j < grid.cols(); ++j) {
            const auto& v = grid.at(i, j);
            if (!v) continue;
            out << i << ',' << j << ',' << format_number(domain.t0 + static_cast<double>(i) * spec.ts) << ','
                << format_number(domain.x0 + static_cast<double>(j) * spec.xs) << ',' << fmt(*v) << '\n';
        }
    }
}

template <typename Grid, typename Set>
void read_grid(std::istream& in, Grid& grid, Set set) {
    Table table(in);
    const auto ci = table.column("i");
    const auto cj = table.column("j");
    const auto cv = table.column("value");
    while (table.next()) {
        const auto i = static_cast<long long>(table.number(ci));
        const auto j = static_cast<long long>(table.number(cj));
        if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= grid.rows() || static_cast<std::size_t>(j) >= grid.cols()) {
            throw DataError("field cell (" + std::to_string(i) + ", " + std::to_string(j) + ") outside the grid");
        }
        set(grid, static_cast<std::size_t>(i), static_cast<std::size_t>(j), table.number(cv));
    }
}

Quantity parse_quantity(std::string_view name) {
    for (auto q : {Quantity::speed, Quantity::density, Quantity::acceleration, Quantity::anticipated_density}) {
        if (to_string(q) == name) return q;
    }
    throw DataError("unknown field quantity '" + std::string(name) + "'");
}

}  // namespace

std::string format_number(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc{}) return "nan";
    return {buf, ptr};
}

void write_trajectories_csv(std::ostream& out, const TrajectorySet& set) {
    out << "vehicle_id,t_s,x_m\n";
    for (const auto& veh : set.trajectories()) {
        for (const auto& p : veh.points) out << veh.vehicle_id << ',' << format_number(p.t) << ',' << format_number(p.x) << '\n';
    }
}

TrajectorySet read_trajectories_csv(std::istream& in) {
    auto schema = generic_profile();
    schema.delimiter = ',';
    auto parsed = parse_trajectories(in, schema);
    const auto& r = parsed.report;
    if (r.time_offset_s == 0.0 && r.position_offset_m == 0.0) return std::move(parsed.set);
    // the parser moves the origin to (0, 0); canonical files keep their coordinates
    auto vehicles = parsed.set.trajectories();
    for (auto& veh : vehicles) {
        for (auto& p : veh.points) {
            p.t += r.time_offset_s;
            p.x += r.position_offset_m;
        }
    }
    return TrajectorySet(std::move(vehicles));
}

std::string_view si_unit(Quantity quantity) noexcept {
    switch (quantity) {
        case Quantity::speed: return "m/s";
        case Quantity::density:
        case Quantity::anticipated_density: return "veh/m";
        case Quantity::acceleration: return "m/s^2";
    }
    return "";
}

void write_field_csv(std::ostream& out, const MacroField& field, const GridSpec& spec, const Domain& domain) {
    write_grid(out, field, spec, domain, [](double v) { return format_number(v); });
}

void write_sign_csv(std::ostream& out, const SignField& signs, const GridSpec& spec, const Domain& domain) {
    write_grid(out, signs, spec, domain, [](std::uint8_t y) { return std::to_string(y); });
}

MacroField read_field_csv(std::istream& in, GridDims dims, Quantity quantity) {
    MacroField field(dims, quantity);
    read_grid(in, field, [](MacroField& f, std::size_t i, std::size_t j, double v) { f.set(i, j, v); });
    return field;
}

SignField read_sign_csv(std::istream& in, GridDims dims) {
    SignField signs(dims);
    read_grid(in, signs, [](SignField& f, std::size_t i, std::size_t j, double v) {
        if (v != 0.0 && v != 1.0) throw DataError("sign labels must be 0 or 1");
        f.set(i, j, static_cast<std::uint8_t>(v));
    });
    return signs;
}

std::string field_meta_json(const FieldMeta& meta) {
    json j{{"quantity", to_string(meta.quantity)},
           {"unit", si_unit(meta.quantity)},
           {"grid", {{"dt_s", meta.spec.dt}, {"dx_m", meta.spec.dx}, {"ts_s", meta.spec.ts}, {"xs_m", meta.spec.xs},
                     {"tm_s", meta.spec.tm}}},
           {"I", meta.dims.I},
           {"J", meta.dims.J},
           {"domain", {{"t0_s", meta.domain.t0}, {"x0_m", meta.domain.x0}, {"T_s", meta.domain.T}, {"X_m", meta.domain.X}}}};
    return j.dump(2);
}

FieldMeta field_meta_from_json(std::string_view text) {
    try {
        const auto j = json::parse(text);
        FieldMeta m;
        m.quantity = parse_quantity(j.at("quantity").get<std::string>());
        const auto& g = j.at("grid");
        m.spec = GridSpec{g.at("dt_s").get<double>(), g.at("dx_m").get<double>(), g.at("ts_s").get<double>(),
                          g.at("xs_m").get<double>(), g.at("tm_s").get<double>()};
        m.dims = GridDims{j.at("I").get<std::size_t>(), j.at("J").get<std::size_t>()};
        const auto& d = j.at("domain");
        m.domain = Domain{d.at("t0_s").get<double>(), d.at("x0_m").get<double>(), d.at("T_s").get<double>(),
                          d.at("X_m").get<double>()};
        return m;
    } catch (const json::exception& e) {
        throw DataError(std::string("field metadata: ") + e.what());
    }
}

void write_nlkv_csv(std::ostream& out, std::span<const NlkvSample> samples, bool provenance) {
    out << "k_a_veh_per_km,v_km_per_h,y" << (provenance ? ",i,j,a_mps2" : "") << '\n';
    for (const auto& s : samples) {
        out << format_number(to_veh_per_km(s.k_a)) << ',' << format_number(to_kmh(s.v)) << ',' << int{s.y};
        if (provenance) {
            out << ',' << s.i << ',' << s.j << ',';
            if (!std::isnan(s.acceleration)) out << format_number(s.acceleration);
        }
        out << '\n';
    }
}

std::vector<NlkvSample> read_nlkv_csv(std::istream& in) {
    Table table(in);
    const auto ck = table.column("k_a_veh_per_km");
    const auto cv = table.column("v_km_per_h");
    const auto cy = table.column("y");
    const bool prov = table.has("i") && table.has("j") && table.has("a_mps2");
    std::vector<NlkvSample> out;
    while (table.next()) {
        NlkvSample s;
        s.k_a = to_veh_per_m(table.number(ck));
        s.v = to_mps(table.number(cv));
        const double y = table.number(cy);
        if (y != 0.0 && y != 1.0) throw DataError("y must be 0 or 1");
        s.y = static_cast<std::uint8_t>(y);
        s.acceleration = std::numeric_limits<double>::quiet_NaN();
        if (prov) {
            s.i = static_cast<std::uint32_t>(table.number(table.column("i")));
            s.j = static_cast<std::uint32_t>(table.number(table.column("j")));
            if (auto a = table.maybe_number(table.column("a_mps2"))) s.acceleration = *a;
        }
        out.push_back(s);
    }
    return out;
}

void write_lkv_csv(std::ostream& out, std::span<const LkvSample> samples) {
    out << "k_veh_per_km,v_km_per_h\n";
    for (const auto& s : samples) out << format_number(to_veh_per_km(s.k)) << ',' << format_number(to_kmh(s.v)) << '\n';
}

std::vector<LkvSample> read_lkv_csv(std::istream& in) {
    Table table(in);
    const auto ck = table.column("k_veh_per_km");
    const auto cv = table.column("v_km_per_h");
    std::vector<LkvSample> out;
    while (table.next()) out.push_back({to_veh_per_m(table.number(ck)), to_mps(table.number(cv))});
    return out;
}

std::string params_json(const FdParams& params) { return model_json(params).dump(2); }

FdParams params_from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("parameter file: ") + e.what());
    }
    if (!j.contains("model") || !j.contains("params")) throw ConfigError("parameter file needs 'model' and 'params'");
    const auto kind = parse_model(j.at("model").get<std::string>());
    if (j.contains("units")) {
        const auto& u = j.at("units");
        if (u.value("speed", "km/h") != "km/h" || u.value("density", "veh/km") != "veh/km") {
            throw ConfigError("parameter file must use km/h and veh/km");
        }
    }
    std::vector<double> values;
    for (auto name : parameter_names(kind)) {
        const std::string key(name);
        if (!j.at("params").contains(key)) throw ConfigError("parameter file lacks '" + key + "'");
        values.push_back(j.at("params").at(key).get<double>());
    }
    return from_vector(kind, values);
}

std::string fit_report_json(const FitResult& fit) {
    auto j = model_json(fit.params);
    j["loss"] = to_string(fit.loss);
    j["loss_value"] = number_or_null(fit.loss_value);
    j["omega"] = fit.omega ? json(*fit.omega) : json(nullptr);
    j["sample_count"] = fit.sample_count;
    j["iterations"] = fit.iterations;
    j["evaluations"] = fit.evaluations;
    j["converged"] = fit.converged;
    j["starts_converged"] = fit.starts_converged;
    j["seed"] = fit.seed;
    const auto names = parameter_names(kind_of(fit.params));
    json lower = json::object(), upper = json::object();
    for (std::size_t d = 0; d < names.size() && d < fit.bounds.lower.size(); ++d) {
        lower[std::string(names[d])] = fit.bounds.lower[d];
        upper[std::string(names[d])] = fit.bounds.upper[d];
    }
    j["bounds"] = {{"lower", lower}, {"upper", upper}};
    return j.dump(2);
}

void write_surface_csv(std::ostream& out, const DecelProbSurface& surface) {
    out << "k_bin_lo,k_bin_hi,v_bin_lo,v_bin_hi,p,n\n";
    for (std::size_t a = 0; a < surface.k_bins(); ++a) {
        for (std::size_t b = 0; b < surface.v_bins(); ++b) {
            out << format_number(surface.k_edges[a]) << ',' << format_number(surface.k_edges[a + 1]) << ','
                << format_number(surface.v_edges[b]) << ',' << format_number(surface.v_edges[b + 1]) << ','
                << optional_number(surface.probability(a, b)) << ',' << surface.count(a, b) << '\n';
        }
    }
}

void write_centered_csv(std::ostream& out, const CenteredCurves& curves) {
    out << "k_bin,k_lo,k_hi,v_star,dv,p\n";
    for (const auto& c : curves.curves) {
        for (const auto& [dv, p] : c.points) {
            out << c.k_bin << ',' << format_number(c.k_lo) << ',' << format_number(c.k_hi) << ','
                << format_number(c.v_star) << ',' << format_number(dv) << ',' << format_number(p) << '\n';
        }
    }
}

void write_calibration_csv(std::ostream& out, std::span<const CalibrationBin> bins) {
    out << "z_lo,z_hi,n,empirical,predicted\n";
    for (const auto& b : bins) {
        out << format_number(b.z_lo) << ',' << format_number(b.z_hi) << ',' << b.n << ',' << format_number(b.empirical)
            << ',' << format_number(b.predicted) << '\n';
    }
}

std::string recovery_report_json(const RecoveryReport& report) {
    json j{{"truth", model_json(report.truth)},
           {"passed", report.passed()},
           {"recovery_pass", report.recovery_pass},
           {"invariance_pass", report.invariance_pass},
           {"error", report.error ? json(*report.error) : json(nullptr)}};
    if (!report.error) {
        j["primary"] = run_json(report.primary);
        j["secondary"] = run_json(report.secondary);
    }
    j["recovery"] = deltas_json(report.recovery);
    j["invariance"] = deltas_json(report.invariance);
    j["lkv_spread"] = deltas_json(report.lkv_spread);
    return j.dump(2);
}

void write_curve_csv(std::ostream& out, const FdParams& params, double lo, double hi, std::size_t points) {
    if (points < 2) throw ConfigError("curve needs at least two points");
    out << "k_veh_per_km,v_km_per_h\n";
    for (std::size_t n = 0; n < points; ++n) {
        const double k = lo + (hi - lo) * static_cast<double>(n) / static_cast<double>(points - 1);
        out << format_number(k) << ',' << format_number(equilibrium_speed(params, k)) << '\n';
    }
}

}  // namespace nlkv::io
