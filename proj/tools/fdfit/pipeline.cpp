#include "pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include <nlkv/anticipation.hpp>
#include <nlkv/error.hpp>
#include <nlkv/fields.hpp>
#include <nlkv/io.hpp>
#include <nlkv/validation.hpp>

namespace fdfit {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

template <typename F>
void guarded(const char* stage, F&& body) {
    try {
        body();
    } catch (const StageError&) {
        throw;
    } catch (const nlkv::DegenerateSampleError& e) {
        throw StageError(stage, kExitDegenerate, e.what());
    } catch (const nlkv::ConfigError& e) {
        throw StageError(stage, kExitConfig, e.what());
    } catch (const nlkv::DataError& e) {
        throw StageError(stage, kExitData, e.what());
    } catch (const nlkv::DomainError& e) {
        throw StageError(stage, kExitData, e.what());
    } catch (const std::exception& e) {
        throw StageError(stage, kExitInternal, e.what());
    }
}

template <typename F>
void write_file(const fs::path& path, F&& fill) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    fill(out);
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_text(const fs::path& path, const std::string& text) {
    write_file(path, [&](std::ostream& out) { out << text << '\n'; });
}

std::ifstream open_artifact(const fs::path& path, const char* producer) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw nlkv::DataError("missing artifact " + path.string() + "; run the '" + producer + "' stage first");
    }
    return in;
}

std::string slurp(const fs::path& path, const char* producer) {
    auto in = open_artifact(path, producer);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string segment_stem(std::size_t s) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "seg%03zu", s);
    return buf;
}

std::string fit_stem(nlkv::ModelKind model, nlkv::LossKind loss) {
    return std::string(nlkv::model_name(model)) + "_" + std::string(nlkv::to_string(loss));
}

// Defined cells only, at cell centres, in reporting units.
void write_heatmap(const fs::path& path, const nlkv::MacroField& field, const nlkv::GridSpec& spec,
                   const nlkv::Domain& domain, double factor) {
    write_file(path, [&](std::ostream& out) {
        out << "t_s,x_m,value\n";
        for (std::size_t i = 0; i < field.rows(); ++i) {
            for (std::size_t j = 0; j < field.cols(); ++j) {
                const auto& v = field.at(i, j);
                if (!v) continue;
                out << nlkv::io::format_number(domain.t0 + static_cast<double>(i) * spec.ts + 0.5 * spec.dt) << ','
                    << nlkv::io::format_number(domain.x0 + static_cast<double>(j) * spec.xs + 0.5 * spec.dx) << ','
                    << nlkv::io::format_number(*v * factor) << '\n';
            }
        }
    });
}

std::vector<std::size_t> list_segments(const fs::path& dir) {
    std::vector<std::size_t> out;
    if (!fs::is_directory(dir)) return out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const auto name = entry.path().filename().string();
        unsigned idx = 0;
        char tail[32] = {};
        if (std::sscanf(name.c_str(), "seg%3u_%31s", &idx, tail) == 2 && std::string(tail) == "meta.json") {
            out.push_back(idx);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

nlkv::FieldBundle load_bundle(const fs::path& dir, std::size_t s) {
    const auto stem = segment_stem(s);
    const auto meta = nlkv::io::field_meta_from_json(slurp(dir / (stem + "_meta.json"), "fields"));
    auto read = [&](const char* name, nlkv::Quantity q) {
        auto in = open_artifact(dir / (stem + "_" + name + ".csv"), "fields");
        return nlkv::io::read_field_csv(in, meta.dims, q);
    };
    nlkv::FieldBundle b;
    b.vk.spec = meta.spec;
    b.vk.domain = meta.domain;
    b.vk.speed = read("speed", nlkv::Quantity::speed);
    b.vk.density = read("density", nlkv::Quantity::density);
    b.acceleration = read("acceleration", nlkv::Quantity::acceleration);
    b.anticipated_density = read("anticipated_density", nlkv::Quantity::anticipated_density);
    auto in = open_artifact(dir / (stem + "_signs.csv"), "fields");
    b.signs = nlkv::io::read_sign_csv(in, meta.dims);
    return b;
}

json synth_json(const nlkv::SyntheticScenario& s) {
    return json{{"truth", json::parse(nlkv::io::params_json(s.truth))},
                {"densities_veh_per_km", s.densities},
                {"block_duration_s", s.block_duration_s},
                {"road_length_m", s.road_length_m},
                {"ramp_duration_s", s.ramp_duration_s},
                {"sample_interval_s", s.sample_interval_s},
                {"label_noise", s.label_noise},
                {"noise_scale", s.noise_scale},
                {"seed", s.seed}};
}

}  // namespace

void stage_ingest(const PipelineConfig& cfg) {
    guarded("ingest", [&] {
        if (!cfg.input.path) throw nlkv::ConfigError("no [input] path configured");
        std::ifstream in(*cfg.input.path, std::ios::binary);
        if (!in) throw nlkv::ConfigError("cannot open input " + cfg.input.path->string());
        const auto parsed = nlkv::parse_trajectories(in, cfg.input.schema, cfg.input.validation);
        const auto& r = parsed.report;
        json rejected = json::array();
        for (const auto& rej : r.rejected) {
            rejected.push_back({{"vehicle_id", rej.vehicle_id}, {"negative_fraction", rej.negative_fraction}});
        }
        json report{{"rows", r.rows},
                    {"vehicles_seen", r.vehicles_seen},
                    {"vehicles_kept", parsed.set.size()},
                    {"dropped_short", r.dropped_short},
                    {"duplicates_removed", r.duplicates_removed},
                    {"backward_steps_clamped", r.backward_steps_clamped},
                    {"rejected", rejected},
                    {"lane_column_ignored", r.lane_column_ignored},
                    {"time_offset_s", r.time_offset_s},
                    {"position_offset_m", r.position_offset_m},
                    {"T_s", parsed.set.time_extent()},
                    {"X_m", parsed.set.space_extent()}};
        write_text(cfg.out_dir / "ingest_report.json", report.dump(2));
        write_file(cfg.out_dir / "trajectories.csv",
                   [&](std::ostream& out) { nlkv::io::write_trajectories_csv(out, parsed.set); });
        spdlog::info("ingest: {} vehicles over {:.1f} s x {:.1f} m", parsed.set.size(), parsed.set.time_extent(),
                     parsed.set.space_extent());
    });
}

void stage_synth(const PipelineConfig& cfg) {
    guarded("synth", [&] {
        const auto scenario = cfg.synth.value_or(nlkv::SyntheticScenario{
            .densities = nlkv::default_density_profile(nlkv::SyntheticScenario{}.truth)});
        const auto set = nlkv::synthesize_stationary_trajectories(scenario);
        write_text(cfg.out_dir / "synth.json", synth_json(scenario).dump(2));
        write_file(cfg.out_dir / "trajectories.csv",
                   [&](std::ostream& out) { nlkv::io::write_trajectories_csv(out, set); });
        spdlog::info("synth: {} vehicles over {:.1f} s", set.size(), set.time_extent());
    });
}

void stage_fields(const PipelineConfig& cfg) {
    guarded("fields", [&] {
        auto in = open_artifact(cfg.out_dir / "trajectories.csv", "ingest");
        const auto set = nlkv::io::read_trajectories_csv(in);
        const auto segments = nlkv::segment_contiguous(set, cfg.gap_threshold_s);
        const auto dir = cfg.out_dir / "fields";
        fs::remove_all(dir);
        fs::create_directories(dir);

        std::size_t written = 0;
        for (std::size_t s = 0; s < segments.size(); ++s) {
            const auto& seg = segments[s];
            if (seg.time_extent() < cfg.grid.dt || seg.space_extent() < cfg.grid.dx) {
                spdlog::warn("fields: segment {} ({:.1f} s x {:.1f} m) is smaller than one subdomain; skipped", s,
                             seg.time_extent(), seg.space_extent());
                continue;
            }
            const auto b = nlkv::estimate_field_bundle(seg, cfg.grid, cfg.zero_tol);
            const auto stem = segment_stem(s);
            const auto& dom = b.vk.domain;
            nlkv::io::FieldMeta meta{cfg.grid, dom, b.vk.speed.dims(), nlkv::Quantity::speed};
            write_text(dir / (stem + "_meta.json"), nlkv::io::field_meta_json(meta));
            auto dump = [&](const char* name, const nlkv::MacroField& f) {
                write_file(dir / (stem + "_" + name + ".csv"),
                           [&](std::ostream& out) { nlkv::io::write_field_csv(out, f, cfg.grid, dom); });
            };
            dump("speed", b.vk.speed);
            dump("density", b.vk.density);
            dump("acceleration", b.acceleration);
            dump("anticipated_density", b.anticipated_density);
            write_file(dir / (stem + "_signs.csv"),
                       [&](std::ostream& out) { nlkv::io::write_sign_csv(out, b.signs, cfg.grid, dom); });

            const auto plots = cfg.out_dir / "plots";
            write_heatmap(plots / (stem + "_speed_heatmap.csv"), b.vk.speed, cfg.grid, dom, nlkv::kKmhPerMps);
            write_heatmap(plots / (stem + "_density_heatmap.csv"), b.vk.density, cfg.grid, dom,
                          nlkv::kVehPerKmPerVehPerM);
            write_heatmap(plots / (stem + "_acceleration_heatmap.csv"), b.acceleration, cfg.grid, dom, 1.0);
            ++written;
            spdlog::info("fields: segment {} has {} x {} cells", s, b.vk.speed.rows(), b.vk.speed.cols());
        }
        if (written == 0) throw nlkv::DataError("domain too small for grid in every segment");
    });
}

void stage_samples(const PipelineConfig& cfg) {
    guarded("samples", [&] {
        const auto dir = cfg.out_dir / "fields";
        const auto segments = list_segments(dir);
        if (segments.empty()) throw nlkv::DataError("missing artifact " + dir.string() + "; run the 'fields' stage first");
        const bool noisy = cfg.synth && cfg.synth->label_noise && !cfg.input.path;

        std::vector<nlkv::NlkvSample> nlkv_samples;
        std::vector<nlkv::LkvSample> lkv_samples;
        const nlkv::AssemblyOptions quiet{0};
        for (auto s : segments) {
            auto b = load_bundle(dir, s);
            if (noisy) nlkv::apply_label_noise(b, cfg.synth->truth, cfg.synth->noise_scale, cfg.synth->seed + s);
            auto n = nlkv::assemble_nlkv(b.anticipated_density, b.vk.speed, b.signs, &b.acceleration, quiet);
            auto l = nlkv::assemble_lkv(b.vk.density, b.vk.speed, quiet);
            nlkv_samples.insert(nlkv_samples.end(), n.begin(), n.end());
            lkv_samples.insert(lkv_samples.end(), l.begin(), l.end());
        }
        if (nlkv_samples.size() < 100) spdlog::warn("samples: only {} NLKV samples (minimum 100)", nlkv_samples.size());

        const auto out = cfg.out_dir / "samples";
        write_file(out / "nlkv.csv", [&](std::ostream& o) { nlkv::io::write_nlkv_csv(o, nlkv_samples, true); });
        write_file(out / "lkv.csv", [&](std::ostream& o) { nlkv::io::write_lkv_csv(o, lkv_samples); });
        const auto plots = cfg.out_dir / "plots";
        write_file(plots / "nlkv_scatter.csv", [&](std::ostream& o) { nlkv::io::write_nlkv_csv(o, nlkv_samples, false); });
        write_file(plots / "lkv_scatter.csv", [&](std::ostream& o) { nlkv::io::write_lkv_csv(o, lkv_samples); });
        spdlog::info("samples: {} NLKV, {} LKV", nlkv_samples.size(), lkv_samples.size());
    });
}

void stage_fit(const PipelineConfig& cfg) {
    guarded("fit", [&] {
        std::vector<nlkv::NlkvSample> nlkv_samples;
        std::vector<nlkv::LkvSample> lkv_samples;
        const bool need_nlkv = std::any_of(cfg.losses.begin(), cfg.losses.end(),
                                           [](auto l) { return l != nlkv::LossKind::lse; });
        const bool need_lkv = std::any_of(cfg.losses.begin(), cfg.losses.end(),
                                          [](auto l) { return l == nlkv::LossKind::lse; });
        if (need_nlkv) {
            auto in = open_artifact(cfg.out_dir / "samples" / "nlkv.csv", "samples");
            nlkv_samples = nlkv::io::read_nlkv_csv(in);
        }
        if (need_lkv) {
            auto in = open_artifact(cfg.out_dir / "samples" / "lkv.csv", "samples");
            lkv_samples = nlkv::io::read_lkv_csv(in);
        }

        for (auto model : cfg.models) {
            for (auto loss : cfg.losses) {
                auto fc = cfg.fit;
                fc.loss = loss;
                const auto fit = loss == nlkv::LossKind::lse
                                     ? nlkv::fit_fd(model, std::span<const nlkv::LkvSample>(lkv_samples), fc)
                                     : nlkv::fit_fd(model, std::span<const nlkv::NlkvSample>(nlkv_samples), fc);
                const auto stem = fit_stem(model, loss);
                write_text(cfg.out_dir / "fits" / (stem + ".json"), nlkv::io::fit_report_json(fit));
                const double k_jam = nlkv::to_vector(fit.params).back();
                write_file(cfg.out_dir / "plots" / ("curve_" + stem + ".csv"), [&](std::ostream& o) {
                    nlkv::io::write_curve_csv(o, fit.params, 1.0, std::max(k_jam, 1.0 + 1e-9), cfg.curve_points);
                });
                spdlog::info("fit: {} / {} loss {:.6g}", nlkv::model_name(model), nlkv::to_string(loss), fit.loss_value);
            }
        }
    });
}

void stage_compare(const PipelineConfig& cfg) {
    guarded("compare", [&] {
        json rows = json::array();
        std::ostringstream csv;
        csv << "model,loss,params,loss_value,sample_count\n";
        for (auto model : cfg.models) {
            for (auto loss : cfg.losses) {
                const auto stem = fit_stem(model, loss);
                const auto text = slurp(cfg.out_dir / "fits" / (stem + ".json"), "fit");
                const auto params = nlkv::io::params_from_json(text);
                const auto j = json::parse(text);
                const auto& value = j.at("loss_value");
                rows.push_back({{"model", nlkv::model_name(model)},
                                {"loss", nlkv::to_string(loss)},
                                {"params", j.at("params")},
                                {"loss_value", value},
                                {"sample_count", j.at("sample_count")}});
                std::string p;
                const auto names = nlkv::parameter_names(model);
                const auto vals = nlkv::to_vector(params);
                for (std::size_t d = 0; d < names.size(); ++d) {
                    p += (d ? ";" : "") + std::string(names[d]) + "=" + nlkv::io::format_number(vals[d]);
                }
                csv << nlkv::model_name(model) << ',' << nlkv::to_string(loss) << ',' << p << ','
                    << (value.is_number() ? nlkv::io::format_number(value.get<double>()) : std::string()) << ','
                    << j.at("sample_count").get<std::size_t>() << '\n';
            }
        }
        json table{{"units", {{"speed", "km/h"}, {"density", "veh/km"}}}, {"rows", rows}};
        write_text(cfg.out_dir / "comparison.json", table.dump(2));
        write_file(cfg.out_dir / "comparison.csv", [&](std::ostream& o) { o << csv.str(); });
    });
}

void stage_diagnose(const PipelineConfig& cfg) {
    guarded("diagnose", [&] {
        auto in = open_artifact(cfg.out_dir / "samples" / "nlkv.csv", "samples");
        const auto samples = nlkv::io::read_nlkv_csv(in);
        if (samples.empty()) throw nlkv::DataError("no NLKV samples to diagnose");

        double k_lo = 1e300, k_hi = -1e300, v_lo = 1e300, v_hi = -1e300;
        for (const auto& s : samples) {
            k_lo = std::min(k_lo, nlkv::to_veh_per_km(s.k_a));
            k_hi = std::max(k_hi, nlkv::to_veh_per_km(s.k_a));
            v_lo = std::min(v_lo, nlkv::to_kmh(s.v));
            v_hi = std::max(v_hi, nlkv::to_kmh(s.v));
        }
        const auto surface = nlkv::empirical_decel_probabilities(
            samples, nlkv::equal_width_edges(k_lo, k_hi, cfg.diagnostic_bins),
            nlkv::equal_width_edges(v_lo, v_hi, cfg.diagnostic_bins));
        const auto centered = nlkv::center_speed_probabilities(surface);
        if (!centered.omitted_bins.empty()) {
            spdlog::info("diagnose: {} density bins have no p = 0.5 crossing and were omitted",
                         centered.omitted_bins.size());
        }
        const auto dir = cfg.out_dir / "diagnostics";
        write_file(dir / "decel_surface.csv", [&](std::ostream& o) { nlkv::io::write_surface_csv(o, surface); });
        write_file(dir / "centered_curves.csv", [&](std::ostream& o) { nlkv::io::write_centered_csv(o, centered); });
        if (cfg.synth && !cfg.input.path) {
            const auto bins = nlkv::logistic_calibration(samples, cfg.synth->truth, cfg.synth->noise_scale);
            write_file(dir / "calibration.csv", [&](std::ostream& o) { nlkv::io::write_calibration_csv(o, bins); });
        }
    });
}

void run_pipeline(const PipelineConfig& cfg) {
    guarded("config", [&] { cfg.validate(true); });
    if (cfg.input.path) {
        stage_ingest(cfg);
    } else {
        stage_synth(cfg);
    }
    stage_fields(cfg);
    stage_samples(cfg);
    stage_fit(cfg);
    stage_compare(cfg);
    stage_diagnose(cfg);
}

}  // namespace fdfit
