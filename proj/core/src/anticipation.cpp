#include "nlkv/anticipation.hpp"

#include <cmath>
#include <limits>

#include <spdlog/spdlog.h>

namespace nlkv {

long long anticipation_time_shift(const GridSpec& spec) noexcept { return floor_steps(spec.tm / spec.ts); }

long long anticipation_space_shift(double speed, const GridSpec& spec) noexcept {
    return floor_steps(speed * spec.tm / spec.xs);
}

MacroField anticipated_density_field(const MacroField& density, const MacroField& speed, const GridSpec& spec) {
    spec.validate();
    MacroField out(density.dims(), Quantity::anticipated_density);
    const auto di = anticipation_time_shift(spec);
    for (std::size_t i = 0; i < speed.rows(); ++i) {
        for (std::size_t j = 0; j < speed.cols(); ++j) {
            const auto& v = speed.at(i, j);
            if (!v) continue;
            const auto k = density.lookup(static_cast<long long>(i) + di,
                                          static_cast<long long>(j) + anticipation_space_shift(*v, spec));
            if (k) out.set(i, j, *k);
        }
    }
    return out;
}

std::vector<NlkvSample> assemble_nlkv(const MacroField& anticipated_density, const MacroField& speed,
                                      const SignField& signs, const MacroField* acceleration,
                                      const AssemblyOptions& options) {
    std::vector<NlkvSample> out;
    for (std::size_t i = 0; i < speed.rows(); ++i) {
        for (std::size_t j = 0; j < speed.cols(); ++j) {
            const auto& ka = anticipated_density.at(i, j);
            const auto& v = speed.at(i, j);
            const auto& y = signs.at(i, j);
            if (!ka || !v || !y) continue;
            double a = std::numeric_limits<double>::quiet_NaN();
            if (acceleration != nullptr) {
                if (const auto& cell = acceleration->at(i, j)) a = *cell;
            }
            out.push_back(NlkvSample{*ka, *v, *y, static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), a});
        }
    }
    if (out.size() < options.min_samples) {
        spdlog::warn("only {} NLKV samples (minimum {})", out.size(), options.min_samples);
    }
    return out;
}

std::vector<LkvSample> assemble_lkv(const MacroField& density, const MacroField& speed,
                                    const AssemblyOptions& options) {
    std::vector<LkvSample> out;
    for (std::size_t i = 0; i < speed.rows(); ++i) {
        for (std::size_t j = 0; j < speed.cols(); ++j) {
            const auto& k = density.at(i, j);
            const auto& v = speed.at(i, j);
            if (k && v) out.push_back(LkvSample{*k, *v});
        }
    }
    if (out.size() < options.min_samples) {
        spdlog::warn("only {} LKV samples (minimum {})", out.size(), options.min_samples);
    }
    return out;
}

FieldBundle estimate_field_bundle(const TrajectorySet& segment, const GridSpec& spec, double zero_tol) {
    auto vk = estimate_vk_fields(segment, spec);
    auto accel = estimate_acceleration_field(vk.speed, spec);
    auto signs = label_signs(accel, zero_tol);
    auto ka = anticipated_density_field(vk.density, vk.speed, spec);
    return FieldBundle{std::move(vk), std::move(accel), std::move(signs), std::move(ka)};
}

}  // namespace nlkv
