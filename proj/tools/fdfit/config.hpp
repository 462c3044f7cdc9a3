#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlkv/fields.hpp>
#include <nlkv/fitting.hpp>
#include <nlkv/ingest.hpp>
#include <nlkv/models.hpp>
#include <nlkv/validation.hpp>

namespace fdfit {

struct InputConfig {
    std::optional<std::filesystem::path> path;
    std::string profile{"generic"};
    nlkv::ColumnSchema schema{nlkv::generic_profile()};
    nlkv::ValidationOptions validation{};
};

struct PipelineConfig {
    InputConfig input;
    /// Present when the [synth] section exists; used when no input path is set.
    std::optional<nlkv::SyntheticScenario> synth;

    nlkv::GridSpec grid{};
    double zero_tol{1e-9};
    double gap_threshold_s{60.0};

    std::vector<nlkv::ModelKind> models{nlkv::ModelKind::smulders};
    std::vector<nlkv::LossKind> losses{nlkv::LossKind::ece};
    nlkv::FitConfig fit{};

    std::filesystem::path out_dir{"out"};
    std::size_t curve_points{500};
    std::size_t diagnostic_bins{20};

    /// Throws ConfigError when a referenced path is missing, the grid is
    /// invalid or no model/loss is requested.
    void validate(bool needs_source) const;
};

/// Parse an INI file with [input], [grid], [fit], [output] and [synth]
/// sections. Relative paths are taken from the config file's directory.
[[nodiscard]] PipelineConfig load_config(const std::filesystem::path& path);
[[nodiscard]] PipelineConfig parse_config(const std::string& text, const std::filesystem::path& base_dir);

[[nodiscard]] std::vector<nlkv::ModelKind> parse_model_list(const std::string& list);
[[nodiscard]] std::vector<nlkv::LossKind> parse_loss_list(const std::string& list);
[[nodiscard]] std::vector<double> parse_number_list(const std::string& list);

}  // namespace fdfit
