#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "config.hpp"

namespace fdfit {

/// Failure inside a named stage, carrying the process exit code.
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, int code, const std::string& message)
        : std::runtime_error("[" + stage + "] " + message), stage_(std::move(stage)), code_(code) {}

    [[nodiscard]] const std::string& stage() const noexcept { return stage_; }
    [[nodiscard]] int exit_code() const noexcept { return code_; }

private:
    std::string stage_;
    int code_;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitDegenerate = 4;
inline constexpr int kExitInternal = 5;

// Each stage reads the previous stage's files under cfg.out_dir:
//
//   trajectories.csv            ingest / synth
//   fields/segNNN_*.csv, .json  fields
//   samples/{nlkv,lkv}.csv      samples
//   fits/<model>_<loss>.json    fit
//   comparison.{json,csv}       compare
//   diagnostics/*               diagnose
//   plots/*                     heatmaps, scatters and curve sweeps

void stage_ingest(const PipelineConfig& cfg);
void stage_synth(const PipelineConfig& cfg);
void stage_fields(const PipelineConfig& cfg);
void stage_samples(const PipelineConfig& cfg);
void stage_fit(const PipelineConfig& cfg);
void stage_compare(const PipelineConfig& cfg);
void stage_diagnose(const PipelineConfig& cfg);

/// ingest (or synth when no input path is set), fields, samples, fit,
/// compare, diagnose.
void run_pipeline(const PipelineConfig& cfg);

}  // namespace fdfit
