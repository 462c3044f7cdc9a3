#include "cli.hpp"

#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <nlkv/error.hpp>

#include "pipeline.hpp"

namespace fdfit {

namespace {

struct Flags {
    std::string config;
    std::string out;
    std::string input;
    std::optional<std::uint64_t> seed;
    std::string models;
    std::string loss;
    std::string profile;
    bool verbose{false};
};

void add_flags(CLI::App& cmd, Flags& f) {
    cmd.add_option("--config", f.config, "INI config file")->check(CLI::ExistingFile);
    cmd.add_option("--out", f.out, "output directory");
    cmd.add_option("--input", f.input, "trajectory file (overrides [input] path)");
    cmd.add_option("--seed", f.seed, "seed for fitting and synthesis");
    cmd.add_option("--models", f.models, "comma-separated models: greenberg,smulders,franklin_newell");
    cmd.add_option("--loss", f.loss, "loss to fit")->check(CLI::IsMember({"ece", "nll", "lse"}));
    cmd.add_option("--profile", f.profile, "input column profile")->check(CLI::IsMember({"ngsim", "generic"}));
    cmd.add_flag("--verbose", f.verbose, "debug logging");
}

PipelineConfig resolve(const Flags& f) {
    auto cfg = f.config.empty() ? PipelineConfig{} : load_config(f.config);
    if (!f.profile.empty()) {
        cfg.input.profile = f.profile;
        cfg.input.schema = nlkv::profile_by_name(f.profile);
    }
    if (!f.input.empty()) cfg.input.path = f.input;
    if (!f.out.empty()) cfg.out_dir = f.out;
    if (f.seed) {
        cfg.fit.seed = *f.seed;
        if (cfg.synth) cfg.synth->seed = *f.seed;
    }
    if (!f.models.empty()) cfg.models = parse_model_list(f.models);
    if (!f.loss.empty()) cfg.losses = {nlkv::parse_loss(f.loss)};
    return cfg;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"Fit speed-density fundamental diagrams from vehicle trajectories"};
    app.require_subcommand(1);
    Flags flags;

    struct Command {
        const char* name;
        const char* help;
        void (*stage)(const PipelineConfig&);
        bool needs_source;
    };
    const Command commands[] = {
        {"ingest", "parse and validate a trajectory file", stage_ingest, true},
        {"synth", "write synthetic stationary-block trajectories", stage_synth, false},
        {"fields", "estimate V, K, A, labels and anticipated density", stage_fields, false},
        {"samples", "assemble NLKV and LKV sample tables", stage_samples, false},
        {"fit", "fit every requested model and loss", stage_fit, false},
        {"compare", "tabulate fitted parameters and losses", stage_compare, false},
        {"diagnose", "deceleration-probability surface and calibration", stage_diagnose, false},
        {"run", "full pipeline", run_pipeline, true},
    };
    std::vector<std::pair<CLI::App*, const Command*>> subs;
    for (const auto& c : commands) {
        auto* sub = app.add_subcommand(c.name, c.help);
        add_flags(*sub, flags);
        subs.emplace_back(sub, &c);
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    spdlog::set_level(flags.verbose ? spdlog::level::debug : spdlog::level::info);
    try {
        PipelineConfig cfg;
        try {
            cfg = resolve(flags);
        } catch (const nlkv::ConfigError& e) {
            throw StageError("config", kExitConfig, e.what());
        } catch (const nlkv::Error& e) {
            throw StageError("config", kExitConfig, e.what());
        }
        for (const auto& [sub, cmd] : subs) {
            if (!sub->parsed()) continue;
            if (cmd->stage != run_pipeline) {
                try {
                    cfg.validate(cmd->needs_source);
                } catch (const nlkv::Error& e) {
                    throw StageError("config", kExitConfig, e.what());
                }
            }
            cmd->stage(cfg);
        }
    } catch (const StageError& e) {
        std::cerr << "fdfit: error " << e.what() << '\n';
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "fdfit: error [internal] " << e.what() << '\n';
        return kExitInternal;
    }
    return kExitOk;
}

}  // namespace fdfit
