#include "config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <nlkv/error.hpp>

namespace fdfit {

namespace {

namespace pt = boost::property_tree;
using nlkv::ConfigError;

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"input",
         {"path", "profile", "vehicle_id", "time", "position", "time_unit", "position_unit", "frame_rate_hz",
          "delimiter", "max_negative_fraction"}},
        {"grid", {"dt", "dx", "ts", "xs", "tm", "zero_tol", "gap_threshold"}},
        {"fit",
         {"models", "losses", "starts", "polish_rounds", "seed", "scale", "penalty", "initial_step", "max_iterations",
          "f_tolerance", "x_tolerance"}},
        {"output", {"dir", "curve_points", "diagnostic_bins", "units"}},
        {"synth",
         {"model", "params", "densities", "block_duration", "road_length", "ramp_duration", "sample_interval",
          "label_noise", "noise_scale", "seed"}},
    };
    return keys;
}

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& list) {
    std::vector<std::string> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double to_number(const std::string& key, const std::string& text) {
    const auto s = trim(text);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ConfigError("config key '" + key + "': expected a number, got '" + text + "'");
    }
    return v;
}

std::size_t to_count(const std::string& key, const std::string& text) {
    const double v = to_number(key, text);
    if (v < 0.0 || v != static_cast<double>(static_cast<std::size_t>(v))) {
        throw ConfigError("config key '" + key + "': expected a non-negative integer");
    }
    return static_cast<std::size_t>(v);
}

bool to_bool(const std::string& key, const std::string& text) {
    const auto s = trim(text);
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw ConfigError("config key '" + key + "': expected true or false");
}

class Reader {
public:
    explicit Reader(const pt::ptree& tree) : tree_(tree) {}

    template <typename F>
    void with(const std::string& key, F&& f) const {
        if (auto v = tree_.get_optional<std::string>(pt::ptree::path_type(key, '.'))) f(key, *v);
    }
    void number(const std::string& key, double& out) const {
        with(key, [&](const std::string& k, const std::string& v) { out = to_number(k, v); });
    }
    void count(const std::string& key, std::size_t& out) const {
        with(key, [&](const std::string& k, const std::string& v) { out = to_count(k, v); });
    }
    void text(const std::string& key, std::string& out) const {
        with(key, [&](const std::string&, const std::string& v) { out = trim(v); });
    }
    [[nodiscard]] bool has_section(const std::string& name) const { return tree_.find(name) != tree_.not_found(); }

private:
    const pt::ptree& tree_;
};

void check_keys(const pt::ptree& tree) {
    for (const auto& [section, body] : tree) {
        auto it = known_keys().find(section);
        if (it == known_keys().end()) throw ConfigError("unknown config section [" + section + "]");
        for (const auto& [key, value] : body) {
            if (it->second.count(key) == 0) throw ConfigError("unknown config key '" + section + "." + key + "'");
        }
    }
}

}  // namespace

std::vector<nlkv::ModelKind> parse_model_list(const std::string& list) {
    std::vector<nlkv::ModelKind> out;
    for (const auto& name : split_list(list)) out.push_back(nlkv::parse_model(name));
    return out;
}

std::vector<nlkv::LossKind> parse_loss_list(const std::string& list) {
    std::vector<nlkv::LossKind> out;
    for (const auto& name : split_list(list)) out.push_back(nlkv::parse_loss(name));
    return out;
}

std::vector<double> parse_number_list(const std::string& list) {
    std::vector<double> out;
    for (const auto& item : split_list(list)) out.push_back(to_number("list", item));
    return out;
}

PipelineConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
    pt::ptree tree;
    try {
        std::istringstream in(text);
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    check_keys(tree);
    const Reader r(tree);
    PipelineConfig cfg;

    // [input]
    r.text("input.profile", cfg.input.profile);
    cfg.input.schema = nlkv::profile_by_name(cfg.input.profile);
    r.with("input.path", [&](const std::string&, const std::string& v) {
        std::filesystem::path p(trim(v));
        cfg.input.path = p.is_relative() ? base_dir / p : p;
    });
    r.text("input.vehicle_id", cfg.input.schema.vehicle_id);
    r.text("input.time", cfg.input.schema.time);
    r.text("input.position", cfg.input.schema.position);
    r.with("input.time_unit", [&](const std::string&, const std::string& v) {
        cfg.input.schema.units.time = nlkv::parse_time_unit(trim(v));
    });
    r.with("input.position_unit", [&](const std::string&, const std::string& v) {
        cfg.input.schema.units.position = nlkv::parse_length_unit(trim(v));
    });
    r.number("input.frame_rate_hz", cfg.input.schema.units.frame_rate_hz);
    r.with("input.delimiter", [&](const std::string& k, const std::string& v) {
        const auto s = trim(v);
        if (s == "tab" || s == "\\t") cfg.input.schema.delimiter = '\t';
        else if (s == "comma" || s == ",") cfg.input.schema.delimiter = ',';
        else if (s == "auto") cfg.input.schema.delimiter = 0;
        else throw ConfigError("config key '" + k + "': expected tab, comma or auto");
    });
    r.number("input.max_negative_fraction", cfg.input.validation.max_negative_fraction);

    // [grid]
    r.number("grid.dt", cfg.grid.dt);
    r.number("grid.dx", cfg.grid.dx);
    r.number("grid.ts", cfg.grid.ts);
    r.number("grid.xs", cfg.grid.xs);
    r.number("grid.tm", cfg.grid.tm);
    r.number("grid.zero_tol", cfg.zero_tol);
    r.number("grid.gap_threshold", cfg.gap_threshold_s);

    // [fit]
    r.with("fit.models", [&](const std::string&, const std::string& v) { cfg.models = parse_model_list(v); });
    r.with("fit.losses", [&](const std::string&, const std::string& v) { cfg.losses = parse_loss_list(v); });
    r.count("fit.starts", cfg.fit.starts);
    r.count("fit.polish_rounds", cfg.fit.polish_rounds);
    r.with("fit.seed", [&](const std::string& k, const std::string& v) { cfg.fit.seed = to_count(k, v); });
    r.number("fit.scale", cfg.fit.scale);
    r.number("fit.penalty", cfg.fit.penalty);
    r.number("fit.initial_step", cfg.fit.initial_step);
    r.count("fit.max_iterations", cfg.fit.simplex.max_iterations);
    r.number("fit.f_tolerance", cfg.fit.simplex.f_tolerance);
    r.number("fit.x_tolerance", cfg.fit.simplex.x_tolerance);

    // [output]
    r.with("output.dir", [&](const std::string&, const std::string& v) {
        std::filesystem::path p(trim(v));
        cfg.out_dir = p.is_relative() ? base_dir / p : p;
    });
    r.count("output.curve_points", cfg.curve_points);
    r.count("output.diagnostic_bins", cfg.diagnostic_bins);
    r.with("output.units", [&](const std::string& k, const std::string& v) {
        if (trim(v) != "km/h,veh/km") throw ConfigError("config key '" + k + "': only km/h,veh/km is supported");
    });

    // [synth]
    if (r.has_section("synth")) {
        nlkv::SyntheticScenario s;
        std::string model = "smulders";
        r.text("synth.model", model);
        const auto kind = nlkv::parse_model(model);
        std::vector<double> params;
        r.with("synth.params", [&](const std::string&, const std::string& v) { params = parse_number_list(v); });
        if (params.empty()) {
            switch (kind) {
                case nlkv::ModelKind::greenberg: params = {46.3, 189.9}; break;
                case nlkv::ModelKind::smulders: params = {86.8, 65.0, 199.9}; break;
                case nlkv::ModelKind::franklin_newell: params = {80.2, 3000.0, 168.3}; break;
            }
        }
        s.truth = nlkv::from_vector(kind, params);
        r.with("synth.densities", [&](const std::string&, const std::string& v) { s.densities = parse_number_list(v); });
        if (s.densities.empty()) s.densities = nlkv::default_density_profile(s.truth);
        r.number("synth.block_duration", s.block_duration_s);
        r.number("synth.road_length", s.road_length_m);
        r.number("synth.ramp_duration", s.ramp_duration_s);
        r.number("synth.sample_interval", s.sample_interval_s);
        r.with("synth.label_noise", [&](const std::string& k, const std::string& v) { s.label_noise = to_bool(k, v); });
        r.number("synth.noise_scale", s.noise_scale);
        r.with("synth.seed", [&](const std::string& k, const std::string& v) { s.seed = to_count(k, v); });
        cfg.synth = s;
    }
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path.parent_path());
}

void PipelineConfig::validate(bool needs_source) const {
    grid.validate();
    if (!(zero_tol >= 0.0)) throw ConfigError("zero_tol must be non-negative");
    if (!(gap_threshold_s > 0.0)) throw ConfigError("gap_threshold must be positive");
    if (models.empty()) throw ConfigError("model list is empty");
    if (losses.empty()) throw ConfigError("loss list is empty");
    if (curve_points < 2) throw ConfigError("curve_points must be at least 2");
    if (diagnostic_bins < 1) throw ConfigError("diagnostic_bins must be positive");
    if (input.path && !std::filesystem::exists(*input.path)) {
        throw ConfigError("input file " + input.path->string() + " does not exist");
    }
    if (needs_source && !input.path && !synth) throw ConfigError("no input: set [input] path or add a [synth] section");
}

}  // namespace fdfit
