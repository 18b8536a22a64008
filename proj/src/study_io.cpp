#include "scbn/study_io.hpp"

#include "scbn/error.hpp"
#include "scbn/pipeline.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>

namespace scbn {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

json parse_json(std::istream& in, const std::string& source) {
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        const auto end = std::min<std::size_t>(e.byte, text.size());
        const auto stop = text.begin() + static_cast<std::ptrdiff_t>(end);
        const auto line = 1 + static_cast<std::size_t>(std::count(text.begin(), stop, '\n'));
        throw ParseError(source, line, "invalid JSON");
    }
}

void require_object(const json& j, const std::string& what) {
    if (!j.is_object()) {
        throw ValidationError(what + " must be a JSON object");
    }
}

double as_number(const json& v, const std::string& key) {
    if (!v.is_number()) {
        throw ValidationError("'" + key + "' must be a number");
    }
    return v.get<double>();
}

std::uint64_t as_count(const json& v, const std::string& key) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
        throw ValidationError("'" + key + "' must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
}

std::string as_string(const json& v, const std::string& key) {
    if (!v.is_string()) {
        throw ValidationError("'" + key + "' must be a string");
    }
    return v.get<std::string>();
}

void apply_config_key(SimConfig& cfg, const std::string& key, const json& v, const std::filesystem::path& base_dir) {
    auto size = [&] { return static_cast<std::size_t>(as_count(v, key)); };
    auto number = [&] { return as_number(v, key); };
    if (key == "n_orthologs") {
        cfg.n_orthologs = size();
    } else if (key == "de_rate") {
        cfg.de_rate = number();
    } else if (key == "fold") {
        cfg.fold = number();
    } else if (key == "up_rate_sp2") {
        cfg.up_rate_sp2 = number();
    } else if (key == "n_unique_sp1") {
        cfg.n_unique_sp1 = size();
    } else if (key == "n_unique_sp2") {
        cfg.n_unique_sp2 = size();
    } else if (key == "n_unmapped_sp1") {
        cfg.n_unmapped_sp1 = size();
    } else if (key == "n_unmapped_sp2") {
        cfg.n_unmapped_sp2 = size();
    } else if (key == "conserved_size") {
        cfg.conserved_size = size();
    } else if (key == "noise_rate") {
        cfg.noise_rate = number();
    } else if (key == "depth_sp1") {
        cfg.depth_sp1 = number();
    } else if (key == "depth_sp2") {
        cfg.depth_sp2 = number();
    } else if (key == "log_mean") {
        cfg.rate_source.log_mean = number();
    } else if (key == "log_sd") {
        cfg.rate_source.log_sd = number();
    } else if (key == "length_min") {
        cfg.lengths.min = static_cast<std::int64_t>(as_count(v, key));
    } else if (key == "length_max") {
        cfg.lengths.max = static_cast<std::int64_t>(as_count(v, key));
    } else if (key == "seed") {
        cfg.seed = as_count(v, key);
    } else if (key == "reference") {
        std::filesystem::path p = as_string(v, key);
        if (p.is_relative() && !base_dir.empty()) {
            p = base_dir / p;
        }
        cfg.rate_source = RateSource::from_table(load_counts_tsv(p));
    } else {
        throw ValidationError("unknown simulation setting '" + key + "'");
    }
}

SimConfig apply_config(const json& j, SimConfig cfg, const std::filesystem::path& base_dir) {
    require_object(j, "simulation config");
    for (const auto& [key, value] : j.items()) {
        apply_config_key(cfg, key, value, base_dir);
    }
    return cfg;
}

GridConfig apply_grid(const json& j, GridConfig grid) {
    require_object(j, "grid");
    for (const auto& [key, v] : j.items()) {
        if (key == "alpha") {
            grid.alpha = as_number(v, key);
        } else if (key == "center") {
            grid.center = as_number(v, key);
        } else if (key == "span") {
            grid.span = as_number(v, key);
        } else if (key == "points") {
            grid.coarse_points = static_cast<int>(as_count(v, key));
        } else if (key == "refine_rounds") {
            grid.refine_rounds = static_cast<int>(as_count(v, key));
        } else if (key == "refine_shrink") {
            grid.refine_shrink = as_number(v, key);
        } else {
            throw ValidationError("unknown grid setting '" + key + "'");
        }
    }
    return grid;
}

ordered_json optional_number(const std::optional<double>& v) {
    return v ? ordered_json(round_sig6(*v)) : ordered_json(nullptr);
}

} // namespace

SimConfig parse_sim_config(std::istream& in, const std::string& source, const SimConfig& base,
                           const std::filesystem::path& base_dir) {
    return apply_config(parse_json(in, source), base, base_dir);
}

StudySpec parse_study_spec(std::istream& in, const std::string& source, const std::filesystem::path& base_dir) {
    const auto j = parse_json(in, source);
    require_object(j, "study spec");
    static const std::vector<std::string> known{"preset", "name",  "replicates", "master_seed", "cutoff", "cutoffs",
                                                "methods", "grid", "base",       "configs",     "sweep"};
    for (const auto& [key, value] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw ValidationError("unknown study setting '" + key + "'");
        }
    }
    if (j.contains("configs") && j.contains("sweep")) {
        throw ValidationError("a study spec takes either 'configs' or 'sweep', not both");
    }

    StudySpec spec;
    if (j.contains("preset")) {
        spec = study_preset(static_cast<int>(as_count(j["preset"], "preset")));
    }
    if (j.contains("name")) {
        spec.name = as_string(j["name"], "name");
    }
    if (j.contains("replicates")) {
        spec.replicates = static_cast<int>(as_count(j["replicates"], "replicates"));
    }
    if (j.contains("master_seed")) {
        spec.master_seed = as_count(j["master_seed"], "master_seed");
    }
    if (j.contains("cutoff")) {
        spec.cutoff = as_number(j["cutoff"], "cutoff");
        spec.cutoffs.clear();
    }
    if (j.contains("methods")) {
        spec.methods.clear();
        for (const auto& m : j["methods"]) {
            spec.methods.push_back(parse_method(as_string(m, "methods")));
        }
    }
    if (j.contains("grid")) {
        spec.grid = apply_grid(j["grid"], spec.grid);
    }

    const json base_json = j.value("base", json::object());
    if (j.contains("configs")) {
        spec.configs.clear();
        spec.labels.clear();
        const SimConfig base = apply_config(base_json, SimConfig(), base_dir);
        for (const auto& c : j["configs"]) {
            spec.configs.push_back(apply_config(c, base, base_dir));
        }
    } else if (j.contains("sweep")) {
        const auto& sweep = j["sweep"];
        require_object(sweep, "sweep");
        if (!sweep.contains("parameter") || !sweep.contains("values") || !sweep["values"].is_array()) {
            throw ValidationError("sweep needs 'parameter' and a 'values' array");
        }
        const auto parameter = as_string(sweep.at("parameter"), "parameter");
        const SimConfig base = apply_config(base_json, SimConfig(), base_dir);
        spec.configs.clear();
        spec.labels.clear();
        for (const auto& v : sweep.at("values")) {
            spec.configs.push_back(apply_config(json{{parameter, v}}, base, base_dir));
            spec.labels.push_back(parameter + "=" + format_sig6(as_number(v, parameter)));
        }
    } else if (spec.configs.empty()) {
        spec.configs.push_back(apply_config(base_json, SimConfig(), base_dir));
    } else {
        for (auto& cfg : spec.configs) {
            cfg = apply_config(base_json, cfg, base_dir);
        }
    }

    if (j.contains("cutoffs")) {
        spec.cutoffs.clear();
        for (const auto& c : j["cutoffs"]) {
            spec.cutoffs.push_back(as_number(c, "cutoffs"));
        }
    }
    if (spec.configs.empty()) {
        throw ValidationError("study spec has no configs");
    }
    return spec;
}

StudySpec load_study_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open '" + path.string() + "'");
    }
    return parse_study_spec(in, path.string(), path.parent_path());
}

void write_sim_config_json(std::ostream& out, const SimConfig& c) {
    ordered_json j{{"n_orthologs", c.n_orthologs},
                   {"de_rate", round_sig6(c.de_rate)},
                   {"fold", round_sig6(c.fold)},
                   {"up_rate_sp2", round_sig6(c.up_rate_sp2)},
                   {"n_unique_sp1", c.n_unique_sp1},
                   {"n_unique_sp2", c.n_unique_sp2},
                   {"n_unmapped_sp1", c.n_unmapped_sp1},
                   {"n_unmapped_sp2", c.n_unmapped_sp2},
                   {"conserved_size", c.conserved_size},
                   {"noise_rate", round_sig6(c.noise_rate)},
                   {"depth_sp1", round_sig6(c.depth_sp1)},
                   {"depth_sp2", round_sig6(c.depth_sp2)},
                   {"length_min", c.lengths.min},
                   {"length_max", c.lengths.max},
                   {"seed", c.seed},
                   {"rate_source", c.rate_source.describe()}};
    out << j.dump(2) << '\n';
}

void write_study_json(std::ostream& out, const StudySpec& spec, std::span<const StudyCell> cells) {
    ordered_json j;
    j["name"] = spec.name;
    j["replicates"] = spec.replicates;
    j["master_seed"] = spec.master_seed;
    j["methods"] = ordered_json::array();
    for (auto m : spec.methods) {
        j["methods"].push_back(to_string(m));
    }
    j["grid"] = {{"alpha", round_sig6(spec.grid.alpha)},
                 {"center", spec.grid.center ? ordered_json(round_sig6(*spec.grid.center)) : ordered_json(nullptr)},
                 {"span", round_sig6(spec.grid.span)},
                 {"points", spec.grid.coarse_points},
                 {"refine_rounds", spec.grid.refine_rounds},
                 {"refine_shrink", round_sig6(spec.grid.refine_shrink)}};
    j["cells"] = ordered_json::array();
    for (const auto& c : cells) {
        j["cells"].push_back({{"config", c.config_index},
                              {"label", c.label},
                              {"method", to_string(c.method)},
                              {"cutoff", round_sig6(c.cutoff)},
                              {"replicates", c.replicates.size()},
                              {"mean_false_discoveries", round_sig6(c.mean_false_discoveries)},
                              {"mean_precision", optional_number(c.mean_precision)},
                              {"precision_excluded", c.precision_excluded},
                              {"mean_sensitivity", optional_number(c.mean_sensitivity)},
                              {"mean_f_score", round_sig6(c.mean_f_score)},
                              {"mean_c_hat", round_sig6(c.mean_c_hat)},
                              {"median_c_hat", round_sig6(c.median_c_hat)},
                              {"mean_true_c", round_sig6(c.mean_true_c)},
                              {"mean_overlap", round_sig6(c.mean_overlap)},
                              {"mean_overlap_directional", round_sig6(c.mean_overlap_directional)}});
    }
    out << j.dump(2) << '\n';
}

void write_metrics_json(std::ostream& out, const Metrics& m) {
    ordered_json j{{"false_discoveries", m.false_discoveries},
                   {"true_positives", m.true_positives},
                   {"false_negatives", m.false_negatives},
                   {"precision", optional_number(m.precision)},
                   {"sensitivity", optional_number(m.sensitivity)},
                   {"f_score", round_sig6(m.f_score)}};
    out << j.dump(2) << '\n';
}

} // namespace scbn
