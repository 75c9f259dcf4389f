#include "rnne/error.hpp"
#include "rnne/json_io.hpp"
#include "rnne/pipeline.hpp"

#include <cstdlib>
#include <fstream>

namespace rnne {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& defaults, const json& given, const std::string& prefix) {
    if (!given.is_object()) return;
    for (const auto& [key, value] : given.items()) {
        const std::string path = prefix.empty() ? key : prefix + "." + key;
        if (!defaults.contains(key)) throw ValidationError("unknown config key '" + path + "'");
        if (defaults.at(key).is_object()) reject_unknown_keys(defaults.at(key), value, path);
    }
}

}  // namespace

std::filesystem::path RunConfig::output_root() const {
    if (!paths.output.empty()) return paths.output;
    if (const char* env = std::getenv("RNNE_OUTPUT_ROOT"); env && *env) return env;
    return "rnne_out";
}

void RunConfig::validate() const {
    if (window_size < 1) throw ValidationError("window_size must be at least 1");
    if (!(grubbs_alpha > 0.0 && grubbs_alpha < 1.0)) throw ValidationError("grubbs_alpha must lie in (0, 1)");
    model.validate();
    for (const auto& t : eval.tasks)
        if (t != "reconstruct" && t != "linkpred" && t != "classify")
            throw ValidationError("unknown eval task '" + t + "'");
    if (!(eval.hide_fraction > 0.0 && eval.hide_fraction < 1.0))
        throw ValidationError("eval.hide_fraction must lie in (0, 1)");
    if (eval.repeats == 0) throw ValidationError("eval.repeats must be positive");
    for (auto k : eval.ks)
        if (k == 0) throw ValidationError("eval.ks entries must be positive");
    gen.perturbation.validate();
}

json to_json(const RunConfig& cfg) {
    const auto& p = cfg.gen.perturbation;
    return {
        {"paths", {{"snapshots", cfg.paths.snapshots}, {"labels", cfg.paths.labels}, {"output", cfg.paths.output}}},
        {"capacity_N", cfg.capacity_N},
        {"window_size", cfg.window_size},
        {"grubbs_alpha", cfg.grubbs_alpha},
        {"directed", cfg.directed},
        {"model", to_json(cfg.model)},
        {"seeds", {{"train", cfg.seeds.train}, {"eval", cfg.seeds.eval}, {"gen", cfg.seeds.gen}}},
        {"eval",
         {{"tasks", cfg.eval.tasks},
          {"ks", cfg.eval.ks},
          {"hide_fraction", cfg.eval.hide_fraction},
          {"fractions", cfg.eval.fractions},
          {"repeats", cfg.eval.repeats},
          {"l2_strength", cfg.eval.l2_strength},
          {"dump_ranked", cfg.eval.dump_ranked}}},
        {"sweep",
         {{"alpha", cfg.sweep.alpha},
          {"beta", cfg.sweep.beta},
          {"gamma", cfg.sweep.gamma},
          {"max_iters", cfg.sweep.max_iters}}},
        {"gen",
         {{"communities", cfg.gen.communities},
          {"nodes_per", cfg.gen.nodes_per},
          {"p_in", cfg.gen.p_in},
          {"p_out", cfg.gen.p_out},
          {"perturbation",
           {{"series_length", p.series_length},
            {"node_add_rate", p.node_add_rate},
            {"node_remove_rate", p.node_remove_rate},
            {"edge_add_rate", p.edge_add_rate},
            {"edge_remove_rate", p.edge_remove_rate}}}}},
    };
}

RunConfig config_from_json(const json& given) {
    const json defaults = to_json(RunConfig{});
    if (!given.is_object()) throw ValidationError("config must be a JSON object");
    reject_unknown_keys(defaults, given, "");
    json j = defaults;
    j.merge_patch(given);

    RunConfig cfg;
    try {
        const auto& paths = j.at("paths");
        paths.at("snapshots").get_to(cfg.paths.snapshots);
        paths.at("labels").get_to(cfg.paths.labels);
        paths.at("output").get_to(cfg.paths.output);
        j.at("capacity_N").get_to(cfg.capacity_N);
        j.at("window_size").get_to(cfg.window_size);
        j.at("grubbs_alpha").get_to(cfg.grubbs_alpha);
        j.at("directed").get_to(cfg.directed);
        update_from_json(cfg.model, j.at("model"));

        const auto& seeds = j.at("seeds");
        seeds.at("train").get_to(cfg.seeds.train);
        seeds.at("eval").get_to(cfg.seeds.eval);
        seeds.at("gen").get_to(cfg.seeds.gen);

        const auto& ev = j.at("eval");
        ev.at("tasks").get_to(cfg.eval.tasks);
        ev.at("ks").get_to(cfg.eval.ks);
        ev.at("hide_fraction").get_to(cfg.eval.hide_fraction);
        ev.at("fractions").get_to(cfg.eval.fractions);
        ev.at("repeats").get_to(cfg.eval.repeats);
        ev.at("l2_strength").get_to(cfg.eval.l2_strength);
        ev.at("dump_ranked").get_to(cfg.eval.dump_ranked);

        const auto& sw = j.at("sweep");
        sw.at("alpha").get_to(cfg.sweep.alpha);
        sw.at("beta").get_to(cfg.sweep.beta);
        sw.at("gamma").get_to(cfg.sweep.gamma);
        sw.at("max_iters").get_to(cfg.sweep.max_iters);

        const auto& gen = j.at("gen");
        gen.at("communities").get_to(cfg.gen.communities);
        gen.at("nodes_per").get_to(cfg.gen.nodes_per);
        gen.at("p_in").get_to(cfg.gen.p_in);
        gen.at("p_out").get_to(cfg.gen.p_out);
        const auto& pert = gen.at("perturbation");
        pert.at("series_length").get_to(cfg.gen.perturbation.series_length);
        pert.at("node_add_rate").get_to(cfg.gen.perturbation.node_add_rate);
        pert.at("node_remove_rate").get_to(cfg.gen.perturbation.node_remove_rate);
        pert.at("edge_add_rate").get_to(cfg.gen.perturbation.edge_add_rate);
        pert.at("edge_remove_rate").get_to(cfg.gen.perturbation.edge_remove_rate);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    cfg.gen.perturbation.seed = cfg.seeds.gen;
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    try {
        return config_from_json(json::parse(in, nullptr, true, true));
    } catch (const json::parse_error& e) {
        throw ValidationError("config " + path.string() + " is not valid JSON: " + e.what());
    }
}

void apply_override(json& j, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ValidationError("override '" + assignment + "' is not key=value");
    std::string key = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);

    json value;
    try {
        value = json::parse(raw);
    } catch (const json::parse_error&) {
        value = raw;
    }

    std::string pointer = "/" + key;
    for (auto& c : pointer)
        if (c == '.') c = '/';
    j[json::json_pointer(pointer)] = value;
}

}  // namespace rnne
