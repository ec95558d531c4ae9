#include "wico/config.hpp"

#include <set>

#include <json.hpp>

#include "wico/io.hpp"

namespace wico {

namespace {

using nlohmann::json;

void require_keys(const json& obj, const std::string& section,
                  const std::set<std::string>& allowed) {
    if (!obj.is_object()) {
        throw ConfigError("config: section '" + section + "' must be an object");
    }
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.count(key)) {
            throw ConfigError("config: unknown key '" + key + "' in section '" +
                              section + "'");
        }
    }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config: bad value for '" + std::string(key) +
                          "': " + e.what());
    }
}

}  // namespace

RunConfig RunConfig::parse(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    require_keys(doc, "(root)", {"grid", "projector", "decompose", "eval", "output"});

    RunConfig cfg;
    if (doc.contains("grid")) {
        const json& g = doc["grid"];
        require_keys(g, "grid", {"h", "w", "d_v"});
        cfg.grid.h = get_or<std::size_t>(g, "h", cfg.grid.h);
        cfg.grid.w = get_or<std::size_t>(g, "w", cfg.grid.w);
        cfg.grid.d_v = get_or<std::size_t>(g, "d_v", cfg.grid.d_v);
        if (cfg.grid.h < 1 || cfg.grid.w < 1 || cfg.grid.d_v < 1) {
            throw ConfigError("config: grid extents must be >= 1");
        }
    }
    if (doc.contains("projector")) {
        const json& p = doc["projector"];
        require_keys(p, "projector",
                     {"kind", "k", "h_out", "w_out", "d_l", "k_v", "seed",
                      "linear_mode"});
        cfg.projector.kind =
            parse_projector_tag(get_or<std::string>(p, "kind", "wico"));
        if (p.contains("h_out")) cfg.projector.h_out = p["h_out"].get<std::size_t>();
        if (p.contains("w_out")) cfg.projector.w_out = p["w_out"].get<std::size_t>();
        if (cfg.projector.h_out.has_value() != cfg.projector.w_out.has_value()) {
            throw ConfigError("config: h_out and w_out must be given together");
        }
        if (cfg.projector.h_out) {
            cfg.projector.k = *cfg.projector.h_out * *cfg.projector.w_out;
            if (p.contains("k") &&
                p["k"].get<std::size_t>() != cfg.projector.k) {
                throw ConfigError("config: k conflicts with h_out*w_out");
            }
        } else {
            cfg.projector.k = get_or<std::size_t>(p, "k", 0);
            if (cfg.projector.k == 0) {
                throw ConfigError("config: projector needs k or (h_out, w_out)");
            }
        }
        cfg.projector.d_l = get_or<std::size_t>(p, "d_l", cfg.projector.d_l);
        cfg.projector.k_v = get_or<std::size_t>(p, "k_v", cfg.projector.k_v);
        cfg.projector.seed = get_or<std::uint64_t>(p, "seed", cfg.projector.seed);
        cfg.projector.linear_mode = get_or<bool>(p, "linear_mode", false);
    }
    if (doc.contains("decompose")) {
        const json& d = doc["decompose"];
        require_keys(d, "decompose", {"strategy", "l_l", "k_l", "n"});
        const std::string strategy = get_or<std::string>(d, "strategy", "token");
        if (strategy == "token") {
            cfg.decompose.strategy = DecomposeStrategy::TokenInterp;
        } else if (strategy == "channel") {
            cfg.decompose.strategy = DecomposeStrategy::ChannelInterp;
        } else {
            throw ConfigError("config: decompose strategy must be 'token' or 'channel'");
        }
        cfg.decompose.l_l = get_or<std::size_t>(d, "l_l", cfg.decompose.l_l);
        cfg.decompose.k_l = get_or<std::size_t>(d, "k_l", cfg.decompose.k_l);
        cfg.decompose.n = get_or<std::size_t>(d, "n", cfg.decompose.n);
    }
    if (doc.contains("eval")) {
        const json& e = doc["eval"];
        require_keys(e, "eval",
                     {"datasets", "lambda", "seeds", "ks", "projectors", "l_l",
                      "k_l", "t_text", "d_model"});
        if (e.contains("datasets")) {
            cfg.eval.datasets.clear();
            for (const auto& name : e["datasets"]) {
                cfg.eval.datasets.push_back(parse_synth_kind(name.get<std::string>()));
            }
        }
        cfg.eval.lambda = get_or<double>(e, "lambda", cfg.eval.lambda);
        if (cfg.eval.lambda <= 0.0) throw ConfigError("config: lambda must be > 0");
        if (e.contains("seeds")) {
            cfg.eval.seeds = e["seeds"].get<std::vector<std::uint64_t>>();
        }
        if (e.contains("ks")) {
            cfg.eval.ks = e["ks"].get<std::vector<std::size_t>>();
        }
        if (e.contains("projectors")) {
            for (const auto& name : e["projectors"]) {
                cfg.eval.projectors.push_back(
                    parse_projector_tag(name.get<std::string>()));
            }
        }
        cfg.eval.l_l = get_or<std::size_t>(e, "l_l", cfg.eval.l_l);
        cfg.eval.k_l = get_or<std::size_t>(e, "k_l", cfg.eval.k_l);
        cfg.eval.t_text = get_or<std::size_t>(e, "t_text", cfg.eval.t_text);
        cfg.eval.d_model = get_or<std::size_t>(e, "d_model", cfg.eval.d_model);
    }
    if (doc.contains("output")) {
        const json& o = doc["output"];
        require_keys(o, "output", {"dir"});
        cfg.output.dir = get_or<std::string>(o, "dir", cfg.output.dir);
    }
    return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
    return parse(read_file_bytes(path));
}

}  // namespace wico
