#include <chrono>
#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "wico/baselines.hpp"
#include "wico/config.hpp"
#include "wico/decompose.hpp"
#include "wico/evalsuite.hpp"
#include "wico/io.hpp"
#include "wico/projector.hpp"

namespace {

using namespace wico;

struct CommonOpts {
    std::string config_path;
    std::string input_path;
    std::string output_path;
    std::optional<std::uint64_t> seed;
    std::string dtype = "f32";
};

DType parse_dtype(const std::string& s) {
    if (s == "f32") return DType::f32;
    if (s == "f64") return DType::f64;
    throw ConfigError("dtype must be f32 or f64");
}

std::size_t env_threads() {
    const char* v = std::getenv("WICO_THREADS");
    if (!v || !*v) return 0;
    return static_cast<std::size_t>(std::strtoull(v, nullptr, 10));
}

Projector projector_from_config(const RunConfig& cfg) {
    Projector p;
    if (cfg.projector.h_out) {
        // Honor the explicit output grid instead of the aspect-ratio search.
        p = make_projector(cfg.projector.kind, cfg.grid.h, cfg.grid.w, cfg.grid.d_v,
                           cfg.projector.k, cfg.projector.d_l, cfg.projector.seed,
                           cfg.projector.k_v);
        if (cfg.projector.kind == ProjectorTag::Wico ||
            cfg.projector.kind == ProjectorTag::CAbstractor) {
            p.spec = compute_window_spec(cfg.grid.h, cfg.grid.w,
                                         *cfg.projector.h_out, *cfg.projector.w_out);
        }
    } else {
        p = make_projector(cfg.projector.kind, cfg.grid.h, cfg.grid.w, cfg.grid.d_v,
                           cfg.projector.k, cfg.projector.d_l, cfg.projector.seed,
                           cfg.projector.k_v);
    }
    if (cfg.projector.linear_mode) {
        const std::size_t d_feat = p.mlp.d_in();
        if (cfg.projector.d_l != d_feat) {
            throw ConfigError("linear_mode identity head needs d_l == feature dim (" +
                              std::to_string(d_feat) + ")");
        }
        p.mlp = MlpParams::identity(d_feat);
    }
    return p;
}

int cmd_gen(const CommonOpts& o) {
    const RunConfig cfg = RunConfig::load(o.config_path);
    const SynthKind kind = cfg.eval.datasets.empty() ? SynthKind::Gaussian
                                                     : cfg.eval.datasets.front();
    const std::uint64_t seed =
        o.seed ? *o.seed : (cfg.eval.seeds.empty() ? 0 : cfg.eval.seeds.front());
    TokenGrid grid = synth_features(cfg.grid.h, cfg.grid.w, cfg.grid.d_v, kind, seed);
    write_tensor(o.output_path, grid.data.astype(parse_dtype(o.dtype)));
    std::cout << "gen kind=" << synth_kind_name(kind) << " seed=" << seed
              << " dims=" << grid.data.shape_str() << "\n";
    return 0;
}

int cmd_project(const CommonOpts& o) {
    const RunConfig cfg = RunConfig::load(o.config_path);
    const Tensor in = read_tensor(o.input_path);
    const TokenGrid grid = TokenGrid::from_tensor(in);
    if (grid.h != cfg.grid.h || grid.w != cfg.grid.w || grid.d_v != cfg.grid.d_v) {
        throw ConfigError("input grid " + in.shape_str() +
                          " does not match configured grid");
    }
    const Projector proj = projector_from_config(cfg);
    const auto t0 = std::chrono::steady_clock::now();
    const Tensor out = proj.apply(grid.flat());
    const auto t1 = std::chrono::steady_clock::now();
    write_tensor(o.output_path, out.astype(in.dtype()));
    const double ms =
        std::chrono::duration<double, std::milli>(t1 - t0).count();
    std::cout << "k=" << proj.k << " d_t=" << proj.mlp.d_in()
              << " overlapping=" << (proj.spec.overlapping ? 1 : 0)
              << " wall_ms=" << ms << "\n";
    return 0;
}

int cmd_decompose(const CommonOpts& o) {
    const RunConfig cfg = RunConfig::load(o.config_path);
    const Tensor in = read_tensor(o.input_path);
    if (in.rank() != 2) {
        throw InputError("decompose: input must be a rank-2 token tensor, got " +
                         in.shape_str());
    }
    const std::size_t n = cfg.decompose.n;
    Tensor out = cfg.decompose.strategy == DecomposeStrategy::TokenInterp
                     ? token_interpolate(in, n)
                     : channel_interpolate(in, n);
    write_tensor(o.output_path, out.astype(in.dtype()));
    std::cout << "tokens=" << out.extent(0) << "\n";
    if (out.extent(0) < n) {
        std::cout << "shortfall: produced " << out.extent(0) << " of " << n
                  << " requested tokens (k*floor(n/k))\n";
    }
    return 0;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
    std::vector<std::vector<std::string>> cells;
    cells.reserve(rows.size());
    for (const BenchRow& r : rows) {
        cells.push_back({r.projector, std::to_string(r.k), r.dataset,
                         std::to_string(r.seed), csv_number(r.probe_mse),
                         csv_number(r.total_variation),
                         csv_number(r.window_variance), csv_number(r.cost_ratio)});
    }
    return csv_format({"projector", "k", "dataset", "seed", "probe_mse",
                       "total_variation", "window_variance", "cost_ratio"},
                      cells);
}

int cmd_bench(const CommonOpts& o) {
    const RunConfig cfg = RunConfig::load(o.config_path);
    BenchConfig bc;
    bc.h = cfg.grid.h;
    bc.w = cfg.grid.w;
    bc.d_v = cfg.grid.d_v;
    bc.d_l = cfg.projector.d_l;
    bc.projectors = cfg.eval.projectors;
    bc.ks = cfg.eval.ks.empty() ? std::vector<std::size_t>{cfg.projector.k}
                                : cfg.eval.ks;
    bc.datasets = cfg.eval.datasets;
    bc.seeds = cfg.eval.seeds;
    bc.lambda = cfg.eval.lambda;
    bc.l_l = cfg.eval.l_l;
    bc.k_l = cfg.eval.k_l;
    bc.t_text = cfg.eval.t_text;
    bc.d_model = cfg.eval.d_model;
    bc.threads = env_threads();
    const std::string csv = bench_csv(run_benchmark(bc));
    if (o.output_path.empty()) {
        std::cout << csv;
    } else {
        write_text_file(o.output_path, csv);
    }
    return 0;
}

int cmd_cost(const CommonOpts& o) {
    const RunConfig cfg = RunConfig::load(o.config_path);
    const std::size_t n = cfg.grid.h * cfg.grid.w;
    const CostReport rep = cost_model(cfg.eval.l_l, cfg.eval.k_l, cfg.projector.k, n,
                                      cfg.eval.t_text, cfg.eval.d_model);
    const std::string csv = csv_format(
        {"l_l", "k_l", "k", "n", "t_text", "d_model", "projection_flops",
         "attention_flops", "total", "baseline_total", "ratio"},
        {{std::to_string(cfg.eval.l_l), std::to_string(cfg.eval.k_l),
          std::to_string(cfg.projector.k), std::to_string(n),
          std::to_string(cfg.eval.t_text), std::to_string(cfg.eval.d_model),
          csv_number(rep.projection_flops), csv_number(rep.attention_flops),
          csv_number(rep.total), csv_number(rep.baseline_total),
          csv_number(rep.ratio)}});
    if (o.output_path.empty()) {
        std::cout << csv;
    } else {
        write_text_file(o.output_path, csv);
    }
    return 0;
}

int cmd_viz(const CommonOpts& o) {
    const Tensor in = read_tensor(o.input_path);
    const TokenGrid grid = TokenGrid::from_tensor(in);
    write_heatmap_pgm(o.output_path, channel_mean_map(grid));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"WiCo visual-token compression toolkit"};
    app.require_subcommand(1);
    CommonOpts opts;

    auto add_common = [&](CLI::App* sub, bool needs_config, bool needs_input,
                          bool needs_output) {
        auto* c = sub->add_option("--config", opts.config_path, "run config (JSON)");
        if (needs_config) c->required();
        auto* i = sub->add_option("--input", opts.input_path, "input tensor file");
        if (needs_input) i->required();
        auto* out = sub->add_option("--output", opts.output_path, "output path");
        if (needs_output) out->required();
        sub->add_option("--seed", opts.seed, "seed override");
        sub->add_option("--dtype", opts.dtype, "f32 or f64")
            ->check(CLI::IsMember({"f32", "f64"}));
    };

    auto* gen = app.add_subcommand("gen", "generate synthetic token grids");
    add_common(gen, true, false, true);
    auto* project = app.add_subcommand("project", "run the configured projector");
    add_common(project, true, true, true);
    auto* decomp = app.add_subcommand("decompose", "upsample compressed tokens");
    add_common(decomp, true, true, true);
    auto* bench = app.add_subcommand("bench", "projector comparison sweep (CSV)");
    add_common(bench, true, false, false);
    auto* cost = app.add_subcommand("cost", "prefill cost model (CSV row)");
    add_common(cost, true, false, false);
    auto* viz = app.add_subcommand("viz", "channel-mean heatmap (PGM)");
    add_common(viz, false, true, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen(opts);
        if (project->parsed()) return cmd_project(opts);
        if (decomp->parsed()) return cmd_decompose(opts);
        if (bench->parsed()) return cmd_bench(opts);
        if (cost->parsed()) return cmd_cost(opts);
        if (viz->parsed()) return cmd_viz(opts);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
