#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wico/baselines.hpp"
#include "wico/projector.hpp"
#include "wico/tensor.hpp"

namespace wico {

struct SmoothnessReport {
    // Mean absolute difference between 4-neighbor cells of the channel-mean map.
    double total_variation = 0.0;
    // Mean within-window variance of the channel-mean map under the spec.
    double window_variance = 0.0;
};

SmoothnessReport smoothness(const TokenGrid& grid, const WindowSpec& spec);
// The h×w channel-mean map of a grid.
Tensor channel_mean_map(const TokenGrid& grid);

struct ProbeReport {
    double mse = 0.0;
    double lambda = 0.0;
    std::uint64_t seed = 0;
};

// Ridge fit W = (C^T C + lambda I)^-1 C^T O with a bias column appended to C;
// rows are samples, so both tensors must have the same row count. Callers
// align representations of unequal token counts by window- or group-
// concatenating the original first (see aligned_original).
ProbeReport probe(const Tensor& original, const Tensor& compressed, double lambda,
                  std::uint64_t seed = 0);

// Row-aligned regression target for a projector's features: the raw tokens
// grouped the same way the compression core groups them (k rows).
Tensor aligned_original(const Projector& proj, const Tensor& v);

struct CostReport {
    std::vector<std::size_t> schedule;  // per-layer token count
    double attention_flops = 0.0;
    double projection_flops = 0.0;
    double total = 0.0;
    double baseline_total = 0.0;  // all-n schedule
    double ratio = 0.0;
};

// Dense prefill estimate: per layer 8*T*D^2 (projections) + 4*T^2*D
// (attention matrix + value mix). The last k_l layers see t_text + n tokens,
// the rest t_text + k.
CostReport cost_model(std::size_t l_l, std::size_t k_l, std::size_t k,
                      std::size_t n, std::size_t t_text, std::size_t d_model);

enum class SynthKind { Gaussian, PiecewiseConstant, GradientRamp, Checkerboard };

const char* synth_kind_name(SynthKind kind);
SynthKind parse_synth_kind(const std::string& name);

TokenGrid synth_features(std::size_t h, std::size_t w, std::size_t d_v,
                         SynthKind kind, std::uint64_t seed);

struct BenchConfig {
    std::size_t h = 12, w = 12, d_v = 8;
    std::size_t d_l = 16;
    std::vector<ProjectorTag> projectors;
    std::vector<std::size_t> ks;
    std::vector<SynthKind> datasets;
    std::vector<std::uint64_t> seeds;
    double lambda = 1e-6;
    // cost-model axes
    std::size_t l_l = 32, k_l = 2, t_text = 50, d_model = 4096;
    std::size_t threads = 0;  // 0 = sequential
};

struct BenchRow {
    std::string projector;
    std::size_t k = 0;
    std::string dataset;
    std::uint64_t seed = 0;
    double probe_mse = 0.0;
    double total_variation = 0.0;
    double window_variance = 0.0;
    double cost_ratio = 0.0;
};

// One row per (projector, k, dataset, seed), canonically ordered and
// independent of the worker count.
std::vector<BenchRow> run_benchmark(const BenchConfig& config);

}  // namespace wico
