#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "wico/evalsuite.hpp"

using namespace wico;

namespace {

// Brute-force mean absolute 4-neighbor difference of a 2-D map.
double tv_oracle(const Tensor& map) {
    const std::size_t h = map.extent(0), w = map.extent(1);
    double tv = 0.0;
    std::size_t pairs = 0;
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
            if (c + 1 < w) {
                tv += std::fabs(map.at2(r, c) - map.at2(r, c + 1));
                ++pairs;
            }
            if (r + 1 < h) {
                tv += std::fabs(map.at2(r, c) - map.at2(r + 1, c));
                ++pairs;
            }
        }
    }
    return pairs ? tv / double(pairs) : 0.0;
}

// 3x3 mean blur with clamped borders, per channel.
TokenGrid box_blur(const TokenGrid& g) {
    Tensor out({g.h, g.w, g.d_v});
    auto clamp = [](long v, long lo, long hi) { return std::max(lo, std::min(v, hi)); };
    for (std::size_t r = 0; r < g.h; ++r) {
        for (std::size_t c = 0; c < g.w; ++c) {
            for (std::size_t ch = 0; ch < g.d_v; ++ch) {
                double s = 0.0;
                for (long dr = -1; dr <= 1; ++dr) {
                    for (long dc = -1; dc <= 1; ++dc) {
                        const long rr = clamp(long(r) + dr, 0, long(g.h) - 1);
                        const long cc = clamp(long(c) + dc, 0, long(g.w) - 1);
                        s += g.data.at3(std::size_t(rr), std::size_t(cc), ch);
                    }
                }
                out.at3(r, c, ch) = s / 9.0;
            }
        }
    }
    return TokenGrid::from_tensor(out);
}

}  // namespace

TEST_CASE("smoothness of degenerate grids") {
    TokenGrid constant = TokenGrid::from_tensor(Tensor::full({6, 6, 3}, 1.25));
    WindowSpec spec = compute_window_spec(6, 6, 3, 3);
    SmoothnessReport rep = smoothness(constant, spec);
    CHECK(rep.total_variation == 0.0);
    CHECK(rep.window_variance == 0.0);

    TokenGrid board = synth_features(6, 6, 1, SynthKind::Checkerboard, 0);
    SmoothnessReport rep2 = smoothness(board, spec);
    CHECK(rep2.total_variation == doctest::Approx(2.0));
}

TEST_CASE("total variation equals the brute-force loop") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        TokenGrid grid = synth_features(7, 9, 4, SynthKind::Gaussian, seed);
        WindowSpec spec = compute_window_spec(7, 9, 3, 3);
        SmoothnessReport rep = smoothness(grid, spec);
        CHECK(rep.total_variation == tv_oracle(channel_mean_map(grid)));
    }
}

TEST_CASE("box blur lowers total variation") {
    WindowSpec spec = compute_window_spec(10, 10, 5, 5);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        TokenGrid grid = synth_features(10, 10, 4, SynthKind::Gaussian, seed);
        const double tv = smoothness(grid, spec).total_variation;
        const double tv_blurred = smoothness(box_blur(grid), spec).total_variation;
        CHECK(tv_blurred < tv);
    }
}

TEST_CASE("probe recovers an identity compression") {
    std::mt19937_64 rng(1);
    Tensor v = Tensor::randn({32, 6}, rng);
    ProbeReport rep = probe(v, v, 1e-6);
    CHECK(rep.mse < 1e-8);
    CHECK(rep.lambda == 1e-6);
}

TEST_CASE("probe of zeros reports the original's variance") {
    std::mt19937_64 rng(2);
    Tensor v = Tensor::randn({40, 5}, rng);
    Tensor zeros = Tensor::zeros({40, 3});
    ProbeReport rep = probe(v, zeros, 1e-6);

    double var = 0.0;
    for (std::size_t j = 0; j < 5; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < 40; ++i) mean += v.at2(i, j);
        mean /= 40.0;
        for (std::size_t i = 0; i < 40; ++i) {
            const double d = v.at2(i, j) - mean;
            var += d * d;
        }
    }
    var /= 40.0 * 5.0;
    CHECK(rep.mse == doctest::Approx(var).epsilon(1e-6));
}

TEST_CASE("probe demands aligned row counts and finite input") {
    std::mt19937_64 rng(3);
    Tensor a = Tensor::randn({8, 4}, rng);
    Tensor b = Tensor::randn({6, 4}, rng);
    CHECK_THROWS_AS(probe(a, b, 1e-6), DimError);
    CHECK_THROWS_AS(probe(a, a, 0.0), RangeError);

    Tensor bad = a;
    bad[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(probe(a, bad, 1e-6), InputError);
}

TEST_CASE("window-concat features probe near zero, pooled features do not") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        TokenGrid grid = synth_features(8, 8, 8, SynthKind::Gaussian, seed);
        const Tensor v = grid.flat();

        Projector wico = make_projector(ProjectorTag::Wico, 8, 8, 8, 16, 16, seed);
        Tensor target = aligned_original(wico, v);
        CHECK(probe(target, wico.features(v), 1e-6, seed).mse < 1e-6);

        Tensor pooled = reshape(adaptive_avg_pool(grid, 4, 4), {16, 8});
        CHECK(probe(target, pooled, 1e-6, seed).mse > 1e-3);
    }
}

TEST_CASE("adding columns never hurts the probe fit") {
    std::mt19937_64 rng(4);
    Tensor original = Tensor::randn({24, 6}, rng);
    Tensor base = Tensor::randn({24, 4}, rng);
    Tensor extra = Tensor::randn({24, 2}, rng);
    Tensor wider = concat_cols({base, extra});
    const double m1 = probe(original, base, 1e-6).mse;
    const double m2 = probe(original, wider, 1e-6).mse;
    CHECK(m2 <= m1 + 1e-9 * (1.0 + m1));
}

TEST_CASE("cost model degenerate ratios") {
    CostReport a = cost_model(32, 0, 576, 576, 50, 4096);
    CHECK(a.ratio == doctest::Approx(1.0).epsilon(1e-12));
    CostReport b = cost_model(32, 32, 144, 576, 50, 4096);
    CHECK(b.ratio == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(b.schedule.size() == 32);
    for (std::size_t t : b.schedule) CHECK(t == 626);
}

TEST_CASE("cost model matches an independent evaluation of the formula") {
    const CostReport rep = cost_model(32, 2, 144, 576, 50, 4096);
    const double d = 4096.0;
    auto layer_flops = [&](double t) { return 8.0 * t * d * d + 4.0 * t * t * d; };
    const double total = 30.0 * layer_flops(194.0) + 2.0 * layer_flops(626.0);
    const double baseline = 32.0 * layer_flops(626.0);
    CHECK(rep.total == total);
    CHECK(rep.baseline_total == baseline);
    CHECK(rep.ratio == total / baseline);
    CHECK(rep.ratio < 1.0);

    // late-layer expansion adds little on top of the flat-k schedule
    const CostReport flat = cost_model(32, 0, 144, 576, 50, 4096);
    const double added = (rep.ratio - flat.ratio) / (1.0 - flat.ratio);
    CHECK(added > 0.0);
    CHECK(added < 0.15);
}

TEST_CASE("cost ratio is monotone in k_l and k") {
    double prev = -1.0;
    for (std::size_t k_l : {0u, 1u, 2u, 4u, 8u, 16u, 32u}) {
        const double r = cost_model(32, k_l, 144, 576, 50, 256).ratio;
        CHECK(r >= prev);
        prev = r;
    }
    prev = -1.0;
    for (std::size_t k : {16u, 64u, 144u, 288u, 576u}) {
        const double r = cost_model(32, 2, k, 576, 50, 256).ratio;
        CHECK(r >= prev);
        prev = r;
    }
}

TEST_CASE("synthetic generators are deterministic and shaped") {
    TokenGrid board = synth_features(4, 4, 1, SynthKind::Checkerboard, 9);
    for (std::size_t r = 0; r < 4; ++r) {
        for (std::size_t c = 0; c < 4; ++c) {
            CHECK(board.data.at3(r, c, 0) == ((r + c) % 2 == 0 ? 1.0 : -1.0));
        }
    }
    for (SynthKind kind : {SynthKind::Gaussian, SynthKind::PiecewiseConstant,
                           SynthKind::GradientRamp, SynthKind::Checkerboard}) {
        TokenGrid a = synth_features(9, 7, 3, kind, 42);
        TokenGrid b = synth_features(9, 7, 3, kind, 42);
        REQUIRE(a.data.size() == b.data.size());
        for (std::size_t i = 0; i < a.data.size(); ++i) CHECK(a.data[i] == b.data[i]);
        CHECK(parse_synth_kind(synth_kind_name(kind)) == kind);
    }
    CHECK_THROWS_AS(parse_synth_kind("nope"), ConfigError);
}

TEST_CASE("piecewise grids are smoother within windows than gaussian") {
    WindowSpec spec = compute_window_spec(12, 12, 6, 6);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        TokenGrid pc = synth_features(12, 12, 8, SynthKind::PiecewiseConstant, seed);
        TokenGrid gs = synth_features(12, 12, 8, SynthKind::Gaussian, seed);
        CHECK(smoothness(pc, spec).window_variance <
              smoothness(gs, spec).window_variance);
    }
}

TEST_CASE("benchmark table shape") {
    BenchConfig cfg;
    cfg.ks = {16};
    cfg.datasets = {SynthKind::Gaussian};
    cfg.seeds = {0};
    CHECK(run_benchmark(cfg).empty());

    cfg.projectors = {ProjectorTag::Perceiver};
    auto rows = run_benchmark(cfg);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].projector == "perceiver");
    CHECK(rows[0].k == 16);
    CHECK(rows[0].dataset == "gaussian");
}

TEST_CASE("full sweep ranks the concatenating projectors lowest") {
    BenchConfig cfg;
    cfg.projectors = {ProjectorTag::Wico,      ProjectorTag::Concat1D,
                      ProjectorTag::TokenFilter, ProjectorTag::Perceiver,
                      ProjectorTag::TokenMixer,  ProjectorTag::CAbstractor};
    cfg.ks = {16, 36};
    cfg.datasets = {SynthKind::Gaussian};
    cfg.seeds = {0, 1};
    auto rows = run_benchmark(cfg);
    REQUIRE(rows.size() == 24);

    double worst_concat = 0.0, best_other = 1e300;
    for (const BenchRow& r : rows) {
        if (r.projector == "wico" || r.projector == "concat1d") {
            worst_concat = std::max(worst_concat, r.probe_mse);
        } else {
            best_other = std::min(best_other, r.probe_mse);
        }
    }
    CHECK(worst_concat < 1e-6);
    CHECK(worst_concat < best_other);

    // identical rows regardless of worker count
    BenchConfig threaded = cfg;
    threaded.threads = 4;
    auto rows2 = run_benchmark(threaded);
    REQUIRE(rows2.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows2[i].projector == rows[i].projector);
        CHECK(rows2[i].k == rows[i].k);
        CHECK(rows2[i].seed == rows[i].seed);
        CHECK(rows2[i].probe_mse == rows[i].probe_mse);
        CHECK(rows2[i].total_variation == rows[i].total_variation);
        CHECK(rows2[i].window_variance == rows[i].window_variance);
        CHECK(rows2[i].cost_ratio == rows[i].cost_ratio);
    }
}
