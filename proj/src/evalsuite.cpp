#include "wico/evalsuite.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace wico {

Tensor channel_mean_map(const TokenGrid& grid) {
    Tensor map({grid.h, grid.w}, grid.data.dtype());
    for (std::size_t r = 0; r < grid.h; ++r) {
        for (std::size_t c = 0; c < grid.w; ++c) {
            double s = 0.0;
            for (std::size_t ch = 0; ch < grid.d_v; ++ch) s += grid.data.at3(r, c, ch);
            map.at2(r, c) = s / static_cast<double>(grid.d_v);
        }
    }
    map.quantize();
    return map;
}

SmoothnessReport smoothness(const TokenGrid& grid, const WindowSpec& spec) {
    const Tensor map = channel_mean_map(grid);
    SmoothnessReport rep;

    double tv = 0.0;
    std::size_t pairs = 0;
    for (std::size_t r = 0; r < grid.h; ++r) {
        for (std::size_t c = 0; c < grid.w; ++c) {
            if (c + 1 < grid.w) {
                tv += std::fabs(map.at2(r, c) - map.at2(r, c + 1));
                ++pairs;
            }
            if (r + 1 < grid.h) {
                tv += std::fabs(map.at2(r, c) - map.at2(r + 1, c));
                ++pairs;
            }
        }
    }
    rep.total_variation = pairs ? tv / static_cast<double>(pairs) : 0.0;

    double var_sum = 0.0;
    for (std::size_t i = 0; i < spec.h_out; ++i) {
        for (std::size_t j = 0; j < spec.w_out; ++j) {
            const std::size_t r0 = i * spec.s_h, c0 = j * spec.s_w;
            const double count = static_cast<double>(spec.w_h * spec.w_w);
            double mean = 0.0;
            for (std::size_t wr = 0; wr < spec.w_h; ++wr) {
                for (std::size_t wc = 0; wc < spec.w_w; ++wc) {
                    mean += map.at2(r0 + wr, c0 + wc);
                }
            }
            mean /= count;
            double var = 0.0;
            for (std::size_t wr = 0; wr < spec.w_h; ++wr) {
                for (std::size_t wc = 0; wc < spec.w_w; ++wc) {
                    const double d = map.at2(r0 + wr, c0 + wc) - mean;
                    var += d * d;
                }
            }
            var_sum += var / count;
        }
    }
    rep.window_variance = var_sum / static_cast<double>(spec.k());
    return rep;
}

namespace {

// Solves A x = b for SPD A via Cholesky, in place on copies.
std::vector<double> cholesky_solve(std::vector<double> a, std::size_t n,
                                   std::vector<double> b, std::size_t nrhs) {
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            if (i == j) {
                if (s <= 0.0) throw InputError("probe: normal matrix not positive definite");
                a[i * n + i] = std::sqrt(s);
            } else {
                a[i * n + j] = s / a[j * n + j];
            }
        }
    }
    // forward then backward substitution, column block at a time
    for (std::size_t col = 0; col < nrhs; ++col) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = b[i * nrhs + col];
            for (std::size_t k = 0; k < i; ++k) s -= a[i * n + k] * b[k * nrhs + col];
            b[i * nrhs + col] = s / a[i * n + i];
        }
        for (std::size_t ii = n; ii-- > 0;) {
            double s = b[ii * nrhs + col];
            for (std::size_t k = ii + 1; k < n; ++k) {
                s -= a[k * n + ii] * b[k * nrhs + col];
            }
            b[ii * nrhs + col] = s / a[ii * n + ii];
        }
    }
    return b;
}

}  // namespace

ProbeReport probe(const Tensor& original, const Tensor& compressed, double lambda,
                  std::uint64_t seed) {
    if (lambda <= 0.0) throw RangeError("probe: lambda must be > 0");
    if (original.rank() != 2 || compressed.rank() != 2) {
        throw DimError("probe: expected rank-2 tensors");
    }
    if (original.extent(0) != compressed.extent(0)) {
        throw DimError("probe: row counts differ (" + original.shape_str() + " vs " +
                       compressed.shape_str() +
                       "); align the original via aligned_original first");
    }
    if (!original.all_finite() || !compressed.all_finite()) {
        throw InputError("probe: non-finite input");
    }
    const std::size_t rows = original.extent(0);
    const std::size_t f = compressed.extent(1) + 1;  // + bias column
    const std::size_t t = original.extent(1);

    auto feat = [&](std::size_t i, std::size_t j) {
        return j + 1 < f ? compressed.at2(i, j) : 1.0;
    };
    std::vector<double> xtx(f * f, 0.0), xty(f * t, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t a = 0; a < f; ++a) {
            const double xa = feat(i, a);
            for (std::size_t b = 0; b <= a; ++b) xtx[a * f + b] += xa * feat(i, b);
            for (std::size_t c = 0; c < t; ++c) xty[a * t + c] += xa * original.at2(i, c);
        }
    }
    for (std::size_t a = 0; a < f; ++a) {
        for (std::size_t b = a + 1; b < f; ++b) xtx[a * f + b] = xtx[b * f + a];
        xtx[a * f + a] += lambda;
    }
    const std::vector<double> w = cholesky_solve(std::move(xtx), f, std::move(xty), t);

    double sq = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t c = 0; c < t; ++c) {
            double pred = 0.0;
            for (std::size_t a = 0; a < f; ++a) pred += feat(i, a) * w[a * t + c];
            const double d = original.at2(i, c) - pred;
            sq += d * d;
        }
    }
    ProbeReport rep;
    rep.mse = sq / static_cast<double>(rows * t);
    rep.lambda = lambda;
    rep.seed = seed;
    return rep;
}

Tensor aligned_original(const Projector& proj, const Tensor& v) {
    switch (proj.tag) {
        case ProjectorTag::Wico:
        case ProjectorTag::CAbstractor: {
            TokenGrid grid = TokenGrid::from_flat(v, proj.h, proj.w);
            return reshape(window_concat(grid, proj.spec),
                           {proj.spec.k(), proj.spec.d_t(proj.d_v)});
        }
        default: {
            const std::size_t n = v.extent(0);
            if (n % proj.k != 0) {
                throw ConfigError("aligned_original: k must divide n for 1-D grouping");
            }
            return concat_groups(v, n / proj.k);
        }
    }
}

CostReport cost_model(std::size_t l_l, std::size_t k_l, std::size_t k,
                      std::size_t n, std::size_t t_text, std::size_t d_model) {
    if (d_model < 1) throw RangeError("cost_model: d_model must be >= 1");
    if (k_l > l_l) throw RangeError("cost_model: K_l exceeds L_l");
    const double d = static_cast<double>(d_model);
    auto proj_flops = [&](double tok) { return 8.0 * tok * d * d; };
    auto attn_flops = [&](double tok) { return 4.0 * tok * tok * d; };

    CostReport rep;
    rep.schedule.reserve(l_l);
    for (std::size_t layer = 0; layer < l_l; ++layer) {
        const std::size_t tok =
            t_text + (layer + k_l >= l_l ? n : k);
        rep.schedule.push_back(tok);
        rep.projection_flops += proj_flops(static_cast<double>(tok));
        rep.attention_flops += attn_flops(static_cast<double>(tok));
    }
    rep.total = rep.projection_flops + rep.attention_flops;
    const double t_full = static_cast<double>(t_text + n);
    rep.baseline_total =
        static_cast<double>(l_l) * (proj_flops(t_full) + attn_flops(t_full));
    rep.ratio = rep.baseline_total > 0.0 ? rep.total / rep.baseline_total : 1.0;
    return rep;
}

const char* synth_kind_name(SynthKind kind) {
    switch (kind) {
        case SynthKind::Gaussian: return "gaussian";
        case SynthKind::PiecewiseConstant: return "piecewise-constant";
        case SynthKind::GradientRamp: return "gradient-ramp";
        case SynthKind::Checkerboard: return "checkerboard";
    }
    return "?";
}

SynthKind parse_synth_kind(const std::string& name) {
    for (SynthKind k : {SynthKind::Gaussian, SynthKind::PiecewiseConstant,
                        SynthKind::GradientRamp, SynthKind::Checkerboard}) {
        if (name == synth_kind_name(k)) return k;
    }
    throw ConfigError("unknown dataset kind: " + name);
}

TokenGrid synth_features(std::size_t h, std::size_t w, std::size_t d_v,
                         SynthKind kind, std::uint64_t seed) {
    if (h < 1 || w < 1 || d_v < 1) {
        throw RangeError("synth_features: extents must be >= 1");
    }
    std::mt19937_64 rng(seed);
    Tensor data({h, w, d_v});
    switch (kind) {
        case SynthKind::Gaussian: {
            std::normal_distribution<double> dist(0.0, 1.0);
            for (double& v : data.data()) v = dist(rng);
            break;
        }
        case SynthKind::PiecewiseConstant: {
            // Random values on a 4x coarser lattice, nearest-upsampled, so
            // blocks of ~4x4 cells share one value per channel.
            const std::size_t block = 4;
            const std::size_t bh = (h + block - 1) / block;
            const std::size_t bw = (w + block - 1) / block;
            std::normal_distribution<double> dist(0.0, 1.0);
            std::vector<double> coarse(bh * bw * d_v);
            for (double& v : coarse) v = dist(rng);
            for (std::size_t r = 0; r < h; ++r) {
                for (std::size_t c = 0; c < w; ++c) {
                    for (std::size_t ch = 0; ch < d_v; ++ch) {
                        data.at3(r, c, ch) =
                            coarse[((r / block) * bw + (c / block)) * d_v + ch];
                    }
                }
            }
            break;
        }
        case SynthKind::GradientRamp: {
            for (std::size_t r = 0; r < h; ++r) {
                for (std::size_t c = 0; c < w; ++c) {
                    const double vr = h > 1 ? static_cast<double>(r) / (h - 1) : 0.0;
                    const double vc = w > 1 ? static_cast<double>(c) / (w - 1) : 0.0;
                    for (std::size_t ch = 0; ch < d_v; ++ch) {
                        data.at3(r, c, ch) = vr + vc;
                    }
                }
            }
            break;
        }
        case SynthKind::Checkerboard: {
            for (std::size_t r = 0; r < h; ++r) {
                for (std::size_t c = 0; c < w; ++c) {
                    const double v = ((r + c) % 2 == 0) ? 1.0 : -1.0;
                    for (std::size_t ch = 0; ch < d_v; ++ch) data.at3(r, c, ch) = v;
                }
            }
            break;
        }
    }
    return TokenGrid::from_tensor(data);
}

namespace {

BenchRow run_combination(const BenchConfig& cfg, ProjectorTag tag, std::size_t k,
                         SynthKind dataset, std::uint64_t seed) {
    const TokenGrid grid = synth_features(cfg.h, cfg.w, cfg.d_v, dataset, seed);
    const Tensor v = grid.flat();
    const Projector proj =
        make_projector(tag, cfg.h, cfg.w, cfg.d_v, k, cfg.d_l, seed);
    const Tensor feats = proj.features(v);
    const Tensor target = aligned_original(proj, v);
    const ProbeReport pr = probe(target, feats, cfg.lambda, seed);

    const WindowSpec spec = proj.spec.h > 0
                                ? proj.spec
                                : compute_window_spec(cfg.h, cfg.w, 1, 1);
    const SmoothnessReport sm = smoothness(grid, spec);
    const CostReport cost =
        cost_model(cfg.l_l, cfg.k_l, k, cfg.h * cfg.w, cfg.t_text, cfg.d_model);

    BenchRow row;
    row.projector = projector_tag_name(tag);
    row.k = k;
    row.dataset = synth_kind_name(dataset);
    row.seed = seed;
    row.probe_mse = pr.mse;
    row.total_variation = sm.total_variation;
    row.window_variance = sm.window_variance;
    row.cost_ratio = cost.ratio;
    return row;
}

}  // namespace

std::vector<BenchRow> run_benchmark(const BenchConfig& cfg) {
    struct Combo {
        ProjectorTag tag;
        std::size_t k;
        SynthKind dataset;
        std::uint64_t seed;
    };
    std::vector<Combo> combos;
    for (ProjectorTag tag : cfg.projectors) {
        for (std::size_t k : cfg.ks) {
            for (SynthKind ds : cfg.datasets) {
                for (std::uint64_t seed : cfg.seeds) {
                    combos.push_back({tag, k, ds, seed});
                }
            }
        }
    }
    std::vector<BenchRow> rows(combos.size());
    const std::size_t workers =
        cfg.threads > 1 ? std::min<std::size_t>(cfg.threads, combos.size()) : 0;
    if (workers == 0) {
        for (std::size_t i = 0; i < combos.size(); ++i) {
            const Combo& c = combos[i];
            rows[i] = run_combination(cfg, c.tag, c.k, c.dataset, c.seed);
        }
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < workers; ++t) {
            pool.emplace_back([&, t]() {
                for (std::size_t i = t; i < combos.size(); i += workers) {
                    const Combo& c = combos[i];
                    rows[i] = run_combination(cfg, c.tag, c.k, c.dataset, c.seed);
                }
            });
        }
        for (std::thread& th : pool) th.join();
    }
    // Canonical order: projector, k, dataset, seed.
    std::stable_sort(rows.begin(), rows.end(), [](const BenchRow& a, const BenchRow& b) {
        if (a.projector != b.projector) return a.projector < b.projector;
        if (a.k != b.k) return a.k < b.k;
        if (a.dataset != b.dataset) return a.dataset < b.dataset;
        return a.seed < b.seed;
    });
    return rows;
}

}  // namespace wico
