#include "wico/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace wico {

const char* projector_tag_name(ProjectorTag tag) {
    switch (tag) {
        case ProjectorTag::Wico: return "wico";
        case ProjectorTag::Concat1D: return "concat1d";
        case ProjectorTag::TokenFilter: return "token_filter";
        case ProjectorTag::Perceiver: return "perceiver";
        case ProjectorTag::TokenMixer: return "token_mixer";
        case ProjectorTag::CAbstractor: return "c_abstractor";
    }
    return "?";
}

ProjectorTag parse_projector_tag(const std::string& name) {
    for (ProjectorTag t :
         {ProjectorTag::Wico, ProjectorTag::Concat1D, ProjectorTag::TokenFilter,
          ProjectorTag::Perceiver, ProjectorTag::TokenMixer,
          ProjectorTag::CAbstractor}) {
        if (name == projector_tag_name(t)) return t;
    }
    throw ConfigError("unknown projector tag: " + name);
}

Tensor concat_groups(const Tensor& v, std::size_t group) {
    if (v.rank() != 2) throw DimError("concat_1d: expected [n x d_v] tokens");
    const std::size_t n = v.extent(0), d = v.extent(1);
    if (group < 1 || n % group != 0) {
        throw DimError("concat_1d: group size " + std::to_string(group) +
                       " does not divide n=" + std::to_string(n));
    }
    return reshape(v, {n / group, group * d});
}

std::vector<std::size_t> token_filter_indices(const Tensor& v, std::size_t k) {
    if (v.rank() != 2) throw DimError("token_filter: expected [n x d_v] tokens");
    const std::size_t n = v.extent(0), d = v.extent(1);
    if (k < 1 || k > n) {
        throw RangeError("token_filter: need 1 <= k <= n, got k=" + std::to_string(k));
    }
    std::vector<double> norms(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += v.at2(i, j) * v.at2(i, j);
        norms[i] = std::sqrt(s);
    }
    std::vector<double> score(n, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            double sim = 0.0;
            if (norms[i] > 0.0 && norms[j] > 0.0) {
                double dot = 0.0;
                for (std::size_t c = 0; c < d; ++c) dot += v.at2(i, c) * v.at2(j, c);
                sim = dot / (norms[i] * norms[j]);
            }
            score[i] = std::max(score[i], sim);
        }
    }
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (score[a] != score[b]) return score[a] < score[b];
        return a < b;
    });
    std::vector<std::size_t> keep(order.begin(), order.begin() + k);
    std::sort(keep.begin(), keep.end());
    return keep;
}

Tensor token_filter(const Tensor& v, std::size_t k) {
    const std::vector<std::size_t> keep = token_filter_indices(v, k);
    const std::size_t d = v.extent(1);
    std::vector<std::size_t> map;
    map.reserve(k * d);
    for (std::size_t i : keep) {
        for (std::size_t c = 0; c < d; ++c) map.push_back(i * d + c);
    }
    return gather(v, map, {k, d});
}

PerceiverParams PerceiverParams::init(std::size_t k, std::size_t d_v,
                                      std::mt19937_64& rng, DType dtype) {
    const double bound = std::sqrt(6.0 / static_cast<double>(2 * d_v));
    PerceiverParams p;
    p.queries = Tensor::uniform({k, d_v}, bound, rng, dtype);
    p.w_q = Tensor::uniform({d_v, d_v}, bound, rng, dtype);
    p.w_k = Tensor::uniform({d_v, d_v}, bound, rng, dtype);
    p.w_v = Tensor::uniform({d_v, d_v}, bound, rng, dtype);
    return p;
}

NodeId build_perceiver(Graph& g, NodeId v, NodeId queries, NodeId w_q, NodeId w_k,
                       NodeId w_v) {
    const std::size_t d = g.value(v).extent(1);
    NodeId q = g.matmul(queries, w_q);
    NodeId keys = g.matmul(v, w_k);
    NodeId vals = g.matmul(v, w_v);
    NodeId scores = g.scale(g.matmul(q, g.transpose2d(keys)),
                            1.0 / std::sqrt(static_cast<double>(d)));
    return g.matmul(g.softmax_rows(scores), vals);
}

Tensor perceiver_attend(const Tensor& v, const PerceiverParams& p) {
    if (v.rank() != 2 || v.extent(1) != p.queries.extent(1)) {
        throw DimError("perceiver: tokens " + v.shape_str() +
                       " do not match query dim " +
                       std::to_string(p.queries.extent(1)));
    }
    Graph g;
    NodeId out = build_perceiver(g, g.input(v), g.input(p.queries), g.input(p.w_q),
                                 g.input(p.w_k), g.input(p.w_v));
    return g.value(out);
}

Tensor token_mix(const Tensor& v, const Tensor& mix) {
    if (v.rank() != 2 || mix.rank() != 2 || mix.extent(0) != v.extent(0)) {
        throw DimError("token_mixer: mix " + mix.shape_str() +
                       " incompatible with tokens " + v.shape_str());
    }
    return matmul(transpose2d(mix), v);
}

std::pair<std::size_t, std::size_t> adaptive_bin(std::size_t i, std::size_t in,
                                                 std::size_t out) {
    const std::size_t lo = i * in / out;
    const std::size_t hi = ((i + 1) * in + out - 1) / out;  // ceil
    return {lo, hi};
}

Tensor adaptive_avg_pool(const TokenGrid& grid, std::size_t h_out, std::size_t w_out) {
    if (h_out < 1 || h_out > grid.h || w_out < 1 || w_out > grid.w) {
        throw RangeError("adaptive_avg_pool: output extents out of range");
    }
    Tensor out({h_out, w_out, grid.d_v}, grid.data.dtype());
    for (std::size_t i = 0; i < h_out; ++i) {
        const auto [r0, r1] = adaptive_bin(i, grid.h, h_out);
        for (std::size_t j = 0; j < w_out; ++j) {
            const auto [c0, c1] = adaptive_bin(j, grid.w, w_out);
            const double count = static_cast<double>((r1 - r0) * (c1 - c0));
            for (std::size_t ch = 0; ch < grid.d_v; ++ch) {
                double s = 0.0;
                for (std::size_t r = r0; r < r1; ++r) {
                    for (std::size_t c = c0; c < c1; ++c) {
                        s += grid.data.at3(r, c, ch);
                    }
                }
                out.at3(i, j, ch) = s / count;
            }
        }
    }
    out.quantize();
    return out;
}

CAbstractorParams CAbstractorParams::init(std::size_t d_v, std::mt19937_64& rng,
                                          DType dtype) {
    const double bound = std::sqrt(6.0 / static_cast<double>(2 * d_v));
    CAbstractorParams p;
    p.pre = Tensor::uniform({d_v, d_v}, bound, rng, dtype);
    p.post = Tensor::uniform({d_v, d_v}, bound, rng, dtype);
    return p;
}

Tensor c_abstractor_features(const TokenGrid& grid, std::size_t h_out,
                             std::size_t w_out, const CAbstractorParams& p) {
    Tensor pre = matmul(grid.flat(), p.pre);
    TokenGrid pre_grid = TokenGrid::from_flat(pre, grid.h, grid.w);
    Tensor pooled = adaptive_avg_pool(pre_grid, h_out, w_out);
    Tensor flat = reshape(pooled, {h_out * w_out, grid.d_v});
    return matmul(flat, p.post);
}

Tensor Projector::features(const Tensor& v) const {
    if (v.rank() != 2 || v.extent(0) != h * w || v.extent(1) != d_v) {
        throw DimError("projector: tokens " + v.shape_str() + " do not match " +
                       std::to_string(h) + "x" + std::to_string(w) +
                       " grid of d_v=" + std::to_string(d_v));
    }
    switch (tag) {
        case ProjectorTag::Wico: {
            Tensor adjusted = adjust_tokens(v, blocks);
            TokenGrid grid = TokenGrid::from_flat(adjusted, h, w);
            return reshape(window_concat(grid, spec), {k, spec.d_t(d_v)});
        }
        case ProjectorTag::Concat1D:
            return concat_groups(v, group);
        case ProjectorTag::TokenFilter:
            return token_filter(v, k);
        case ProjectorTag::Perceiver:
            return perceiver_attend(v, perceiver);
        case ProjectorTag::TokenMixer:
            return token_mix(v, mix);
        case ProjectorTag::CAbstractor:
            return c_abstractor_features(TokenGrid::from_flat(v, h, w), spec.h_out,
                                         spec.w_out, cabs);
    }
    throw ConfigError("projector: unknown tag");
}

Tensor Projector::apply(const Tensor& v) const { return project(features(v), mlp); }

namespace {

// Picks output extents h'*w' == k with the closest aspect ratio to the grid.
std::pair<std::size_t, std::size_t> spatial_split(std::size_t h, std::size_t w,
                                                  std::size_t k) {
    std::pair<std::size_t, std::size_t> best{0, 0};
    double best_err = std::numeric_limits<double>::infinity();
    for (std::size_t d = 1; d <= k; ++d) {
        if (k % d != 0) continue;
        const std::size_t other = k / d;
        if (d > h || other > w) continue;
        const double err = std::fabs(static_cast<double>(d) * w -
                                     static_cast<double>(other) * h);
        if (err < best_err) {
            best_err = err;
            best = {d, other};
        }
    }
    if (best.first == 0) {
        throw ConfigError("k=" + std::to_string(k) +
                          " cannot be arranged as an output grid within " +
                          std::to_string(h) + "x" + std::to_string(w));
    }
    return best;
}

}  // namespace

Projector make_projector(ProjectorTag tag, std::size_t h, std::size_t w,
                         std::size_t d_v, std::size_t k, std::size_t d_l,
                         std::uint64_t seed, std::size_t k_v,
                         std::optional<std::pair<std::size_t, std::size_t>> out_grid) {
    const std::size_t n = h * w;
    if (k < 1 || k > n) throw ConfigError("projector: need 1 <= k <= n");
    if (out_grid && out_grid->first * out_grid->second != k) {
        throw ConfigError("projector: h_out*w_out must equal k");
    }
    auto output_extents = [&]() {
        return out_grid ? *out_grid : spatial_split(h, w, k);
    };
    Projector p;
    p.tag = tag;
    p.h = h;
    p.w = w;
    p.d_v = d_v;
    p.k = k;
    p.d_l = d_l;
    std::mt19937_64 rng(seed);
    std::size_t d_feat = d_v;
    switch (tag) {
        case ProjectorTag::Wico: {
            const auto [h_out, w_out] = output_extents();
            p.spec = compute_window_spec(h, w, h_out, w_out);
            for (std::size_t i = 0; i < k_v; ++i) {
                p.blocks.push_back(AttentionBlockParams::init(
                    d_v, d_v % 2 == 0 ? 2 : 1, rng));
            }
            d_feat = p.spec.d_t(d_v);
            break;
        }
        case ProjectorTag::Concat1D:
            if (n % k != 0) {
                throw ConfigError("concat1d: k=" + std::to_string(k) +
                                  " does not divide n=" + std::to_string(n));
            }
            p.group = n / k;
            d_feat = p.group * d_v;
            break;
        case ProjectorTag::TokenFilter:
            break;
        case ProjectorTag::Perceiver:
            p.perceiver = PerceiverParams::init(k, d_v, rng);
            break;
        case ProjectorTag::TokenMixer:
            p.mix = Tensor::uniform({n, k}, 1.0 / std::sqrt(static_cast<double>(n)),
                                    rng);
            break;
        case ProjectorTag::CAbstractor: {
            const auto [h_out, w_out] = output_extents();
            p.spec = compute_window_spec(h, w, h_out, w_out);
            p.cabs = CAbstractorParams::init(d_v, rng);
            break;
        }
    }
    p.mlp = MlpParams::init(d_feat, d_l, d_l, rng);
    return p;
}

}  // namespace wico
