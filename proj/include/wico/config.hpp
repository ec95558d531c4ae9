#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wico/baselines.hpp"
#include "wico/decompose.hpp"
#include "wico/evalsuite.hpp"

namespace wico {

// Schema-validated run configuration (JSON document with fixed sections;
// unknown keys are rejected).
struct RunConfig {
    struct Grid {
        std::size_t h = 8, w = 8, d_v = 4;
    } grid;

    struct ProjectorCfg {
        ProjectorTag kind = ProjectorTag::Wico;
        std::size_t k = 0;  // derived from h_out*w_out when those are given
        std::optional<std::size_t> h_out, w_out;
        std::size_t d_l = 16;
        std::size_t k_v = 0;
        std::uint64_t seed = 0;
        bool linear_mode = false;
    } projector;

    struct DecomposeCfg {
        DecomposeStrategy strategy = DecomposeStrategy::TokenInterp;
        std::size_t l_l = 32;
        std::size_t k_l = 2;
        std::size_t n = 0;
    } decompose;

    struct EvalCfg {
        std::vector<SynthKind> datasets{SynthKind::Gaussian};
        double lambda = 1e-6;
        std::vector<std::uint64_t> seeds{0};
        std::vector<std::size_t> ks;
        std::vector<ProjectorTag> projectors;
        std::size_t l_l = 32, k_l = 2, t_text = 50, d_model = 4096;
    } eval;

    struct Output {
        std::string dir = ".";
    } output;

    static RunConfig parse(const std::string& json_text);
    static RunConfig load(const std::string& path);
};

}  // namespace wico
