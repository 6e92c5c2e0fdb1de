#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "starseg/synthdata.hpp"

namespace starseg {

// All pipeline knobs in one place. Parsed from line-oriented `key = value`
// files (with `include <path>` support); every random choice flows from
// `seed`.
struct PipelineConfig {
    // polar serialization / cascade levels
    std::vector<int> scales{16, 10, 8};
    int n_angle = 80;
    int n_radius = 48;
    std::vector<double> viewpoints{};  // empty selects thirds of the circle

    // network / optimizer
    int hidden = 64;
    double learning_rate = 0.001;
    double rms_decay = 0.9;
    double rms_epsilon = 1e-8;
    double clip_norm = 5.0;
    double init_std = 0.01;
    std::vector<int> epochs{40, 25, 25};  // per level
    double uniform_init_value = 0.5;

    // synthetic data
    int n_train = 300;
    int n_test = 60;
    int width = 96;
    int height = 96;
    double arc_span_max_deg = 60.0;

    // ASM
    double variance_kept = 0.98;
    int asm_iters = 30;
    int profile_len = 8;

    std::uint64_t seed = 1;
    int jobs = 0;  // 0 = all available cores

    std::vector<double> resolved_viewpoints() const;
    DatasetConfig dataset_config() const;

    // Throws invalid-argument before any compute starts.
    void validate() const;
};

PipelineConfig load_config(const std::string& path);

// Applies one `key = value` assignment; unknown keys are rejected.
void apply_config_entry(PipelineConfig& cfg, const std::string& key,
                        const std::string& value);

std::string dump_config(const PipelineConfig& cfg);

}  // namespace starseg
