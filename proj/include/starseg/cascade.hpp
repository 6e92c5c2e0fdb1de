#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "starseg/fusion.hpp"
#include "starseg/image.hpp"
#include "starseg/nncore.hpp"

namespace starseg {

struct LevelConfig {
    int scale = 0;  // polar rows per band
    int n_angle = 0;
    int n_radius = 0;
};

struct CascadeLevel {
    BiLstmModel model;
    LevelConfig cfg;
};

// Ordered coarse-to-fine refinement levels; each level receives the fused
// prediction map of the previous one as context.
struct CascadeModel {
    std::vector<CascadeLevel> levels;
    double uniform_init_value = 0.5;
};

void validate_cascade(const CascadeModel& cascade);

struct CascadeResult {
    PredictionMap final;
    std::vector<PredictionMap> per_level;
};

CascadeResult run_cascade(const CascadeModel& cascade, const GrayImage& img,
                          const ViewpointSet& views);

struct CascadeTrainConfig {
    int hidden = 64;
    std::vector<int> epochs;  // one entry per level
    RmspropConfig opt;
    double clip_norm = 5.0;
    double init_std = 0.01;
    std::uint64_t seed = 0;
    ViewpointSet views = ViewpointSet::thirds();
    double uniform_init_value = 0.5;
};

struct CascadeTrainResult {
    CascadeModel model;
    std::vector<std::vector<LossReport>> level_losses;
};

// Levels are trained strictly in order; level-k context maps are computed
// once from the already-frozen earlier levels. Dataset pairs are
// (image, filled label mask).
CascadeTrainResult train_cascade(
    const std::vector<LevelConfig>& configs,
    const std::vector<std::pair<GrayImage, GrayImage>>& dataset,
    const CascadeTrainConfig& cfg);

// Manifest (JSON) plus one model file per level, written next to it.
void save_cascade(const CascadeModel& cascade, const std::string& manifest_path);
CascadeModel load_cascade(const std::string& manifest_path);

}  // namespace starseg
