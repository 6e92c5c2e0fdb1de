#pragma once

#include <string>
#include <vector>

#include "starseg/cascade.hpp"
#include "starseg/config.hpp"
#include "starseg/metrics.hpp"
#include "starseg/shape_model.hpp"
#include "starseg/synthdata.hpp"

namespace starseg {

struct Sample {
    std::string stem;  // file stem, e.g. "test_0003"
    GrayImage image;
    GrayImage mask;
    Contour truth;
};

std::vector<Sample> load_dataset(const std::string& manifest_path,
                                 const std::string& split);

std::vector<LevelConfig> level_configs(const PipelineConfig& cfg);

struct TrainedPipeline {
    CascadeModel cascade;
    ShapeModel shape;
    std::vector<std::vector<LossReport>> level_losses;
};

// Trains the cascade level by level and builds the landmark shape model
// from the training masks.
TrainedPipeline train_pipeline(const PipelineConfig& cfg,
                               const std::vector<Sample>& train);

struct InferenceOutput {
    CascadeResult maps;
    FitResult fit;
};

InferenceOutput infer_image(const CascadeModel& cascade, const ShapeModel& shape,
                            const GrayImage& img, const PipelineConfig& cfg);

// Final-contour metrics plus per-level thresholded-map metrics for a test
// split; rows are per image, `level_means[k]` aggregates level k.
struct EvalSummary {
    std::vector<MetricReport> per_image;  // final contour vs truth mask
    MetricReport final_mean;
    std::vector<MetricReport> level_means;  // thresholded maps vs truth masks
};

EvalSummary evaluate_pipeline(const CascadeModel& cascade, const ShapeModel& shape,
                              const std::vector<Sample>& test,
                              const PipelineConfig& cfg);

GrayImage threshold_map(const PredictionMap& map, double level = 0.5);

}  // namespace starseg
