#include "starseg/pipeline.hpp"

#include <filesystem>
#include <stdexcept>

namespace starseg {

std::vector<Sample> load_dataset(const std::string& manifest_path,
                                 const std::string& split) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::path(manifest_path).parent_path();
    std::vector<Sample> samples;
    for (const auto& e : load_manifest(manifest_path)) {
        if (!split.empty() && e.split != split) continue;
        Sample s;
        s.stem = fs::path(e.image).stem().string();
        s.image = read_pgm((dir / e.image).string());
        s.mask = read_pgm((dir / e.mask).string());
        s.truth = load_contour((dir / e.contour).string());
        samples.push_back(std::move(s));
    }
    return samples;
}

std::vector<LevelConfig> level_configs(const PipelineConfig& cfg) {
    std::vector<LevelConfig> levels;
    for (int s : cfg.scales) levels.push_back({s, cfg.n_angle, cfg.n_radius});
    return levels;
}

TrainedPipeline train_pipeline(const PipelineConfig& cfg,
                               const std::vector<Sample>& train) {
    cfg.validate();
    if (train.empty())
        throw std::invalid_argument("train_pipeline: empty training set");

    std::vector<std::pair<GrayImage, GrayImage>> pairs;
    pairs.reserve(train.size());
    for (const auto& s : train) pairs.emplace_back(s.image, s.mask);

    CascadeTrainConfig tc;
    tc.hidden = cfg.hidden;
    tc.epochs = cfg.epochs;
    tc.opt = {cfg.learning_rate, cfg.rms_decay, cfg.rms_epsilon};
    tc.clip_norm = cfg.clip_norm;
    tc.init_std = cfg.init_std;
    tc.seed = cfg.seed;
    tc.views = {cfg.resolved_viewpoints()};
    tc.uniform_init_value = cfg.uniform_init_value;

    CascadeTrainResult ct = train_cascade(level_configs(cfg), pairs, tc);

    std::vector<Contour> landmarks(train.size());
#pragma omp parallel for
    for (int i = 0; i < int(train.size()); ++i)
        landmarks[i] = sample_landmarks(train[i].mask);

    TrainedPipeline result;
    result.cascade = std::move(ct.model);
    result.level_losses = std::move(ct.level_losses);
    result.shape = build_shape_model(landmarks, cfg.variance_kept);
    return result;
}

InferenceOutput infer_image(const CascadeModel& cascade, const ShapeModel& shape,
                            const GrayImage& img, const PipelineConfig& cfg) {
    InferenceOutput out;
    out.maps = run_cascade(cascade, img, {cfg.resolved_viewpoints()});
    FitOptions fo;
    fo.iters = cfg.asm_iters;
    fo.profile_len = cfg.profile_len;
    out.fit = fit_asm(shape, out.maps.final, nullptr, fo);
    return out;
}

GrayImage threshold_map(const PredictionMap& map, double level) {
    GrayImage mask(map.map.width, map.map.height, 0.0);
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            if (map.map.at(x, y) >= level && map.in_annulus(x, y))
                mask.at(x, y) = 1.0;
    return mask;
}

EvalSummary evaluate_pipeline(const CascadeModel& cascade, const ShapeModel& shape,
                              const std::vector<Sample>& test,
                              const PipelineConfig& cfg) {
    if (test.empty())
        throw std::invalid_argument("evaluate_pipeline: empty test set");

    const int n = int(test.size());
    const int n_levels = int(cascade.levels.size());
    std::vector<MetricReport> final_reports(n);
    std::vector<std::vector<MetricReport>> level_reports(
        n_levels, std::vector<MetricReport>(n));

#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) {
        InferenceOutput out = infer_image(cascade, shape, test[i].image, cfg);
        GrayImage pred_mask =
            contour_to_mask(out.fit.contour, test[i].mask.width, test[i].mask.height);
        final_reports[i] = evaluate_pair(pred_mask, test[i].mask);
        for (int k = 0; k < n_levels; ++k)
            level_reports[k][i] =
                evaluate_pair(threshold_map(out.maps.per_level[k]), test[i].mask);
    }

    EvalSummary summary;
    summary.per_image = std::move(final_reports);
    summary.final_mean = aggregate(summary.per_image);
    for (int k = 0; k < n_levels; ++k)
        summary.level_means.push_back(aggregate(level_reports[k]));
    return summary;
}

}  // namespace starseg
