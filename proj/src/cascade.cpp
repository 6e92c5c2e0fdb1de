#include "starseg/cascade.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "starseg/errors.hpp"
#include "starseg/geometry.hpp"

namespace starseg {

namespace {

PolarConfig polar_config(const LevelConfig& lc) {
    PolarConfig pc;
    pc.n_angle = lc.n_angle;
    pc.n_radius = lc.n_radius;
    return pc;
}

// Label sequence: the mask serialized with the same geometry as the input.
Matrix label_sequence(const GrayImage& mask, const LevelConfig& lc,
                      double offset) {
    const double cx = (mask.width - 1) / 2.0;
    const double cy = (mask.height - 1) / 2.0;
    const double r_max = default_r_max(mask);
    PolarImage polar = serialize(mask, cx, cy, lc.n_angle, lc.n_radius, r_max, offset);
    BandSequence bands = partition(polar, lc.scale);
    const int band_len = lc.scale * lc.n_radius;
    Matrix y(bands.length(), band_len);
    for (int t = 0; t < bands.length(); ++t)
        std::copy(bands.bands[t].begin(), bands.bands[t].end(), y.row(t));
    return y;
}

Matrix input_sequence(const GrayImage& img, const PredictionMap& ctx,
                      const LevelConfig& lc, double offset) {
    const double cx = (img.width - 1) / 2.0;
    const double cy = (img.height - 1) / 2.0;
    const double r_max = default_r_max(img);
    PolarImage pi = serialize(img, cx, cy, lc.n_angle, lc.n_radius, r_max, offset);
    PolarImage pc = serialize(ctx.map, cx, cy, lc.n_angle, lc.n_radius, r_max, offset);
    BandSequence bi = partition(pi, lc.scale);
    BandSequence bc = partition(pc, lc.scale);
    const int band_len = lc.scale * lc.n_radius;
    Matrix x(bi.length(), 2 * band_len);
    for (int t = 0; t < bi.length(); ++t) {
        std::copy(bi.bands[t].begin(), bi.bands[t].end(), x.row(t));
        std::copy(bc.bands[t].begin(), bc.bands[t].end(), x.row(t) + band_len);
    }
    return x;
}

PredictionMap fused_level_map(const BiLstmModel& model, const GrayImage& img,
                              const PredictionMap& ctx, const LevelConfig& lc,
                              const ViewpointSet& views) {
    std::vector<PredictionMap> view_maps(views.offsets.size());
    const PolarConfig pc = polar_config(lc);
#pragma omp parallel for
    for (int v = 0; v < int(views.offsets.size()); ++v)
        view_maps[v] = predict_view(model, img, ctx, views.offsets[v], lc.scale, pc);
    return fuse_views(view_maps);
}

}  // namespace

void validate_cascade(const CascadeModel& cascade) {
    if (cascade.levels.empty())
        throw std::invalid_argument("cascade: no levels");
    for (const auto& level : cascade.levels) {
        const auto& lc = level.cfg;
        if (lc.scale < 1 || lc.n_angle < 4 || lc.n_radius < 4 ||
            lc.n_angle % lc.scale != 0)
            throw std::invalid_argument("cascade: scale must divide n_angle");
        const int band_len = lc.scale * lc.n_radius;
        if (level.model.input_dim != 2 * band_len ||
            level.model.output_dim != band_len)
            throw std::invalid_argument("cascade: model dims do not match level config");
    }
}

CascadeResult run_cascade(const CascadeModel& cascade, const GrayImage& img,
                          const ViewpointSet& views) {
    validate_cascade(cascade);
    PolarConfig pc0 = polar_config(cascade.levels.front().cfg);
    PredictionMap ctx =
        uniform_map(img.width, img.height, cascade.uniform_init_value, pc0);

    CascadeResult result;
    for (const auto& level : cascade.levels) {
        ctx = fused_level_map(level.model, img, ctx, level.cfg, views);
        result.per_level.push_back(ctx);
    }
    result.final = result.per_level.back();
    return result;
}

CascadeTrainResult train_cascade(
    const std::vector<LevelConfig>& configs,
    const std::vector<std::pair<GrayImage, GrayImage>>& dataset,
    const CascadeTrainConfig& cfg) {
    if (dataset.empty())
        throw std::invalid_argument("train_cascade: empty dataset");
    if (configs.empty())
        throw std::invalid_argument("train_cascade: no level configs");
    if (cfg.epochs.size() != configs.size())
        throw std::invalid_argument("train_cascade: epochs per level mismatch");
    if (cfg.views.offsets.empty())
        throw std::invalid_argument("train_cascade: no viewpoints");

    const int n = int(dataset.size());
    PolarConfig pc0 = polar_config(configs.front());
    std::vector<PredictionMap> contexts(n);
    for (int i = 0; i < n; ++i)
        contexts[i] = uniform_map(dataset[i].first.width, dataset[i].first.height,
                                  cfg.uniform_init_value, pc0);

    CascadeTrainResult result;
    result.model.uniform_init_value = cfg.uniform_init_value;

    for (std::size_t k = 0; k < configs.size(); ++k) {
        const LevelConfig& lc = configs[k];
        if (lc.n_angle % lc.scale != 0)
            throw std::invalid_argument("train_cascade: scale must divide n_angle");
        const int band_len = lc.scale * lc.n_radius;

        std::vector<std::pair<Matrix, Matrix>> sequences;
        sequences.reserve(std::size_t(n) * cfg.views.offsets.size());
        for (int i = 0; i < n; ++i)
            for (double offset : cfg.views.offsets)
                sequences.emplace_back(
                    input_sequence(dataset[i].first, contexts[i], lc, offset),
                    label_sequence(dataset[i].second, lc, offset));

        BiLstmModel model = init_gaussian(2 * band_len, cfg.hidden, band_len,
                                          cfg.init_std,
                                          cfg.seed + 1000 * std::uint64_t(k));
        TrainConfig tc;
        tc.epochs = cfg.epochs[k];
        tc.opt = cfg.opt;
        tc.clip_norm = cfg.clip_norm;
        tc.seed = cfg.seed + 1000 * std::uint64_t(k) + 1;
        result.level_losses.push_back(train_bilstm(model, sequences, tc));
        result.model.levels.push_back({std::move(model), lc});

        if (k + 1 < configs.size()) {
            const auto& level = result.model.levels.back();
#pragma omp parallel for
            for (int i = 0; i < n; ++i)
                contexts[i] = fused_level_map(level.model, dataset[i].first,
                                              contexts[i], lc, cfg.views);
        }
    }
    return result;
}

void save_cascade(const CascadeModel& cascade, const std::string& manifest_path) {
    namespace fs = std::filesystem;
    const fs::path manifest(manifest_path);
    const fs::path dir = manifest.parent_path();
    const std::string stem = manifest.stem().string();

    nlohmann::json j;
    j["format"] = "starseg-cascade";
    j["version"] = 1;
    j["uniform_init_value"] = cascade.uniform_init_value;
    j["levels"] = nlohmann::json::array();
    for (std::size_t k = 0; k < cascade.levels.size(); ++k) {
        const auto& level = cascade.levels[k];
        const std::string model_file = stem + "_level" + std::to_string(k) + ".rnn";
        save_bilstm(level.model, (dir / model_file).string());
        j["levels"].push_back({{"scale", level.cfg.scale},
                               {"n_angle", level.cfg.n_angle},
                               {"n_radius", level.cfg.n_radius},
                               {"model", model_file}});
    }
    std::ofstream out(manifest_path);
    if (!out) throw io_error("save_cascade: cannot write " + manifest_path);
    out << j.dump(2) << "\n";
}

CascadeModel load_cascade(const std::string& manifest_path) {
    namespace fs = std::filesystem;
    std::ifstream in(manifest_path);
    if (!in) throw io_error("load_cascade: cannot open " + manifest_path);
    nlohmann::json j;
    in >> j;
    if (j.value("format", "") != "starseg-cascade")
        throw io_error("load_cascade: not a cascade manifest: " + manifest_path);

    const fs::path dir = fs::path(manifest_path).parent_path();
    CascadeModel cascade;
    cascade.uniform_init_value = j.at("uniform_init_value").get<double>();
    for (const auto& jl : j.at("levels")) {
        CascadeLevel level;
        level.cfg.scale = jl.at("scale").get<int>();
        level.cfg.n_angle = jl.at("n_angle").get<int>();
        level.cfg.n_radius = jl.at("n_radius").get<int>();
        level.model = load_bilstm((dir / jl.at("model").get<std::string>()).string());
        cascade.levels.push_back(std::move(level));
    }
    validate_cascade(cascade);
    return cascade;
}

}  // namespace starseg
