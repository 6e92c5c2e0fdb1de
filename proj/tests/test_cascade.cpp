#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "starseg/cascade.hpp"

using namespace starseg;

namespace {

GrayImage disk(int size, double radius, double inside, double outside) {
    GrayImage img(size, size, outside);
    const double c = (size - 1) / 2.0;
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            if (std::hypot(x - c, y - c) <= radius) img.at(x, y) = inside;
    return img;
}

std::vector<std::pair<GrayImage, GrayImage>> tiny_dataset() {
    std::vector<std::pair<GrayImage, GrayImage>> data;
    for (double r : {10.0, 13.0, 16.0})
        data.emplace_back(disk(48, r, 0.8, 0.2), disk(48, r, 1.0, 0.0));
    return data;
}

CascadeTrainConfig tiny_config(int levels, std::uint64_t seed) {
    CascadeTrainConfig cfg;
    cfg.hidden = 4;
    cfg.epochs.assign(levels, 2);
    cfg.opt = {0.001, 0.9, 1e-8};
    cfg.seed = seed;
    cfg.views.offsets = {0.0};
    return cfg;
}

const std::vector<LevelConfig> kTwoLevels = {{8, 16, 8}, {4, 16, 8}};

bool models_equal(const BiLstmModel& a, const BiLstmModel& b) {
    auto pa = param_blocks(a);
    auto pb = param_blocks(b);
    for (std::size_t k = 0; k < pa.size(); ++k)
        if (*pa[k].second != *pb[k].second) return false;
    return true;
}

}  // namespace

TEST_CASE("validate_cascade rejects empty and malformed models") {
    CascadeModel empty;
    CHECK_THROWS_AS(validate_cascade(empty), std::invalid_argument);

    CascadeModel bad;
    CascadeLevel lvl;
    lvl.cfg = {8, 16, 8};
    lvl.model = init_gaussian(10, 4, 10, 0.01, 1);  // wrong dims for the config
    bad.levels.push_back(lvl);
    CHECK_THROWS_AS(validate_cascade(bad), std::invalid_argument);
}

TEST_CASE("zero-model single-level cascade yields an all-zero final map") {
    CascadeModel cascade;
    CascadeLevel lvl;
    lvl.cfg = {8, 16, 8};
    BiLstmModel z;
    z.input_dim = 2 * 8 * 8;
    z.hidden = 4;
    z.output_dim = 8 * 8;
    lvl.model = zeros_like(z);
    cascade.levels.push_back(lvl);

    GrayImage img = disk(48, 12.0, 0.8, 0.2);
    ViewpointSet views;
    views.offsets = {0.0};
    CascadeResult res = run_cascade(cascade, img, views);
    REQUIRE(res.per_level.size() == 1);
    for (double v : res.final.map.data) CHECK(v == 0.0);
    CHECK(res.final.map.data == res.per_level[0].map.data);
}

TEST_CASE("per-level maps are reported for every level in order") {
    auto data = tiny_dataset();
    CascadeTrainResult trained = train_cascade(kTwoLevels, data, tiny_config(2, 3));
    REQUIRE(trained.model.levels.size() == 2);
    CHECK(trained.model.levels[0].cfg.scale == 8);
    CHECK(trained.model.levels[1].cfg.scale == 4);
    CHECK(trained.level_losses.size() == 2);
    CHECK(trained.level_losses[0].size() == 2);

    ViewpointSet views;
    views.offsets = {0.0};
    CascadeResult res = run_cascade(trained.model, data[0].first, views);
    CHECK(res.per_level.size() == 2);
    CHECK(res.final.map.data == res.per_level.back().map.data);
    for (double v : res.final.map.data) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("training is deterministic for a fixed seed") {
    auto data = tiny_dataset();
    CascadeTrainResult a = train_cascade(kTwoLevels, data, tiny_config(2, 7));
    CascadeTrainResult b = train_cascade(kTwoLevels, data, tiny_config(2, 7));
    for (std::size_t k = 0; k < a.model.levels.size(); ++k)
        CHECK(models_equal(a.model.levels[k].model, b.model.levels[k].model));
    for (std::size_t k = 0; k < a.level_losses.size(); ++k)
        for (std::size_t e = 0; e < a.level_losses[k].size(); ++e)
            CHECK(a.level_losses[k][e].mean_loss == b.level_losses[k][e].mean_loss);

    CascadeTrainResult c = train_cascade(kTwoLevels, data, tiny_config(2, 8));
    CHECK_FALSE(models_equal(a.model.levels[0].model, c.model.levels[0].model));
}

TEST_CASE("earlier levels are frozen: level 0 is independent of later levels") {
    auto data = tiny_dataset();
    CascadeTrainResult two = train_cascade(kTwoLevels, data, tiny_config(2, 5));
    CascadeTrainResult one =
        train_cascade({kTwoLevels[0]}, data, tiny_config(1, 5));
    CHECK(models_equal(two.model.levels[0].model, one.model.levels[0].model));
}

TEST_CASE("configuration errors are rejected") {
    auto data = tiny_dataset();
    CascadeTrainConfig cfg = tiny_config(2, 1);
    cfg.epochs = {2};  // one entry for two levels
    CHECK_THROWS_AS(train_cascade(kTwoLevels, data, cfg), std::invalid_argument);

    CHECK_THROWS_AS(train_cascade({{5, 16, 8}}, data, tiny_config(1, 1)),
                    std::invalid_argument);  // 5 does not divide 16
    CHECK_THROWS_AS(train_cascade(kTwoLevels, {}, tiny_config(2, 1)),
                    std::invalid_argument);
}

TEST_CASE("cascade manifests round-trip through save and load") {
    auto data = tiny_dataset();
    CascadeTrainResult trained = train_cascade(kTwoLevels, data, tiny_config(2, 9));

    const std::string manifest = "test_cascade_model.json";
    save_cascade(trained.model, manifest);
    CascadeModel back = load_cascade(manifest);
    REQUIRE(back.levels.size() == 2);
    CHECK(back.uniform_init_value == trained.model.uniform_init_value);
    for (std::size_t k = 0; k < back.levels.size(); ++k) {
        CHECK(back.levels[k].cfg.scale == trained.model.levels[k].cfg.scale);
        CHECK(back.levels[k].cfg.n_angle == trained.model.levels[k].cfg.n_angle);
        CHECK(back.levels[k].cfg.n_radius == trained.model.levels[k].cfg.n_radius);
        CHECK(models_equal(back.levels[k].model, trained.model.levels[k].model));
    }

    // inference through the reloaded model is bit-identical
    ViewpointSet views;
    views.offsets = {0.0};
    CascadeResult a = run_cascade(trained.model, data[1].first, views);
    CascadeResult b = run_cascade(back, data[1].first, views);
    CHECK(a.final.map.data == b.final.map.data);

    std::remove(manifest.c_str());
    std::remove("test_cascade_model_level0.rnn");
    std::remove("test_cascade_model_level1.rnn");
}
