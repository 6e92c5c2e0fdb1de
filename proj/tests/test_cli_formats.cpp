#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "starseg/config.hpp"
#include "starseg/errors.hpp"
#include "starseg/image.hpp"
#include "starseg/synthdata.hpp"

using namespace starseg;
namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    REQUIRE(out.good());
    out << text;
}

}  // namespace

TEST_CASE("pgm files round-trip at 8-bit precision") {
    GrayImage img(17, 9);
    for (int y = 0; y < 9; ++y)
        for (int x = 0; x < 17; ++x)
            img.at(x, y) = (x * 9 + y) % 256 / 255.0;

    const std::string path = "test_roundtrip.pgm";
    write_pgm(img, path);
    GrayImage back = read_pgm(path);
    REQUIRE(back.width == 17);
    REQUIRE(back.height == 9);
    for (std::size_t i = 0; i < img.data.size(); ++i)
        CHECK(std::abs(back.data[i] - img.data[i]) <= 0.5 / 255.0 + 1e-12);

    // writing again from the decoded image is byte-stable
    const std::string path2 = "test_roundtrip2.pgm";
    write_pgm(back, path2);
    std::ifstream a(path, std::ios::binary), b(path2, std::ios::binary);
    std::string sa((std::istreambuf_iterator<char>(a)), {});
    std::string sb((std::istreambuf_iterator<char>(b)), {});
    CHECK(sa == sb);
    std::remove(path.c_str());
    std::remove(path2.c_str());
}

TEST_CASE("pgm reader rejects missing and malformed files") {
    CHECK_THROWS_AS(read_pgm("no_such_file.pgm"), io_error);
    write_text("bad_magic.pgm", "P2\n2 2\n255\n0 0 0 0\n");
    CHECK_THROWS_AS(read_pgm("bad_magic.pgm"), io_error);
    write_text("truncated.pgm", "P5\n4 4\n255\nab");
    CHECK_THROWS_AS(read_pgm("truncated.pgm"), io_error);
    std::remove("bad_magic.pgm");
    std::remove("truncated.pgm");
}

TEST_CASE("defaults validate and resolve three viewpoints") {
    PipelineConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    auto views = cfg.resolved_viewpoints();
    REQUIRE(views.size() == 3);
    CHECK(views[0] == 0.0);
    CHECK(views[1] == doctest::Approx(2.0 * std::numbers::pi / 3.0));

    DatasetConfig ds = cfg.dataset_config();
    CHECK(ds.n_train == 300);
    CHECK(ds.n_test == 60);
    CHECK(ds.width == 96);
    CHECK(ds.ranges.arc_span_max ==
          doctest::Approx(60.0 * std::numbers::pi / 180.0));
}

TEST_CASE("config files parse keys, comments, and blank lines") {
    write_text("test_cfg_main.cfg",
               "# comment line\n"
               "\n"
               "hidden = 24\n"
               "learning_rate = 0.002\n"
               "scales = 16,8\n"
               "epochs = 3,2\n"
               "seed = 77\n"
               "n_train = 12   # trailing comment\n");
    PipelineConfig cfg = load_config("test_cfg_main.cfg");
    CHECK(cfg.hidden == 24);
    CHECK(cfg.learning_rate == 0.002);
    REQUIRE(cfg.scales.size() == 2);
    CHECK(cfg.scales[1] == 8);
    CHECK(cfg.epochs == std::vector<int>{3, 2});
    CHECK(cfg.seed == 77);
    CHECK(cfg.n_train == 12);
    CHECK(cfg.n_radius == 48);  // untouched default
    std::remove("test_cfg_main.cfg");
}

TEST_CASE("include pulls in another file, later keys win") {
    write_text("test_cfg_base.cfg", "hidden = 10\nseed = 5\n");
    write_text("test_cfg_top.cfg",
               "include test_cfg_base.cfg\n"
               "seed = 9\n");
    PipelineConfig cfg = load_config("test_cfg_top.cfg");
    CHECK(cfg.hidden == 10);
    CHECK(cfg.seed == 9);
    std::remove("test_cfg_base.cfg");
    std::remove("test_cfg_top.cfg");
}

TEST_CASE("include cycles and missing files are rejected") {
    write_text("test_cfg_loop.cfg", "include test_cfg_loop.cfg\n");
    CHECK_THROWS(load_config("test_cfg_loop.cfg"));
    std::remove("test_cfg_loop.cfg");
    CHECK_THROWS_AS(load_config("missing_config_file.cfg"), io_error);
}

TEST_CASE("unknown keys and malformed values are rejected") {
    PipelineConfig cfg;
    CHECK_THROWS_AS(apply_config_entry(cfg, "not_a_key", "1"),
                    std::invalid_argument);
    CHECK_THROWS_AS(apply_config_entry(cfg, "hidden", "abc"),
                    std::invalid_argument);
}

TEST_CASE("validate rejects inconsistent settings") {
    PipelineConfig cfg;
    cfg.scales = {16, 7};  // 7 does not divide 80
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    cfg = PipelineConfig{};
    cfg.epochs = {40, 25};  // three scales need three entries
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    cfg = PipelineConfig{};
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    cfg = PipelineConfig{};
    cfg.arc_span_max_deg = 90.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("dump_config output reloads to an equivalent config") {
    PipelineConfig cfg;
    cfg.hidden = 12;
    cfg.scales = {10, 8};
    cfg.epochs = {2, 2};
    cfg.viewpoints = {0.0, 1.5};
    cfg.seed = 123;
    write_text("test_cfg_dump.cfg", dump_config(cfg));
    PipelineConfig back = load_config("test_cfg_dump.cfg");
    CHECK(back.hidden == cfg.hidden);
    CHECK(back.scales == cfg.scales);
    CHECK(back.epochs == cfg.epochs);
    REQUIRE(back.viewpoints.size() == 2);
    CHECK(back.viewpoints[1] == doctest::Approx(1.5));
    CHECK(back.seed == cfg.seed);
    std::remove("test_cfg_dump.cfg");
}

TEST_CASE("dataset manifests round-trip") {
    std::vector<ManifestEntry> entries = {
        {"train", "images/train_000.pgm", "masks/train_000.pgm",
         "contours/train_000.contour", 42},
        {"test", "images/test_000.pgm", "masks/test_000.pgm",
         "contours/test_000.contour", 1000001},
    };
    const std::string path = "test_manifest.tsv";
    save_manifest(entries, path);
    auto back = load_manifest(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].split == "train");
    CHECK(back[0].image == "images/train_000.pgm");
    CHECK(back[0].seed == 42);
    CHECK(back[1].split == "test");
    CHECK(back[1].seed == 1000001);
    std::remove(path.c_str());

    CHECK_THROWS_AS(load_manifest("missing_manifest.tsv"), io_error);
}
