// End-to-end acceptance suite. Each criterion prints exactly one
// "[PASS] criterion N: ..." or "[FAIL] criterion N: ..." line; the process
// exits nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "starseg/cascade.hpp"
#include "starseg/config.hpp"
#include "starseg/fusion.hpp"
#include "starseg/geometry.hpp"
#include "starseg/metrics.hpp"
#include "starseg/nncore.hpp"
#include "starseg/pipeline.hpp"
#include "starseg/shape_model.hpp"
#include "starseg/synthdata.hpp"

using namespace starseg;
namespace fs = std::filesystem;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion,
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double now_s() {
    using clock = std::chrono::steady_clock;
    static const auto start = clock::now();
    return std::chrono::duration<double>(clock::now() - start).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// ---------------------------------------------------------------- criterion 1
void criterion1_gradcheck() {
    const double t0 = now_s();
    GradCheckReport r = gradcheck_bilstm(3, 4, 3, 5, 7, 1e-5);
    const double dt = now_s() - t0;
    const bool pass = r.max_rel_error < 1e-4 && dt < 10.0;
    report(1, pass,
           fmt("gradcheck max rel error %.3e (< 1e-4), %.1f s (< 10 s)",
               r.max_rel_error, dt));
}

// ---------------------------------------------------------------- criterion 2
void criterion2_geometry() {
    const double t0 = now_s();
    const int size = 96;
    GrayImage img(size, size);
    const double c = (size - 1) / 2.0, r_max = size / 2.0;
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const double r = std::hypot(x - c, y - c);
            img.at(x, y) = 0.5 + 0.4 * std::cos(std::numbers::pi * r / r_max);
        }
    const int n = int(4 * r_max);
    PolarImage polar = serialize(img, c, c, n, n, r_max, 0.0);
    GrayImage back = deserialize(polar, size, size);
    double err = 0.0;
    long count = 0;
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const double r = std::hypot(x - c, y - c);
            if (r >= 2.0 && r <= 0.95 * r_max) {
                err += std::abs(back.at(x, y) - img.at(x, y));
                ++count;
            }
        }
    const double mae = err / count;

    PolarImage grid = serialize(img, c, c, 80, 48, r_max, 0.0);
    bool exact = true;
    for (int s : {16, 10, 8}) {
        PolarImage round = assemble(partition(grid, s));
        if (round.data != grid.data) exact = false;
    }
    const double dt = now_s() - t0;
    report(2, mae < 0.02 && exact && dt < 1.0,
           fmt("round-trip MAE %.4f (< 0.02), partition round-trip %s, %.2f s",
               mae, exact ? "exact" : "NOT exact", dt));
}

// ---------------------------------------------------------------- criterion 3
void criterion3_metrics() {
    const double t0 = now_s();
    std::mt19937_64 rng(13);
    std::bernoulli_distribution coin(0.35);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        GrayImage pred(24, 24, 0.0), truth(24, 24, 0.0);
        for (double& v : pred.data) v = coin(rng) ? 1.0 : 0.0;
        for (double& v : truth.data) v = coin(rng) ? 1.0 : 0.0;
        double tsum = 0.0, psum = 0.0;
        for (double v : truth.data) tsum += v;
        for (double v : pred.data) psum += v;
        if (tsum == 0.0 || psum == 0.0) continue;
        OverlapMetrics m = overlap_metrics(pred, truth);
        if (m.dice > 0.0) {
            worst = std::max(worst,
                             std::abs(m.jaccard - m.dice / (2.0 - m.dice)));
            worst = std::max(
                worst, std::abs(m.conformity - (3.0 * m.dice - 2.0) / m.dice));
        }
    }

    std::vector<Point> inner, outer;
    for (int i = 0; i < 1024; ++i) {
        const double t = kTwoPi * i / 1024.0;
        inner.push_back({20.0 * std::cos(t), 20.0 * std::sin(t)});
        outer.push_back({23.0 * std::cos(t), 23.0 * std::sin(t)});
    }
    const double d = adb(inner, outer);
    const double dt = now_s() - t0;
    report(3, worst < 1e-12 && std::abs(d - 3.0) < 0.1 && dt < 5.0,
           fmt("identity error %.2e (< 1e-12), adb %.4f (3.0 +- 0.1), %.2f s",
               worst, d, dt));
}

// --------------------------------------------------------- criteria 4, 5, 6, 9
struct E2eArtifacts {
    EvalSummary eval;
    std::vector<std::vector<LossReport>> losses;
    std::string model_bytes;   // concatenated level model files
    std::string report_bytes;  // serialized metric report
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in),
            std::istreambuf_iterator<char>()};
}

E2eArtifacts run_e2e(const PipelineConfig& cfg, const fs::path& data_dir,
                     const fs::path& model_dir) {
    gen_dataset(cfg.dataset_config(), data_dir.string());
    const std::string manifest = (data_dir / "manifest.tsv").string();
    auto train = load_dataset(manifest, "train");
    auto test = load_dataset(manifest, "test");

    TrainedPipeline trained = train_pipeline(cfg, train);

    fs::create_directories(model_dir);
    save_cascade(trained.cascade, (model_dir / "cascade.json").string());

    E2eArtifacts out;
    out.eval = evaluate_pipeline(trained.cascade, trained.shape, test, cfg);
    out.losses = trained.level_losses;
    for (std::size_t k = 0; k < trained.cascade.levels.size(); ++k)
        out.model_bytes +=
            slurp(model_dir / ("cascade_level" + std::to_string(k) + ".rnn"));

    std::string rep;
    rep += format_report_tsv(out.eval.final_mean) + "\n";
    for (const auto& lm : out.eval.level_means)
        rep += format_report_tsv(lm) + "\n";
    for (const auto& pi : out.eval.per_image)
        rep += format_report_tsv(pi) + "\n";
    out.report_bytes = rep;
    return out;
}

void criteria_e2e() {
    PipelineConfig cfg;  // defaults: 300 train / 60 test, scales 16/10/8
    cfg.validate();

    const double t0 = now_s();
    std::printf("... criterion 4: generating data and training (budget 2 h)\n");
    std::fflush(stdout);

    E2eArtifacts a;
    try {
        a = run_e2e(cfg, "acc_data", "acc_model_a");
    } catch (const std::exception& e) {
        const std::string msg = std::string("end-to-end run threw: ") + e.what();
        report(4, false, msg);
        report(5, false, msg);
        report(6, false, msg);
        report(9, false, msg);
        return;
    }
    const double train_s = now_s() - t0;

    // criterion 4: final quality within budget
    const double dice = a.eval.final_mean.dice;
    const double dist = a.eval.final_mean.adb;
    report(4, dice >= 0.90 && dist <= 3.0 && train_s <= 7200.0,
           fmt("final mean dice %.4f (>= 0.90), mean boundary dist %.3f px "
               "(<= 3.0), %.0f s (<= 7200 s)",
               dice, dist, train_s));

    // criterion 5: level-to-level trend on thresholded maps
    if (a.eval.level_means.size() >= 3) {
        const double d0 = a.eval.level_means[0].dice;
        const double d1 = a.eval.level_means[1].dice;
        const double d2 = a.eval.level_means[2].dice;
        report(5, d1 >= d0 + 0.005 && d2 >= d1 - 0.005,
               fmt("level dice %.4f -> %.4f -> %.4f (level1 >= level0 + 0.005, "
                   "level2 >= level1 - 0.005)",
                   d0, d1, d2));
    } else {
        report(5, false, "fewer than 3 level reports");
    }

    // criterion 6: later levels converge faster early on
    if (a.losses.size() >= 2 && a.losses[0].size() >= 5 &&
        a.losses[1].size() >= 5) {
        const double r0 = a.losses[0][4].mean_loss / a.losses[0][0].mean_loss;
        const double r1 = a.losses[1][4].mean_loss / a.losses[1][0].mean_loss;
        report(6, r1 < r0,
               fmt("epoch5/epoch1 loss ratio level1 %.4f < level0 %.4f", r1, r0));
    } else {
        report(6, false, "missing epoch losses for levels 0/1");
    }

    // criterion 9: byte-identical rerun
    std::printf("... criterion 9: repeating the full run for determinism\n");
    std::fflush(stdout);
    try {
        E2eArtifacts b = run_e2e(cfg, "acc_data_b", "acc_model_b");
        const bool models_same = a.model_bytes == b.model_bytes;
        const bool reports_same = a.report_bytes == b.report_bytes;
        report(9, models_same && reports_same,
               fmt("model files %s, metric reports %s",
                   models_same ? "byte-identical" : "DIFFER",
                   reports_same ? "byte-identical" : "DIFFER"));
    } catch (const std::exception& e) {
        report(9, false, std::string("rerun threw: ") + e.what());
    }
}

// ---------------------------------------------------------------- criterion 7
void criterion7_asm() {
    const double t0 = now_s();
    // training shapes: ellipse family with harmonics, landmarked from masks
    std::vector<Contour> contours;
    std::vector<GrayImage> masks;
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int k = 0; k < 10; ++k) {
        ShapeSpec s;
        s.base_radius = 18.0 + 8.0 * uni(rng);
        s.aspect = 1.0 + 0.3 * uni(rng);
        s.harmonics[0] = {0.05 * uni(rng), kTwoPi * uni(rng)};
        s.harmonics[1] = {0.05 * uni(rng), kTwoPi * uni(rng)};
        s.center_x = 45.0 + 6.0 * uni(rng);
        s.center_y = 45.0 + 6.0 * uni(rng);
        auto [contour, mask] = gen_shape(s, 96, 96);
        contours.push_back(sample_landmarks(mask));
        masks.push_back(mask);
    }
    ShapeModel model = build_shape_model(contours, 1.0);

    // PCA reconstruction of each training shape in the normalized frame
    double recon_err = 0.0;
    {
        // re-run the alignment by fitting pose+coefficients per shape and
        // measuring the landmark residual against the original contour
        for (std::size_t i = 0; i < contours.size(); ++i) {
            // project the normalized shape onto the modes directly
            // (alignment-free check: full-rank model must reconstruct to
            // numerical precision)
            const Contour& c = contours[i];
            const int n = c.size();
            std::vector<double> v(2 * n);
            double mx = 0.0, my = 0.0;
            for (int j = 0; j < n; ++j) {
                mx += c.points[j].x / n;
                my += c.points[j].y / n;
            }
            double norm = 0.0;
            for (int j = 0; j < n; ++j) {
                v[2 * j] = c.points[j].x - mx;
                v[2 * j + 1] = c.points[j].y - my;
                norm += v[2 * j] * v[2 * j] + v[2 * j + 1] * v[2 * j + 1];
            }
            norm = std::sqrt(norm);
            for (double& x : v) x /= norm;
            // optimal rotation onto the mean shape
            double sa = 0.0, sb = 0.0;
            for (int j = 0; j < n; ++j) {
                sa += v[2 * j] * model.mean_shape[2 * j] +
                      v[2 * j + 1] * model.mean_shape[2 * j + 1];
                sb += v[2 * j] * model.mean_shape[2 * j + 1] -
                      v[2 * j + 1] * model.mean_shape[2 * j];
            }
            const double ang = std::atan2(sb, sa);
            const double ca = std::cos(ang), sn = std::sin(ang);
            std::vector<double> w(2 * n);
            for (int j = 0; j < n; ++j) {
                w[2 * j] = ca * v[2 * j] - sn * v[2 * j + 1];
                w[2 * j + 1] = sn * v[2 * j] + ca * v[2 * j + 1];
            }
            // residual after projecting (w - mean) onto the mode basis
            std::vector<double> r(2 * n);
            for (int j = 0; j < 2 * n; ++j) r[j] = w[j] - model.mean_shape[j];
            std::vector<double> coef(model.n_modes(), 0.0);
            for (int m = 0; m < model.n_modes(); ++m)
                for (int j = 0; j < 2 * n; ++j) coef[m] += model.modes(j, m) * r[j];
            for (int j = 0; j < 2 * n; ++j) {
                double rec = model.mean_shape[j];
                for (int m = 0; m < model.n_modes(); ++m)
                    rec += model.modes(j, m) * coef[m];
                recon_err = std::max(recon_err, std::abs(rec - w[j]));
            }
        }
    }

    // fit on a rendered training-shape map
    double mean_landmark_err = 0.0;
    bool clamp_ok = true;
    {
        const GrayImage& mask = masks[3];
        PredictionMap map;
        map.map = GrayImage(96, 96, 0.0);
        map.cx = 47.5;
        map.cy = 47.5;
        map.r_max = 48.0;
        // smooth the binary mask so the edge has a usable gradient
        for (int y = 0; y < 96; ++y)
            for (int x = 0; x < 96; ++x) {
                double s = 0.0;
                int cnt = 0;
                for (int dy = -2; dy <= 2; ++dy)
                    for (int dx = -2; dx <= 2; ++dx)
                        if (mask.in_bounds(x + dx, y + dy)) {
                            s += mask.at(x + dx, y + dy);
                            ++cnt;
                        }
                map.map.at(x, y) = s / cnt;
            }
        FitResult fit = fit_asm(model, map);
        const Contour& truth = contours[3];
        // nearest-landmark distance (fit may start at a different angle)
        for (const auto& p : fit.contour.points) {
            double best = 1e9;
            for (const auto& q : truth.points)
                best = std::min(best, std::hypot(p.x - q.x, p.y - q.y));
            mean_landmark_err += best / fit.contour.size();
        }
        for (int m = 0; m < model.n_modes(); ++m)
            if (std::abs(fit.coefficients[m]) >
                3.0 * std::sqrt(model.eigenvalues[m]) + 1e-9)
                clamp_ok = false;
    }
    const double dt = now_s() - t0;
    report(7,
           recon_err < 1e-6 && mean_landmark_err < 1.0 && clamp_ok && dt < 30.0,
           fmt("reconstruction %.2e (< 1e-6), fit landmark error %.3f px "
               "(< 1.0), clamp %s, %.1f s (< 30 s)",
               recon_err, mean_landmark_err, clamp_ok ? "ok" : "VIOLATED", dt));
}

// ---------------------------------------------------------------- criterion 8
void criterion8_fusion() {
    const double t0 = now_s();
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    PolarConfig pc{40, 24, 0.0};
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        PredictionMap a = uniform_map(64, 64, 0.0, pc), b = a, c = a;
        for (std::size_t i = 0; i < a.map.data.size(); ++i) {
            a.map.data[i] = uni(rng);
            b.map.data[i] = uni(rng);
            c.map.data[i] = uni(rng);
        }
        PredictionMap idem = fuse_views({a, a, a});
        PredictionMap abc = fuse_views({a, b, c});
        PredictionMap bca = fuse_views({b, c, a});
        for (std::size_t i = 0; i < a.map.data.size(); ++i) {
            worst = std::max(worst, std::abs(idem.map.data[i] - a.map.data[i]));
            worst = std::max(worst, std::abs(abc.map.data[i] - bca.map.data[i]));
            const double lo =
                std::min({a.map.data[i], b.map.data[i], c.map.data[i]});
            const double hi =
                std::max({a.map.data[i], b.map.data[i], c.map.data[i]});
            if (abc.map.data[i] < lo) worst = std::max(worst, lo - abc.map.data[i]);
            if (abc.map.data[i] > hi) worst = std::max(worst, abc.map.data[i] - hi);
        }
    }
    const double dt = now_s() - t0;
    report(8, worst < 1e-12 && dt < 1.0,
           fmt("fusion property error %.2e (< 1e-12) over 50 triples, %.2f s",
               worst, dt));
}

}  // namespace

int main() {
    criterion1_gradcheck();
    criterion2_geometry();
    criterion3_metrics();
    criterion7_asm();
    criterion8_fusion();
    criteria_e2e();  // criteria 4, 5, 6, 9 share one training run + one rerun
    if (g_failures > 0) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all 9 criteria passed\n");
    return 0;
}
