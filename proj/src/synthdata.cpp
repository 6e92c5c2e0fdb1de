#include "starseg/synthdata.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "starseg/errors.hpp"

namespace starseg {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kContourPoints = 256;
constexpr int kRadialLut = 512;

double wrap_angle(double theta) {
    theta = std::fmod(theta, kTwoPi);
    if (theta < 0.0) theta += kTwoPi;
    return theta;
}

bool in_arc(double theta, const OcclusionArc& arc) {
    const double rel = wrap_angle(theta - arc.start);
    return rel <= arc.span;
}

}  // namespace

double shape_radius(const ShapeSpec& spec, double theta) {
    const double sa = std::sqrt(spec.aspect);
    const double a = spec.base_radius * sa;
    const double b = spec.base_radius / sa;
    const double ct = std::cos(theta), st = std::sin(theta);
    double r = a * b / std::hypot(b * ct, a * st);
    for (int k = 0; k < 4; ++k) {
        const auto& [amp, phase] = spec.harmonics[k];
        r += spec.base_radius * amp * std::cos((k + 2) * theta + phase);
    }
    return r;
}

std::pair<Contour, GrayImage> gen_shape(const ShapeSpec& spec, int width,
                                        int height) {
    if (spec.base_radius <= 0.0)
        throw std::invalid_argument("gen_shape: non-positive base radius");
    for (int i = 0; i < 1024; ++i) {
        if (shape_radius(spec, kTwoPi * i / 1024) <= 0.3 * spec.base_radius)
            throw std::invalid_argument(
                "gen_shape: radial function dips below 0.3 * base_radius");
    }

    Contour contour;
    contour.points.resize(kContourPoints);
    for (int i = 0; i < kContourPoints; ++i) {
        const double theta = kTwoPi * i / kContourPoints;
        const double r = shape_radius(spec, theta);
        contour.points[i] = {spec.center_x + r * std::cos(theta),
                             spec.center_y + r * std::sin(theta)};
    }
    GrayImage mask = contour_to_mask(contour, width, height);
    return {std::move(contour), std::move(mask)};
}

GrayImage render_image(const GrayImage& mask, const DegradationSpec& spec,
                       std::uint64_t seed) {
    if (spec.speckle_sigma < 0.0)
        throw std::invalid_argument("render_image: negative speckle variance");
    for (const auto& arc : spec.occlusion_arcs)
        if (arc.start < 0.0 || arc.start >= kTwoPi || arc.span < 0.0)
            throw std::invalid_argument("render_image: arc outside [0, 2*pi)");

    const int w = mask.width, h = mask.height;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> uni(0.0, kTwoPi);

    // low-frequency inhomogeneity field parameters
    const double phi1 = uni(rng), phi2 = uni(rng);
    const double dir1 = uni(rng), dir2 = uni(rng);
    const double f1 = 1.3 * kTwoPi / std::max(w, h);
    const double f2 = 0.7 * kTwoPi / std::max(w, h);

    // mask centroid + radial boundary profile for the occlusion band
    double sx = 0.0, sy = 0.0;
    long count = 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (mask.at(x, y) > 0.5) {
                sx += x;
                sy += y;
                ++count;
            }
    const bool has_object = count > 0;
    const double cx = has_object ? sx / count : (w - 1) / 2.0;
    const double cy = has_object ? sy / count : (h - 1) / 2.0;

    std::vector<double> boundary_r(kRadialLut, 0.0);
    if (has_object && !spec.occlusion_arcs.empty()) {
        const double r_limit = std::hypot(w, h);
        for (int a = 0; a < kRadialLut; ++a) {
            const double theta = kTwoPi * a / kRadialLut;
            const double dx = std::cos(theta), dy = std::sin(theta);
            double r_in = 0.0, r_out = r_limit;
            for (double r = 0.5; r <= r_limit; r += 0.5) {
                if (mask.sample(cx + r * dx, cy + r * dy) > 0.5) {
                    r_in = r;
                } else {
                    r_out = r;
                    break;
                }
            }
            for (int it = 0; it < 20; ++it) {
                const double mid = 0.5 * (r_in + r_out);
                if (mask.sample(cx + mid * dx, cy + mid * dy) > 0.5)
                    r_in = mid;
                else
                    r_out = mid;
            }
            boundary_r[a] = 0.5 * (r_in + r_out);
        }
    }

    const double mid_intensity =
        0.5 * (spec.object_intensity + spec.background_intensity);

    GrayImage img(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double v = mask.at(x, y) > 0.5 ? spec.object_intensity
                                           : spec.background_intensity;

            if (!spec.occlusion_arcs.empty() && has_object) {
                const double theta = wrap_angle(std::atan2(y - cy, x - cx));
                const double r = std::hypot(x - cx, y - cy);
                for (const auto& arc : spec.occlusion_arcs) {
                    if (!in_arc(theta, arc)) continue;
                    const int a = int(theta * kRadialLut / kTwoPi) % kRadialLut;
                    const double rb = boundary_r[a];
                    const double band = std::max(5.0, 0.30 * rb);
                    const double d = std::abs(r - rb);
                    if (d >= band) continue;
                    // flat core destroys the edge, linear fade at the rim
                    const double core = 0.6 * band;
                    const double t =
                        d <= core ? 1.0 : (band - d) / (band - core);
                    v += t * (mid_intensity - v);
                }
            }

            const double field =
                1.0 + spec.inhomogeneity_strength *
                          (0.6 * std::sin(f1 * (x * std::cos(dir1) +
                                                y * std::sin(dir1)) + phi1) +
                           0.4 * std::sin(f2 * (x * std::cos(dir2) +
                                                y * std::sin(dir2)) + phi2));
            v *= field;

            if (spec.speckle_sigma > 0.0)
                v *= 1.0 + spec.speckle_sigma * gauss(rng);

            img.at(x, y) = std::clamp(v, 0.0, 1.0);
        }
    }
    return img;
}

std::pair<ShapeSpec, DegradationSpec> draw_sample(const DatasetRanges& rg,
                                                  int width, int height,
                                                  std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto uni = [&](double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(rng);
    };

    ShapeSpec shape;
    shape.base_radius = uni(rg.base_radius_min, rg.base_radius_max);
    shape.aspect = uni(rg.aspect_min, rg.aspect_max);
    for (auto& [amp, phase] : shape.harmonics) {
        amp = uni(0.0, rg.harmonic_amp_max);
        phase = uni(0.0, kTwoPi);
    }
    shape.center_x = (width - 1) / 2.0 + uni(-rg.center_jitter, rg.center_jitter);
    shape.center_y = (height - 1) / 2.0 + uni(-rg.center_jitter, rg.center_jitter);

    DegradationSpec deg;
    const int n_arcs =
        std::uniform_int_distribution<int>(rg.arcs_min, rg.arcs_max)(rng);
    for (int i = 0; i < n_arcs; ++i) {
        OcclusionArc arc;
        arc.start = uni(0.0, kTwoPi);
        arc.span = uni(rg.arc_span_min, rg.arc_span_max);
        deg.occlusion_arcs.push_back(arc);
    }
    deg.speckle_sigma = uni(rg.speckle_min, rg.speckle_max);
    deg.background_intensity = uni(rg.background_min, rg.background_max);
    deg.object_intensity =
        deg.background_intensity + uni(rg.contrast_min, rg.contrast_max);
    deg.inhomogeneity_strength = uni(rg.inhomogeneity_min, rg.inhomogeneity_max);
    return {shape, deg};
}

std::vector<ManifestEntry> gen_dataset(const DatasetConfig& cfg,
                                       const std::string& out_dir) {
    if (cfg.n_train < 1 || cfg.n_test < 0)
        throw std::invalid_argument("gen_dataset: sample counts must be positive");
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw io_error("gen_dataset: cannot create " + out_dir);

    constexpr std::uint64_t kTestSeedBase = 1000000;
    std::vector<ManifestEntry> entries;

    auto emit = [&](const std::string& split, int index, std::uint64_t seed) {
        auto [shape, deg] = draw_sample(cfg.ranges, cfg.width, cfg.height, seed);
        auto [contour, mask] = gen_shape(shape, cfg.width, cfg.height);
        GrayImage img = render_image(mask, deg, seed ^ 0x9e3779b97f4a7c15ull);

        std::ostringstream stem;
        stem << split << "_" << std::setw(4) << std::setfill('0') << index;
        ManifestEntry e;
        e.split = split;
        e.image = stem.str() + ".pgm";
        e.mask = stem.str() + "_mask.pgm";
        e.contour = stem.str() + ".contour";
        e.seed = seed;
        write_pgm(img, (fs::path(out_dir) / e.image).string());
        write_pgm(mask, (fs::path(out_dir) / e.mask).string());
        save_contour(contour, (fs::path(out_dir) / e.contour).string());
        entries.push_back(std::move(e));
    };

    for (int i = 0; i < cfg.n_train; ++i) emit("train", i, cfg.seed + i);
    for (int i = 0; i < cfg.n_test; ++i)
        emit("test", i, cfg.seed + kTestSeedBase + i);

    save_manifest(entries, (fs::path(out_dir) / "manifest.tsv").string());
    return entries;
}

void save_manifest(const std::vector<ManifestEntry>& entries,
                   const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("save_manifest: cannot write " + path);
    for (const auto& e : entries)
        out << e.split << "\t" << e.image << "\t" << e.mask << "\t" << e.contour
            << "\t" << e.seed << "\n";
    if (!out) throw io_error("save_manifest: write failed for " + path);
}

std::vector<ManifestEntry> load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("load_manifest: cannot open " + path);
    std::vector<ManifestEntry> entries;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        ManifestEntry e;
        if (!(ss >> e.split >> e.image >> e.mask >> e.contour >> e.seed))
            throw io_error("load_manifest: malformed line in " + path);
        entries.push_back(std::move(e));
    }
    return entries;
}

}  // namespace starseg
