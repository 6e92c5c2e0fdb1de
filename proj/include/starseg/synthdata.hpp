#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "starseg/image.hpp"
#include "starseg/shape_model.hpp"

namespace starseg {

// Star-convex radial shape: aspect-modulated ellipse plus low-order Fourier
// harmonics (k = 2..5). Amplitudes are fractions of the base radius.
struct ShapeSpec {
    double base_radius = 25.0;
    double aspect = 1.0;
    std::array<std::pair<double, double>, 4> harmonics{};  // (amplitude, phase)
    double center_x = 0.0;  // absolute coordinates
    double center_y = 0.0;
};

struct OcclusionArc {
    double start = 0.0;  // radians in [0, 2*pi)
    double span = 0.0;
};

struct DegradationSpec {
    std::vector<OcclusionArc> occlusion_arcs;
    double speckle_sigma = 0.0;
    double background_intensity = 0.25;
    double object_intensity = 0.60;
    double inhomogeneity_strength = 0.0;
};

// Radius of the spec's boundary at angle theta about its center.
double shape_radius(const ShapeSpec& spec, double theta);

// 256-point contour plus rasterized mask; throws invalid-argument when the
// radial function dips below 0.3 * base_radius anywhere.
std::pair<Contour, GrayImage> gen_shape(const ShapeSpec& spec, int width,
                                        int height);

GrayImage render_image(const GrayImage& mask, const DegradationSpec& spec,
                       std::uint64_t seed);

struct DatasetRanges {
    double base_radius_min = 20.0, base_radius_max = 30.0;
    double aspect_min = 1.0, aspect_max = 1.3;
    double harmonic_amp_max = 0.06;  // fraction of base radius per harmonic
    double center_jitter = 3.0;      // px, each axis
    int arcs_min = 2, arcs_max = 3;
    double arc_span_min = 0.70, arc_span_max = 1.05;  // radians (~40..60 deg)
    double speckle_min = 0.14, speckle_max = 0.22;
    double background_min = 0.20, background_max = 0.30;
    double contrast_min = 0.18, contrast_max = 0.28;
    double inhomogeneity_min = 0.12, inhomogeneity_max = 0.22;
};

struct DatasetConfig {
    int n_train = 300;
    int n_test = 60;
    int width = 96;
    int height = 96;
    std::uint64_t seed = 1;
    DatasetRanges ranges;
};

struct ManifestEntry {
    std::string split;  // "train" or "test"
    std::string image;  // paths relative to the manifest
    std::string mask;
    std::string contour;
    std::uint64_t seed = 0;
};

// Deterministic per-sample seeds; train and test seed ranges are disjoint.
// Writes PGM images/masks, contour text files, and a tab-separated manifest.
std::vector<ManifestEntry> gen_dataset(const DatasetConfig& cfg,
                                       const std::string& out_dir);

std::vector<ManifestEntry> load_manifest(const std::string& path);
void save_manifest(const std::vector<ManifestEntry>& entries,
                   const std::string& path);

// Draws one sample (shape + degradations) from the ranges.
std::pair<ShapeSpec, DegradationSpec> draw_sample(const DatasetRanges& ranges,
                                                  int width, int height,
                                                  std::uint64_t seed);

}  // namespace starseg
