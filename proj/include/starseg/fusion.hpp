#pragma once

#include <vector>

#include "starseg/geometry.hpp"
#include "starseg/image.hpp"
#include "starseg/nncore.hpp"

namespace starseg {

// Per-pixel shape estimate in [0,1] with the polar annulus it was produced
// from; pixels outside the annulus are 0 and excluded from metrics.
struct PredictionMap {
    GrayImage map;
    double cx = 0.0, cy = 0.0;
    double r_max = 0.0;

    bool in_annulus(double x, double y) const;
};

struct ViewpointSet {
    std::vector<double> offsets;

    static ViewpointSet thirds();  // {0, 2*pi/3, 4*pi/3}
};

struct PolarConfig {
    int n_angle = 80;
    int n_radius = 48;
    double r_max = 0.0;  // 0 selects half the image's shorter side
};

double default_r_max(const GrayImage& img);

PredictionMap uniform_map(int width, int height, double value,
                          const PolarConfig& cfg);

// Builds the per-timestep input by concatenating the image band with the
// context band, runs the BiLSTM, and deserializes the output sequence.
PredictionMap predict_view(const BiLstmModel& model, const GrayImage& img,
                           const PredictionMap& context, double offset, int s,
                           const PolarConfig& cfg);

// Pixel-wise arithmetic mean.
PredictionMap fuse_views(const std::vector<PredictionMap>& maps);

// Lossless raw dump (versioned binary, little-endian f64) for cascade
// chaining; PGM export loses precision to 8 bits.
void save_map(const PredictionMap& m, const std::string& path);
PredictionMap load_map(const std::string& path);

}  // namespace starseg
