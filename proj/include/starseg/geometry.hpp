#pragma once

#include <vector>

#include "starseg/image.hpp"

namespace starseg {

// Polar resampling of a Cartesian image about a center point.
// Row i holds angle theta_i = viewpoint_offset + 2*pi*i/n_angle
// (counter-clockwise from the +x axis), column j holds radius
// r_j = r_max*(j+0.5)/n_radius.
struct PolarImage {
    int n_angle = 0;
    int n_radius = 0;
    std::vector<double> data;
    double cx = 0.0, cy = 0.0;
    double r_max = 0.0;
    double viewpoint_offset = 0.0;

    double& at(int i, int j) { return data[std::size_t(i) * n_radius + j]; }
    double at(int i, int j) const { return data[std::size_t(i) * n_radius + j]; }
};

// T consecutive angular bands of s polar rows each, flattened row-major.
// Carries the source polar geometry so assemble() is an exact inverse.
struct BandSequence {
    std::vector<std::vector<double>> bands;
    int scale = 0;
    int n_radius = 0;
    double cx = 0.0, cy = 0.0;
    double r_max = 0.0;
    double viewpoint_offset = 0.0;

    int length() const { return int(bands.size()); }
};

PolarImage serialize(const GrayImage& img, double cx, double cy, int n_angle,
                     int n_radius, double r_max, double offset);

// Inverse resampling; pixels with r > r_max or at the exact center are 0.
// Angle interpolation wraps across the first/last row.
GrayImage deserialize(const PolarImage& polar, int width, int height);

BandSequence partition(const PolarImage& polar, int s);

PolarImage assemble(const BandSequence& bands);

}  // namespace starseg
