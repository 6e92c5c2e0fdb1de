#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace starseg {

// Row-major grayscale raster with intensities in [0,1].
// Pixel (x, y) sits at continuous coordinate (x, y).
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    GrayImage() = default;
    GrayImage(int w, int h, double fill = 0.0);

    double& at(int x, int y) { return data[std::size_t(y) * width + x]; }
    double at(int x, int y) const { return data[std::size_t(y) * width + x]; }

    bool in_bounds(double x, double y) const {
        return x >= 0.0 && y >= 0.0 && x <= width - 1 && y <= height - 1;
    }

    // Bilinear interpolation; coordinates outside the pixel grid give 0.
    double sample(double x, double y) const;
};

GrayImage read_pgm(const std::string& path);

// Binary PGM (P5), maxval 255, intensity = round(value*255).
void write_pgm(const GrayImage& img, const std::string& path);

}  // namespace starseg
