#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "starseg/fusion.hpp"
#include "starseg/image.hpp"
#include "starseg/nncore.hpp"

namespace starseg {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

// Closed landmark polyline, counter-clockwise, implicitly closed.
struct Contour {
    std::vector<Point> points;

    int size() const { return int(points.size()); }
};

inline constexpr int kMainLandmarks = 12;
inline constexpr int kSecondaryLandmarks = 60;

// Main landmarks sit at every (n_total/n_main)-th position.
inline bool is_main_landmark(int index, int n_main = kMainLandmarks,
                             int n_total = kMainLandmarks + kSecondaryLandmarks) {
    return index % (n_total / n_main) == 0;
}

// Equal-angle boundary sampling about the region centroid, starting at
// angle 0, counter-clockwise.
Contour sample_landmarks(const GrayImage& mask, int n_main = kMainLandmarks,
                         int n_secondary = kSecondaryLandmarks);

// Point-distribution model in the Procrustes-normalized frame.
struct ShapeModel {
    std::vector<double> mean_shape;   // 2n interleaved (x0,y0,x1,y1,...)
    Matrix modes;                     // 2n x m, orthonormal columns
    std::vector<double> eigenvalues;  // m, descending

    int n_points() const { return int(mean_shape.size()) / 2; }
    int n_modes() const { return modes.cols; }
};

ShapeModel build_shape_model(const std::vector<Contour>& contours,
                             double variance_kept = 0.98);

// Similarity pose: p' = (a*p.x - b*p.y + tx, b*p.x + a*p.y + ty).
struct SimilarityPose {
    double a = 1.0, b = 0.0, tx = 0.0, ty = 0.0;
};

struct FitOptions {
    int iters = 30;
    int profile_len = 8;  // samples each side of the landmark, 1 px spacing
};

struct FitResult {
    Contour contour;
    std::vector<double> coefficients;  // clamped to +-3*sqrt(eigenvalue)
    SimilarityPose pose;
    int iterations = 0;
};

// Raised when the map carries no edge information anywhere; carries the
// unmodified initial contour.
struct no_edge_error : std::runtime_error {
    Contour init;
    explicit no_edge_error(Contour c)
        : std::runtime_error("fit_asm: prediction map is flat, no edges to fit"),
          init(std::move(c)) {}
};

// Iterative ASM fit on a prediction map: each landmark moves to the
// strongest directional-derivative response along its outward normal, then
// the shape is projected back into model space. `init` may be null, in
// which case the mean shape is posed at the 0.5-superlevel-set centroid.
FitResult fit_asm(const ShapeModel& model, const PredictionMap& map,
                  const Contour* init = nullptr, const FitOptions& opts = {});

// Even-odd rasterization at pixel centers.
GrayImage contour_to_mask(const Contour& c, int width, int height);

bool contour_is_simple(const Contour& c);

// Text format: one header line (n_points), then "x y" per line.
void save_contour(const Contour& c, const std::string& path);
Contour load_contour(const std::string& path);

void save_shape_model(const ShapeModel& model, const std::string& path);
ShapeModel load_shape_model(const std::string& path);

}  // namespace starseg
