#pragma once

#include <string>
#include <vector>

#include "starseg/image.hpp"
#include "starseg/shape_model.hpp"

namespace starseg {

struct OverlapMetrics {
    double dice = 0.0;
    double jaccard = 0.0;
    double conformity = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    bool empty_prediction = false;  // precision undefined, reported as 0
};

struct MetricReport {
    double dice = 0.0;
    double adb = 0.0;
    double conformity = 0.0;
    double jaccard = 0.0;
    double precision = 0.0;
    double recall = 0.0;
};

// Pixel-count overlap metrics; masks are binary (threshold 0.5).
OverlapMetrics overlap_metrics(const GrayImage& pred, const GrayImage& truth);

// Symmetric mean nearest-point distance, in pixels.
double adb(const std::vector<Point>& pred_boundary,
           const std::vector<Point>& truth_boundary);

// 8-connected boundary: foreground pixels with a 4-neighbor background
// (image border counts as background).
std::vector<Point> boundary_points(const GrayImage& mask);

MetricReport evaluate_pair(const GrayImage& pred, const GrayImage& truth);

// Unweighted mean of per-image metrics.
MetricReport aggregate(const std::vector<MetricReport>& reports);

// Table row in the column order Dice, Adb, Conform, Jaccard, Precision, Recall.
std::string format_report_tsv(const MetricReport& r);

}  // namespace starseg
