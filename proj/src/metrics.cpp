#include "starseg/metrics.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace starseg {

OverlapMetrics overlap_metrics(const GrayImage& pred, const GrayImage& truth) {
    if (pred.width != truth.width || pred.height != truth.height)
        throw std::invalid_argument("overlap_metrics: dimension mismatch");

    long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const bool p = pred.data[i] > 0.5;
        const bool t = truth.data[i] > 0.5;
        tp += p && t;
        fp += p && !t;
        fn += !p && t;
    }
    if (tp + fn == 0)
        throw std::invalid_argument("overlap_metrics: empty truth mask");

    OverlapMetrics m;
    m.dice = 2.0 * tp / double(2 * tp + fp + fn);
    m.jaccard = tp / double(tp + fp + fn);
    m.recall = tp / double(tp + fn);
    if (tp + fp == 0) {
        m.precision = 0.0;
        m.empty_prediction = true;
    } else {
        m.precision = tp / double(tp + fp);
    }
    m.conformity = (m.dice > 0.0) ? (3.0 * m.dice - 2.0) / m.dice
                                  : -std::numeric_limits<double>::infinity();
    return m;
}

double adb(const std::vector<Point>& pred_boundary,
           const std::vector<Point>& truth_boundary) {
    if (pred_boundary.empty() || truth_boundary.empty())
        throw std::invalid_argument("adb: empty boundary point set");

    auto mean_nearest = [](const std::vector<Point>& from,
                           const std::vector<Point>& to) {
        double sum = 0.0;
#pragma omp parallel for reduction(+ : sum) schedule(static)
        for (int i = 0; i < int(from.size()); ++i) {
            double best = std::numeric_limits<double>::max();
            for (const Point& q : to) {
                const double d = std::hypot(from[i].x - q.x, from[i].y - q.y);
                if (d < best) best = d;
            }
            sum += best;
        }
        return sum / double(from.size());
    };
    return 0.5 * (mean_nearest(pred_boundary, truth_boundary) +
                  mean_nearest(truth_boundary, pred_boundary));
}

std::vector<Point> boundary_points(const GrayImage& mask) {
    std::vector<Point> pts;
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            if (mask.at(x, y) <= 0.5) continue;
            const bool edge = x == 0 || x == mask.width - 1 || y == 0 ||
                              y == mask.height - 1 || mask.at(x - 1, y) <= 0.5 ||
                              mask.at(x + 1, y) <= 0.5 || mask.at(x, y - 1) <= 0.5 ||
                              mask.at(x, y + 1) <= 0.5;
            if (edge) pts.push_back({double(x), double(y)});
        }
    }
    return pts;
}

MetricReport evaluate_pair(const GrayImage& pred, const GrayImage& truth) {
    const OverlapMetrics om = overlap_metrics(pred, truth);
    MetricReport r;
    r.dice = om.dice;
    r.jaccard = om.jaccard;
    r.conformity = om.conformity;
    r.precision = om.precision;
    r.recall = om.recall;
    const auto pb = boundary_points(pred);
    const auto tb = boundary_points(truth);
    r.adb = (pb.empty() || tb.empty())
                ? std::numeric_limits<double>::infinity()
                : adb(pb, tb);
    return r;
}

MetricReport aggregate(const std::vector<MetricReport>& reports) {
    if (reports.empty())
        throw std::invalid_argument("aggregate: no reports");
    MetricReport sum;
    for (const auto& r : reports) {
        sum.dice += r.dice;
        sum.adb += r.adb;
        sum.conformity += r.conformity;
        sum.jaccard += r.jaccard;
        sum.precision += r.precision;
        sum.recall += r.recall;
    }
    const double inv = 1.0 / double(reports.size());
    sum.dice *= inv;
    sum.adb *= inv;
    sum.conformity *= inv;
    sum.jaccard *= inv;
    sum.precision *= inv;
    sum.recall *= inv;
    return sum;
}

std::string format_report_tsv(const MetricReport& r) {
    std::ostringstream ss;
    ss.precision(6);
    ss << std::fixed << r.dice << "\t" << r.adb << "\t" << r.conformity << "\t"
       << r.jaccard << "\t" << r.precision << "\t" << r.recall;
    return ss.str();
}

}  // namespace starseg
