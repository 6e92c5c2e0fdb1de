#include "starseg/geometry.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace starseg {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

PolarImage serialize(const GrayImage& img, double cx, double cy, int n_angle,
                     int n_radius, double r_max, double offset) {
    if (n_angle < 4 || n_radius < 4)
        throw std::invalid_argument("serialize: n_angle and n_radius must be >= 4");
    if (r_max <= 0.0)
        throw std::invalid_argument("serialize: r_max must be positive");
    if (!img.in_bounds(cx, cy))
        throw std::invalid_argument("serialize: center outside image bounds");

    PolarImage polar;
    polar.n_angle = n_angle;
    polar.n_radius = n_radius;
    polar.cx = cx;
    polar.cy = cy;
    polar.r_max = r_max;
    polar.viewpoint_offset = offset;
    polar.data.resize(std::size_t(n_angle) * n_radius);

#pragma omp parallel for
    for (int i = 0; i < n_angle; ++i) {
        double theta = offset + kTwoPi * i / n_angle;
        double c = std::cos(theta);
        double s = std::sin(theta);
        for (int j = 0; j < n_radius; ++j) {
            double r = r_max * (j + 0.5) / n_radius;
            polar.at(i, j) = img.sample(cx + r * c, cy + r * s);
        }
    }
    return polar;
}

GrayImage deserialize(const PolarImage& polar, int width, int height) {
    if (width < 1 || height < 1)
        throw std::invalid_argument("deserialize: non-positive dimensions");
    if (polar.n_angle < 1 || polar.n_radius < 1)
        throw std::invalid_argument("deserialize: invalid polar image");

    GrayImage img(width, height);
    const int na = polar.n_angle;
    const int nr = polar.n_radius;

#pragma omp parallel for
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            double dx = x - polar.cx;
            double dy = y - polar.cy;
            double r = std::hypot(dx, dy);
            if (r <= 0.0 || r > polar.r_max) continue;

            double theta = std::atan2(dy, dx) - polar.viewpoint_offset;
            theta = std::fmod(theta, kTwoPi);
            if (theta < 0.0) theta += kTwoPi;

            double row_f = theta * na / kTwoPi;
            double col_f = r * nr / polar.r_max - 0.5;

            int i0 = int(std::floor(row_f));
            double fi = row_f - i0;
            int i1 = (i0 + 1) % na;  // wrap across the seam
            i0 %= na;

            int j0 = int(std::floor(col_f));
            double fj = col_f - j0;
            if (j0 < 0) { j0 = 0; fj = 0.0; }
            int j1 = j0 + 1;
            if (j1 > nr - 1) { j1 = nr - 1; j0 = nr - 1; fj = 0.0; }

            double v0 = polar.at(i0, j0) + fj * (polar.at(i0, j1) - polar.at(i0, j0));
            double v1 = polar.at(i1, j0) + fj * (polar.at(i1, j1) - polar.at(i1, j0));
            img.at(x, y) = v0 + fi * (v1 - v0);
        }
    }
    return img;
}

BandSequence partition(const PolarImage& polar, int s) {
    if (s < 1 || polar.n_angle % s != 0)
        throw std::invalid_argument("partition: scale must divide n_angle");

    BandSequence seq;
    seq.scale = s;
    seq.n_radius = polar.n_radius;
    seq.cx = polar.cx;
    seq.cy = polar.cy;
    seq.r_max = polar.r_max;
    seq.viewpoint_offset = polar.viewpoint_offset;

    const int t_count = polar.n_angle / s;
    seq.bands.resize(t_count);
    const std::size_t band_len = std::size_t(s) * polar.n_radius;
    for (int t = 0; t < t_count; ++t) {
        auto begin = polar.data.begin() + std::size_t(t) * band_len;
        seq.bands[t].assign(begin, begin + band_len);
    }
    return seq;
}

PolarImage assemble(const BandSequence& seq) {
    if (seq.bands.empty())
        throw std::invalid_argument("assemble: empty band sequence");
    const std::size_t band_len = std::size_t(seq.scale) * seq.n_radius;
    for (const auto& b : seq.bands)
        if (b.size() != band_len)
            throw std::invalid_argument("assemble: ragged band lengths");

    PolarImage polar;
    polar.n_angle = seq.scale * int(seq.bands.size());
    polar.n_radius = seq.n_radius;
    polar.cx = seq.cx;
    polar.cy = seq.cy;
    polar.r_max = seq.r_max;
    polar.viewpoint_offset = seq.viewpoint_offset;
    polar.data.reserve(std::size_t(polar.n_angle) * polar.n_radius);
    for (const auto& b : seq.bands)
        polar.data.insert(polar.data.end(), b.begin(), b.end());
    return polar;
}

}  // namespace starseg
