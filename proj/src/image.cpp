#include "starseg/image.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>

#include "starseg/errors.hpp"

namespace starseg {

GrayImage::GrayImage(int w, int h, double fill) : width(w), height(h) {
    if (w < 1 || h < 1)
        throw std::invalid_argument("GrayImage: non-positive dimensions");
    data.assign(std::size_t(w) * h, fill);
}

double GrayImage::sample(double x, double y) const {
    if (!in_bounds(x, y)) return 0.0;
    int x0 = int(std::floor(x));
    int y0 = int(std::floor(y));
    if (x0 > width - 2) x0 = width - 2;
    if (y0 > height - 2) y0 = height - 2;
    if (x0 < 0) x0 = 0;
    if (y0 < 0) y0 = 0;
    double fx = x - x0;
    double fy = y - y0;
    double v00 = at(x0, y0);
    double v10 = (width > 1) ? at(x0 + 1, y0) : v00;
    double v01 = (height > 1) ? at(x0, y0 + 1) : v00;
    double v11 = (width > 1 && height > 1) ? at(x0 + 1, y0 + 1) : v00;
    double top = v00 + fx * (v10 - v00);
    double bot = v01 + fx * (v11 - v01);
    return top + fy * (bot - top);
}

namespace {

int read_pnm_token(std::istream& in) {
    // skips whitespace and '#' comments
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (!std::isspace(c)) {
            break;
        }
        c = in.get();
    }
    if (c == EOF) throw io_error("pgm: truncated header");
    int value = 0;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        c = in.get();
    }
    return value;
}

}  // namespace

GrayImage read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("pgm: cannot open " + path);
    char magic[2];
    in.read(magic, 2);
    if (!in || magic[0] != 'P' || magic[1] != '5')
        throw io_error("pgm: not a binary PGM: " + path);
    int w = read_pnm_token(in);
    int h = read_pnm_token(in);
    int maxval = read_pnm_token(in);
    if (maxval != 255)
        throw io_error("pgm: unsupported maxval in " + path);
    GrayImage img(w, h);
    std::vector<std::uint8_t> raw(std::size_t(w) * h);
    in.read(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size()));
    if (!in) throw io_error("pgm: truncated pixel data in " + path);
    for (std::size_t i = 0; i < raw.size(); ++i) img.data[i] = raw[i] / 255.0;
    return img;
}

void write_pgm(const GrayImage& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("pgm: cannot write " + path);
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    std::vector<std::uint8_t> raw(img.data.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        double v = img.data[i];
        if (v < 0.0) v = 0.0;
        if (v > 1.0) v = 1.0;
        raw[i] = std::uint8_t(std::lround(v * 255.0));
    }
    out.write(reinterpret_cast<const char*>(raw.data()), std::streamsize(raw.size()));
    if (!out) throw io_error("pgm: write failed for " + path);
}

}  // namespace starseg
