#include "starseg/fusion.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "starseg/errors.hpp"

namespace starseg {

bool PredictionMap::in_annulus(double x, double y) const {
    const double r = std::hypot(x - cx, y - cy);
    return r > 0.0 && r <= r_max;
}

ViewpointSet ViewpointSet::thirds() {
    const double third = 2.0 * std::numbers::pi / 3.0;
    return {{0.0, third, 2.0 * third}};
}

double default_r_max(const GrayImage& img) {
    return std::min(img.width, img.height) / 2.0;
}

namespace {

double resolve_r_max(const PolarConfig& cfg, const GrayImage& img) {
    return cfg.r_max > 0.0 ? cfg.r_max : default_r_max(img);
}

Matrix concat_bands(const BandSequence& img_bands, const BandSequence& ctx_bands) {
    const int t_len = img_bands.length();
    const int band_len = int(img_bands.bands[0].size());
    Matrix x(t_len, 2 * band_len);
    for (int t = 0; t < t_len; ++t) {
        std::memcpy(x.row(t), img_bands.bands[t].data(),
                    sizeof(double) * band_len);
        std::memcpy(x.row(t) + band_len, ctx_bands.bands[t].data(),
                    sizeof(double) * band_len);
    }
    return x;
}

}  // namespace

PredictionMap uniform_map(int width, int height, double value,
                          const PolarConfig& cfg) {
    PredictionMap m;
    m.map = GrayImage(width, height, 0.0);
    m.cx = (width - 1) / 2.0;
    m.cy = (height - 1) / 2.0;
    m.r_max = cfg.r_max > 0.0 ? cfg.r_max : std::min(width, height) / 2.0;
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            if (m.in_annulus(x, y)) m.map.at(x, y) = value;
    return m;
}

PredictionMap predict_view(const BiLstmModel& model, const GrayImage& img,
                           const PredictionMap& context, double offset, int s,
                           const PolarConfig& cfg) {
    if (context.map.width != img.width || context.map.height != img.height)
        throw std::invalid_argument("predict_view: context dims differ from image");
    const int band_len = s * cfg.n_radius;
    if (model.input_dim != 2 * band_len || model.output_dim != band_len)
        throw std::invalid_argument("predict_view: model dims do not match scale");

    const double cx = (img.width - 1) / 2.0;
    const double cy = (img.height - 1) / 2.0;
    const double r_max = resolve_r_max(cfg, img);

    PolarImage polar_img =
        serialize(img, cx, cy, cfg.n_angle, cfg.n_radius, r_max, offset);
    PolarImage polar_ctx =
        serialize(context.map, cx, cy, cfg.n_angle, cfg.n_radius, r_max, offset);

    BandSequence img_bands = partition(polar_img, s);
    BandSequence ctx_bands = partition(polar_ctx, s);

    Matrix x = concat_bands(img_bands, ctx_bands);
    ForwardCache cache = bilstm_forward(model, x);

    BandSequence out = img_bands;  // inherits geometry
    for (int t = 0; t < out.length(); ++t)
        out.bands[t].assign(cache.y.row(t), cache.y.row(t) + band_len);

    PredictionMap result;
    result.map = deserialize(assemble(out), img.width, img.height);
    result.cx = cx;
    result.cy = cy;
    result.r_max = r_max;
    for (double& v : result.map.data) v = std::clamp(v, 0.0, 1.0);
    return result;
}

PredictionMap fuse_views(const std::vector<PredictionMap>& maps) {
    if (maps.empty())
        throw std::invalid_argument("fuse_views: no maps");
    const auto& first = maps.front();
    for (const auto& m : maps)
        if (m.map.width != first.map.width || m.map.height != first.map.height)
            throw std::invalid_argument("fuse_views: dimension mismatch");

    PredictionMap out = first;
    if (maps.size() > 1) {
        for (std::size_t i = 1; i < maps.size(); ++i)
            for (std::size_t p = 0; p < out.map.data.size(); ++p)
                out.map.data[p] += maps[i].map.data[p];
        const double inv = 1.0 / double(maps.size());
        for (double& v : out.map.data) v = std::clamp(v * inv, 0.0, 1.0);
    }
    return out;
}

namespace {
constexpr char kMapMagic[8] = {'S', 'S', 'E', 'G', 'M', 'A', 'P', '1'};
}

void save_map(const PredictionMap& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("save_map: cannot write " + path);
    out.write(kMapMagic, 8);
    const std::uint32_t dims[2] = {std::uint32_t(m.map.width),
                                   std::uint32_t(m.map.height)};
    out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    const double geo[3] = {m.cx, m.cy, m.r_max};
    out.write(reinterpret_cast<const char*>(geo), sizeof(geo));
    out.write(reinterpret_cast<const char*>(m.map.data.data()),
              std::streamsize(m.map.data.size() * sizeof(double)));
    if (!out) throw io_error("save_map: write failed for " + path);
}

PredictionMap load_map(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("load_map: cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMapMagic, 8) != 0)
        throw io_error("load_map: bad magic in " + path);
    std::uint32_t dims[2];
    in.read(reinterpret_cast<char*>(dims), sizeof(dims));
    double geo[3];
    in.read(reinterpret_cast<char*>(geo), sizeof(geo));
    PredictionMap m;
    m.map = GrayImage(int(dims[0]), int(dims[1]));
    m.cx = geo[0];
    m.cy = geo[1];
    m.r_max = geo[2];
    in.read(reinterpret_cast<char*>(m.map.data.data()),
            std::streamsize(m.map.data.size() * sizeof(double)));
    if (!in) throw io_error("load_map: truncated file " + path);
    return m;
}

}  // namespace starseg
