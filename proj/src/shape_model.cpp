#include "starseg/shape_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "starseg/errors.hpp"

namespace starseg {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Point shape_centroid(const std::vector<double>& shape) {
    const int n = int(shape.size()) / 2;
    double sx = 0.0, sy = 0.0;
    for (int i = 0; i < n; ++i) {
        sx += shape[2 * i];
        sy += shape[2 * i + 1];
    }
    return {sx / n, sy / n};
}

void center_shape(std::vector<double>& shape) {
    const Point c = shape_centroid(shape);
    const int n = int(shape.size()) / 2;
    for (int i = 0; i < n; ++i) {
        shape[2 * i] -= c.x;
        shape[2 * i + 1] -= c.y;
    }
}

double shape_norm(const std::vector<double>& shape) {
    double sq = 0.0;
    for (double v : shape) sq += v * v;
    return std::sqrt(sq);
}

// Rotates centered `shape` onto centered `ref` (least squares).
void rotate_to(std::vector<double>& shape, const std::vector<double>& ref) {
    const int n = int(shape.size()) / 2;
    double dot = 0.0, cross = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = shape[2 * i], y = shape[2 * i + 1];
        const double xr = ref[2 * i], yr = ref[2 * i + 1];
        dot += x * xr + y * yr;
        cross += x * yr - y * xr;
    }
    const double mag = std::hypot(dot, cross);
    if (mag <= 0.0) return;
    const double ca = dot / mag, sa = cross / mag;
    for (int i = 0; i < n; ++i) {
        const double x = shape[2 * i], y = shape[2 * i + 1];
        shape[2 * i] = ca * x - sa * y;
        shape[2 * i + 1] = sa * x + ca * y;
    }
}

Point apply_pose(const SimilarityPose& p, double x, double y) {
    return {p.a * x - p.b * y + p.tx, p.b * x + p.a * y + p.ty};
}

Point apply_pose_inverse(const SimilarityPose& p, double x, double y) {
    const double s2 = p.a * p.a + p.b * p.b;
    const double dx = x - p.tx, dy = y - p.ty;
    return {(p.a * dx + p.b * dy) / s2, (p.a * dy - p.b * dx) / s2};
}

// Least-squares similarity transform mapping `src` onto `dst`.
SimilarityPose fit_pose(const std::vector<double>& src,
                        const std::vector<double>& dst) {
    const int n = int(src.size()) / 2;
    const Point cs = shape_centroid(src);
    const Point cd = shape_centroid(dst);
    double dot = 0.0, cross = 0.0, ssq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double sx = src[2 * i] - cs.x, sy = src[2 * i + 1] - cs.y;
        const double dx = dst[2 * i] - cd.x, dy = dst[2 * i + 1] - cd.y;
        dot += sx * dx + sy * dy;
        cross += sx * dy - sy * dx;
        ssq += sx * sx + sy * sy;
    }
    SimilarityPose p;
    if (ssq > 0.0) {
        p.a = dot / ssq;
        p.b = cross / ssq;
    }
    p.tx = cd.x - (p.a * cs.x - p.b * cs.y);
    p.ty = cd.y - (p.b * cs.x + p.a * cs.y);
    return p;
}

}  // namespace

Contour sample_landmarks(const GrayImage& mask, int n_main, int n_secondary) {
    const int n = n_main + n_secondary;
    if (n < 3) throw std::invalid_argument("sample_landmarks: too few landmarks");

    double sx = 0.0, sy = 0.0;
    long count = 0;
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            if (mask.at(x, y) > 0.5) {
                sx += x;
                sy += y;
                ++count;
            }
    if (count == 0)
        throw std::domain_error("sample_landmarks: empty mask");
    const double cx = sx / count, cy = sy / count;
    if (mask.sample(cx, cy) <= 0.5)
        throw std::domain_error("sample_landmarks: centroid outside region");

    const double r_limit = std::hypot(mask.width, mask.height);
    Contour contour;
    contour.points.resize(n);
    for (int l = 0; l < n; ++l) {
        const double theta = kTwoPi * l / n;
        const double dx = std::cos(theta), dy = std::sin(theta);
        // march outward until the first inside->outside transition
        double r_in = 0.0, r_out = -1.0;
        for (double r = 0.25; r <= r_limit; r += 0.25) {
            if (mask.sample(cx + r * dx, cy + r * dy) > 0.5) {
                r_in = r;
            } else {
                r_out = r;
                break;
            }
        }
        if (r_out < 0.0) r_out = r_limit;
        for (int it = 0; it < 40; ++it) {
            const double mid = 0.5 * (r_in + r_out);
            if (mask.sample(cx + mid * dx, cy + mid * dy) > 0.5)
                r_in = mid;
            else
                r_out = mid;
        }
        const double r = 0.5 * (r_in + r_out);
        contour.points[l] = {cx + r * dx, cy + r * dy};
    }
    return contour;
}

ShapeModel build_shape_model(const std::vector<Contour>& contours,
                             double variance_kept) {
    if (contours.size() < 2)
        throw std::invalid_argument("build_shape_model: need at least 2 contours");
    const int n = contours.front().size();
    for (const auto& c : contours)
        if (c.size() != n)
            throw std::invalid_argument("build_shape_model: unequal point counts");

    // generalized Procrustes: center, unit scale, iterative rotation alignment
    std::vector<std::vector<double>> shapes(contours.size());
    for (std::size_t k = 0; k < contours.size(); ++k) {
        auto& s = shapes[k];
        s.resize(2 * std::size_t(n));
        for (int i = 0; i < n; ++i) {
            s[2 * i] = contours[k].points[i].x;
            s[2 * i + 1] = contours[k].points[i].y;
        }
        center_shape(s);
        const double norm = shape_norm(s);
        if (norm > 0.0)
            for (double& v : s) v /= norm;
    }

    std::vector<double> mean = shapes.front();
    for (int pass = 0; pass < 10; ++pass) {
        for (auto& s : shapes) rotate_to(s, mean);
        std::vector<double> new_mean(mean.size(), 0.0);
        for (const auto& s : shapes)
            for (std::size_t i = 0; i < s.size(); ++i) new_mean[i] += s[i];
        for (double& v : new_mean) v /= double(shapes.size());
        center_shape(new_mean);
        const double norm = shape_norm(new_mean);
        if (norm > 0.0)
            for (double& v : new_mean) v /= norm;
        mean = std::move(new_mean);
    }

    const int dim = 2 * n;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd mu = Eigen::Map<const Eigen::VectorXd>(mean.data(), dim);
    for (const auto& s : shapes) {
        Eigen::VectorXd d =
            Eigen::Map<const Eigen::VectorXd>(s.data(), dim) - mu;
        cov += d * d.transpose();
    }
    cov /= double(shapes.size() - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    Eigen::VectorXd evals = solver.eigenvalues();  // ascending
    Eigen::MatrixXd evecs = solver.eigenvectors();

    const double total = std::max(0.0, evals.sum());
    const double floor_eval = std::max(1e-12, 1e-10 * total);

    std::vector<int> keep;
    double cum = 0.0;
    for (int i = dim - 1; i >= 0; --i) {
        if (evals(i) <= floor_eval) break;
        keep.push_back(i);
        cum += evals(i);
        if (total > 0.0 && cum >= variance_kept * total) break;
    }

    ShapeModel model;
    model.mean_shape = mean;
    model.modes = Matrix(dim, int(keep.size()));
    model.eigenvalues.resize(keep.size());
    for (std::size_t m = 0; m < keep.size(); ++m) {
        model.eigenvalues[m] = evals(keep[m]);
        for (int i = 0; i < dim; ++i) model.modes(i, int(m)) = evecs(i, keep[m]);
    }
    return model;
}

GrayImage contour_to_mask(const Contour& c, int width, int height) {
    if (c.size() < 3)
        throw std::invalid_argument("contour_to_mask: need at least 3 points");
    if (!contour_is_simple(c))
        throw std::invalid_argument("contour_to_mask: self-intersecting contour");

    GrayImage mask(width, height, 0.0);
    const int n = c.size();
    std::vector<double> crossings;
    for (int y = 0; y < height; ++y) {
        crossings.clear();
        for (int i = 0; i < n; ++i) {
            const Point& p = c.points[i];
            const Point& q = c.points[(i + 1) % n];
            if ((p.y <= y && q.y > y) || (q.y <= y && p.y > y))
                crossings.push_back(p.x + (y - p.y) * (q.x - p.x) / (q.y - p.y));
        }
        std::sort(crossings.begin(), crossings.end());
        for (std::size_t k = 0; k + 1 < crossings.size(); k += 2) {
            int x0 = int(std::ceil(crossings[k]));
            int x1 = int(std::ceil(crossings[k + 1])) - 1;
            x0 = std::max(x0, 0);
            x1 = std::min(x1, width - 1);
            for (int x = x0; x <= x1; ++x) mask.at(x, y) = 1.0;
        }
    }
    return mask;
}

namespace {

bool segments_properly_intersect(const Point& a, const Point& b, const Point& c,
                                 const Point& d) {
    auto orient = [](const Point& p, const Point& q, const Point& r) {
        const double v = (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x);
        return (v > 0) - (v < 0);
    };
    const int o1 = orient(a, b, c), o2 = orient(a, b, d);
    const int o3 = orient(c, d, a), o4 = orient(c, d, b);
    return o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0;
}

}  // namespace

bool contour_is_simple(const Contour& c) {
    const int n = c.size();
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            // skip adjacent edges (shared endpoint)
            if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
            if (segments_properly_intersect(c.points[i], c.points[(i + 1) % n],
                                            c.points[j], c.points[(j + 1) % n]))
                return false;
        }
    }
    return true;
}

FitResult fit_asm(const ShapeModel& model, const PredictionMap& map,
                  const Contour* init, const FitOptions& opts) {
    const int n = model.n_points();
    if (n < 3)
        throw std::invalid_argument("fit_asm: empty shape model");
    if (map.map.width < 1 || map.map.height < 1)
        throw std::invalid_argument("fit_asm: invalid map");

    const int m = model.n_modes();
    std::vector<double> coeffs(m, 0.0);
    SimilarityPose pose;

    if (init != nullptr) {
        if (init->size() != n)
            throw std::invalid_argument("fit_asm: init point count mismatch");
        std::vector<double> target(2 * std::size_t(n));
        for (int i = 0; i < n; ++i) {
            target[2 * i] = init->points[i].x;
            target[2 * i + 1] = init->points[i].y;
        }
        pose = fit_pose(model.mean_shape, target);
    } else {
        // pose the mean at the 0.5-superlevel set
        double sx = 0.0, sy = 0.0;
        long area = 0;
        for (int y = 0; y < map.map.height; ++y)
            for (int x = 0; x < map.map.width; ++x)
                if (map.map.at(x, y) >= 0.5 && map.in_annulus(x, y)) {
                    sx += x;
                    sy += y;
                    ++area;
                }
        double ccx, ccy, r_eq;
        if (area > 0) {
            ccx = sx / area;
            ccy = sy / area;
            r_eq = std::sqrt(double(area) / std::numbers::pi);
        } else {
            ccx = map.cx;
            ccy = map.cy;
            r_eq = map.r_max / 3.0;
        }
        double rho = 0.0;
        for (int i = 0; i < n; ++i)
            rho += std::hypot(model.mean_shape[2 * i], model.mean_shape[2 * i + 1]);
        rho /= n;
        pose.a = (rho > 0.0) ? r_eq / rho : 1.0;
        pose.b = 0.0;
        pose.tx = ccx;
        pose.ty = ccy;
    }

    auto current_points = [&](std::vector<double>& out) {
        out.resize(2 * std::size_t(n));
        for (int i = 0; i < 2 * n; ++i) {
            double v = model.mean_shape[i];
            for (int k = 0; k < m; ++k) v += model.modes(i, k) * coeffs[k];
            out[i] = v;
        }
        for (int i = 0; i < n; ++i) {
            const Point p = apply_pose(pose, out[2 * i], out[2 * i + 1]);
            out[2 * i] = p.x;
            out[2 * i + 1] = p.y;
        }
    };

    std::vector<double> pts;
    current_points(pts);

    Contour init_contour;
    init_contour.points.resize(n);
    for (int i = 0; i < n; ++i)
        init_contour.points[i] = {pts[2 * i], pts[2 * i + 1]};

    {
        const auto [lo, hi] =
            std::minmax_element(map.map.data.begin(), map.map.data.end());
        if (*hi - *lo < 1e-12) throw no_edge_error(init_contour);
    }

    const int L = opts.profile_len;
    std::vector<double> profile(2 * L + 1);
    std::vector<double> targets(2 * std::size_t(n));
    std::vector<double> model_frame(2 * std::size_t(n));
    int iterations = 0;

    for (int iter = 0; iter < opts.iters; ++iter) {
        ++iterations;
        const Point centroid = shape_centroid(pts);
        double max_response = 0.0;

        for (int i = 0; i < n; ++i) {
            const int ip = (i + n - 1) % n;
            const int in_ = (i + 1) % n;
            double tx = pts[2 * in_] - pts[2 * ip];
            double ty = pts[2 * in_ + 1] - pts[2 * ip + 1];
            const double tlen = std::hypot(tx, ty);
            double nx, ny;
            if (tlen > 0.0) {
                nx = -ty / tlen;
                ny = tx / tlen;
            } else {
                nx = 1.0;
                ny = 0.0;
            }
            // orient outward
            if (nx * (pts[2 * i] - centroid.x) + ny * (pts[2 * i + 1] - centroid.y) < 0.0) {
                nx = -nx;
                ny = -ny;
            }

            for (int k = -L; k <= L; ++k)
                profile[k + L] =
                    map.map.sample(pts[2 * i] + k * nx, pts[2 * i + 1] + k * ny);

            // strongest directional-derivative magnitude, nearest offset wins ties
            double best_mag = 0.0;
            int best_k = 0;
            for (int dist = 0; dist <= L - 1; ++dist) {
                for (int sign = 0; sign < 2; ++sign) {
                    const int k = sign == 0 ? dist : -dist;
                    if (sign == 1 && dist == 0) continue;
                    if (k <= -L || k >= L) continue;
                    const double d =
                        0.5 * (profile[k + 1 + L] - profile[k - 1 + L]);
                    if (std::abs(d) > best_mag) {
                        best_mag = std::abs(d);
                        best_k = k;
                    }
                }
            }
            max_response = std::max(max_response, best_mag);
            const double step = (best_mag > 1e-9) ? best_k : 0.0;
            targets[2 * i] = pts[2 * i] + step * nx;
            targets[2 * i + 1] = pts[2 * i + 1] + step * ny;
        }

        if (iter == 0 && max_response < 1e-9) throw no_edge_error(init_contour);

        // re-fit pose, then project the proposal into model space
        for (int i = 0; i < 2 * n; ++i) {
            double v = model.mean_shape[i];
            for (int k = 0; k < m; ++k) v += model.modes(i, k) * coeffs[k];
            model_frame[i] = v;
        }
        pose = fit_pose(model_frame, targets);

        std::vector<double> residual(2 * std::size_t(n));
        for (int i = 0; i < n; ++i) {
            const Point p = apply_pose_inverse(pose, targets[2 * i], targets[2 * i + 1]);
            residual[2 * i] = p.x - model.mean_shape[2 * i];
            residual[2 * i + 1] = p.y - model.mean_shape[2 * i + 1];
        }
        for (int k = 0; k < m; ++k) {
            double c = 0.0;
            for (int i = 0; i < 2 * n; ++i) c += model.modes(i, k) * residual[i];
            const double bound = 3.0 * std::sqrt(std::max(0.0, model.eigenvalues[k]));
            coeffs[k] = std::clamp(c, -bound, bound);
        }

        std::vector<double> new_pts;
        {
            std::vector<double> tmp(2 * std::size_t(n));
            for (int i = 0; i < 2 * n; ++i) {
                double v = model.mean_shape[i];
                for (int k = 0; k < m; ++k) v += model.modes(i, k) * coeffs[k];
                tmp[i] = v;
            }
            new_pts.resize(2 * std::size_t(n));
            for (int i = 0; i < n; ++i) {
                const Point p = apply_pose(pose, tmp[2 * i], tmp[2 * i + 1]);
                new_pts[2 * i] = p.x;
                new_pts[2 * i + 1] = p.y;
            }
        }

        double movement = 0.0;
        for (int i = 0; i < n; ++i)
            movement += std::hypot(new_pts[2 * i] - pts[2 * i],
                                   new_pts[2 * i + 1] - pts[2 * i + 1]);
        movement /= n;
        pts = std::move(new_pts);
        if (movement < 0.1) break;
    }

    FitResult result;
    result.contour.points.resize(n);
    for (int i = 0; i < n; ++i)
        result.contour.points[i] = {pts[2 * i], pts[2 * i + 1]};
    result.coefficients = coeffs;
    result.pose = pose;
    result.iterations = iterations;
    return result;
}

void save_contour(const Contour& c, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("save_contour: cannot write " + path);
    out << c.size() << "\n" << std::setprecision(17);
    for (const Point& p : c.points) out << p.x << " " << p.y << "\n";
    if (!out) throw io_error("save_contour: write failed for " + path);
}

Contour load_contour(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("load_contour: cannot open " + path);
    int n = 0;
    in >> n;
    if (!in || n < 3) throw io_error("load_contour: bad header in " + path);
    Contour c;
    c.points.resize(n);
    for (int i = 0; i < n; ++i) in >> c.points[i].x >> c.points[i].y;
    if (!in) throw io_error("load_contour: truncated file " + path);
    return c;
}

namespace {
constexpr char kAsmMagic[8] = {'S', 'S', 'E', 'G', 'A', 'S', 'M', '1'};
}

void save_shape_model(const ShapeModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("save_shape_model: cannot write " + path);
    out.write(kAsmMagic, 8);
    const std::uint32_t header[3] = {1u, std::uint32_t(model.mean_shape.size()),
                                     std::uint32_t(model.n_modes())};
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    out.write(reinterpret_cast<const char*>(model.mean_shape.data()),
              std::streamsize(model.mean_shape.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(model.modes.v.data()),
              std::streamsize(model.modes.v.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(model.eigenvalues.data()),
              std::streamsize(model.eigenvalues.size() * sizeof(double)));
    if (!out) throw io_error("save_shape_model: write failed for " + path);
}

ShapeModel load_shape_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("load_shape_model: cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kAsmMagic, 8) != 0)
        throw io_error("load_shape_model: bad magic in " + path);
    std::uint32_t header[3];
    in.read(reinterpret_cast<char*>(header), sizeof(header));
    if (!in || header[0] != 1)
        throw io_error("load_shape_model: unsupported version in " + path);
    ShapeModel model;
    model.mean_shape.resize(header[1]);
    model.modes = Matrix(int(header[1]), int(header[2]));
    model.eigenvalues.resize(header[2]);
    in.read(reinterpret_cast<char*>(model.mean_shape.data()),
            std::streamsize(model.mean_shape.size() * sizeof(double)));
    in.read(reinterpret_cast<char*>(model.modes.v.data()),
            std::streamsize(model.modes.v.size() * sizeof(double)));
    in.read(reinterpret_cast<char*>(model.eigenvalues.data()),
            std::streamsize(model.eigenvalues.size() * sizeof(double)));
    if (!in) throw io_error("load_shape_model: truncated file " + path);
    return model;
}

}  // namespace starseg
