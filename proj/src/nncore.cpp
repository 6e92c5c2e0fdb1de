#include "starseg/nncore.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

#include "starseg/errors.hpp"
#include "starseg/kernels.hpp"

namespace starseg {

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_model(const BiLstmModel& m) {
    const int h4 = 4 * m.hidden;
    if (m.hidden < 1 || m.input_dim < 1 || m.output_dim < 1)
        throw std::invalid_argument("bilstm: non-positive dimensions");
    auto bad = [&](const LstmParams& p) {
        return p.w_x.rows != m.input_dim || p.w_x.cols != h4 ||
               p.w_h.rows != m.hidden || p.w_h.cols != h4 ||
               int(p.b.size()) != h4;
    };
    if (bad(m.fwd) || bad(m.bwd) || m.w_fy.rows != m.hidden ||
        m.w_fy.cols != m.output_dim || m.w_by.rows != m.hidden ||
        m.w_by.cols != m.output_dim || int(m.b_y.size()) != m.output_dim)
        throw std::invalid_argument("bilstm: inconsistent parameter shapes");
}

// Applies the gate nonlinearities to pre-activations `a` (length 4H) and
// advances the cell state.
void apply_gates(const double* a, const double* c_prev, int hidden,
                 double* gates_out, double* c_out, double* tanh_c_out,
                 double* h_out) {
    for (int u = 0; u < hidden; ++u) {
        double gi = sigmoid(a[u]);
        double gf = sigmoid(a[hidden + u]);
        double gg = std::tanh(a[2 * hidden + u]);
        double go = sigmoid(a[3 * hidden + u]);
        double c = gf * c_prev[u] + gi * gg;
        double tc = std::tanh(c);
        gates_out[u] = gi;
        gates_out[hidden + u] = gf;
        gates_out[2 * hidden + u] = gg;
        gates_out[3 * hidden + u] = go;
        c_out[u] = c;
        tanh_c_out[u] = tc;
        h_out[u] = go * tc;
    }
}

// Runs one LSTM stream over the cached input projection. `reverse` selects
// the time direction; all caches are stored in sequence order.
void run_stream(const LstmParams& params, const Matrix& xa, int hidden,
                bool reverse, StreamCache& cache) {
    const int t_len = xa.rows;
    const int h4 = 4 * hidden;
    cache.gates = Matrix(t_len, h4);
    cache.c = Matrix(t_len, hidden);
    cache.tanh_c = Matrix(t_len, hidden);
    cache.h = Matrix(t_len, hidden);

    std::vector<double> a(h4);
    std::vector<double> zero_state(hidden, 0.0);
    for (int s = 0; s < t_len; ++s) {
        const int t = reverse ? t_len - 1 - s : s;
        const int t_prev = reverse ? t + 1 : t - 1;
        const double* h_prev = (s == 0) ? zero_state.data() : cache.h.row(t_prev);
        const double* c_prev = (s == 0) ? zero_state.data() : cache.c.row(t_prev);

        std::memcpy(a.data(), xa.row(t), sizeof(double) * h4);
        kernels::gemm(h_prev, params.w_h.v.data(), a.data(), 1, hidden, h4, true);
        for (int j = 0; j < h4; ++j) a[j] += params.b[j];

        apply_gates(a.data(), c_prev, hidden, cache.gates.row(t), cache.c.row(t),
                    cache.tanh_c.row(t), cache.h.row(t));
    }
}

// BPTT through one stream. Accumulates parameter gradients and returns
// nothing; input gradients are not needed.
void stream_backward(const LstmParams& params, const Matrix& x,
                     const StreamCache& cache, const Matrix& dh_out, int hidden,
                     bool reverse, LstmParams& grads) {
    const int t_len = x.rows;
    const int h4 = 4 * hidden;

    Matrix da_all(t_len, h4);
    std::vector<double> dh(hidden), dc(hidden, 0.0), da(h4), dh_rec(hidden, 0.0);
    std::vector<double> zero_state(hidden, 0.0);

    for (int s = t_len - 1; s >= 0; --s) {
        const int t = reverse ? t_len - 1 - s : s;
        const int t_prev = reverse ? t + 1 : t - 1;
        const double* h_prev = (s == 0) ? zero_state.data() : cache.h.row(t_prev);
        const double* c_prev = (s == 0) ? zero_state.data() : cache.c.row(t_prev);

        const double* g = cache.gates.row(t);
        const double* tc = cache.tanh_c.row(t);
        for (int u = 0; u < hidden; ++u)
            dh[u] = dh_out(t, u) + dh_rec[u];

        for (int u = 0; u < hidden; ++u) {
            const double gi = g[u];
            const double gf = g[hidden + u];
            const double gg = g[2 * hidden + u];
            const double go = g[3 * hidden + u];
            double dcu = dc[u] + dh[u] * go * (1.0 - tc[u] * tc[u]);
            const double dgo = dh[u] * tc[u];
            const double dgi = dcu * gg;
            const double dgg = dcu * gi;
            const double dgf = dcu * c_prev[u];
            da[u] = dgi * gi * (1.0 - gi);
            da[hidden + u] = dgf * gf * (1.0 - gf);
            da[2 * hidden + u] = dgg * (1.0 - gg * gg);
            da[3 * hidden + u] = dgo * go * (1.0 - go);
            dc[u] = dcu * gf;  // carried to the previous step
        }

        std::memcpy(da_all.row(t), da.data(), sizeof(double) * h4);
        for (int j = 0; j < h4; ++j) grads.b[j] += da[j];
        // dW_h += h_prev^T da
        for (int u = 0; u < hidden; ++u) {
            const double hv = h_prev[u];
            double* row = grads.w_h.row(u);
            for (int j = 0; j < h4; ++j) row[j] += hv * da[j];
        }
        kernels::gemm_nt(da.data(), params.w_h.v.data(), dh_rec.data(), 1, h4,
                         hidden, false);
    }

    // dW_x += x^T dA, batched over all timesteps.
    kernels::gemm_tn(x.v.data(), da_all.v.data(), grads.w_x.v.data(),
                     x.cols, t_len, h4);
}

}  // namespace

BiLstmModel zeros_like(const BiLstmModel& m) {
    BiLstmModel z;
    z.input_dim = m.input_dim;
    z.hidden = m.hidden;
    z.output_dim = m.output_dim;
    const int h4 = 4 * m.hidden;
    z.fwd.w_x = Matrix(m.input_dim, h4);
    z.fwd.w_h = Matrix(m.hidden, h4);
    z.fwd.b.assign(h4, 0.0);
    z.bwd = z.fwd;
    z.w_fy = Matrix(m.hidden, m.output_dim);
    z.w_by = Matrix(m.hidden, m.output_dim);
    z.b_y.assign(m.output_dim, 0.0);
    return z;
}

std::vector<std::pair<std::string, std::vector<double>*>> param_blocks(BiLstmModel& m) {
    return {
        {"fwd.w_x", &m.fwd.w_x.v}, {"fwd.w_h", &m.fwd.w_h.v}, {"fwd.b", &m.fwd.b},
        {"bwd.w_x", &m.bwd.w_x.v}, {"bwd.w_h", &m.bwd.w_h.v}, {"bwd.b", &m.bwd.b},
        {"w_fy", &m.w_fy.v},       {"w_by", &m.w_by.v},       {"b_y", &m.b_y},
    };
}

std::vector<std::pair<std::string, const std::vector<double>*>> param_blocks(
    const BiLstmModel& m) {
    std::vector<std::pair<std::string, const std::vector<double>*>> out;
    for (auto& [name, vec] : param_blocks(const_cast<BiLstmModel&>(m)))
        out.emplace_back(name, vec);
    return out;
}

std::pair<std::vector<double>, std::vector<double>> lstm_cell(
    const LstmParams& params, const std::vector<double>& x_t,
    const std::vector<double>& h_prev, const std::vector<double>& c_prev) {
    const int input_dim = params.w_x.rows;
    const int h4 = params.w_x.cols;
    const int hidden = h4 / 4;
    if (int(x_t.size()) != input_dim || int(h_prev.size()) != hidden ||
        int(c_prev.size()) != hidden || params.w_h.rows != hidden ||
        params.w_h.cols != h4 || int(params.b.size()) != h4)
        throw std::invalid_argument("lstm_cell: dimension mismatch");

    std::vector<double> a(h4, 0.0);
    kernels::gemm(x_t.data(), params.w_x.v.data(), a.data(), 1, input_dim, h4);
    kernels::gemm(h_prev.data(), params.w_h.v.data(), a.data(), 1, hidden, h4, true);
    for (int j = 0; j < h4; ++j) a[j] += params.b[j];

    std::vector<double> gates(h4), c(hidden), tc(hidden), h(hidden);
    apply_gates(a.data(), c_prev.data(), hidden, gates.data(), c.data(),
                tc.data(), h.data());
    return {h, c};
}

std::vector<double> basic_rnn_step(const Matrix& w_xh, const Matrix& w_hh,
                                   const std::vector<double>& b_h,
                                   const std::vector<double>& x_t,
                                   const std::vector<double>& h_prev) {
    const int hidden = w_xh.cols;
    std::vector<double> a(hidden, 0.0);
    kernels::gemm(x_t.data(), w_xh.v.data(), a.data(), 1, w_xh.rows, hidden);
    kernels::gemm(h_prev.data(), w_hh.v.data(), a.data(), 1, hidden, hidden, true);
    for (int j = 0; j < hidden; ++j) a[j] = std::tanh(a[j] + b_h[j]);
    return a;
}

ForwardCache bilstm_forward(const BiLstmModel& model, const Matrix& seq) {
    check_model(model);
    if (seq.rows < 1)
        throw std::invalid_argument("bilstm_forward: empty sequence");
    if (seq.cols != model.input_dim)
        throw std::invalid_argument("bilstm_forward: input dimension mismatch");

    const int t_len = seq.rows;
    const int h4 = 4 * model.hidden;

    ForwardCache cache;
    cache.x = seq;

    Matrix xa_f(t_len, h4), xa_b(t_len, h4);
    kernels::gemm(seq.v.data(), model.fwd.w_x.v.data(), xa_f.v.data(), t_len,
                  model.input_dim, h4);
    kernels::gemm(seq.v.data(), model.bwd.w_x.v.data(), xa_b.v.data(), t_len,
                  model.input_dim, h4);

    run_stream(model.fwd, xa_f, model.hidden, false, cache.fwd);
    run_stream(model.bwd, xa_b, model.hidden, true, cache.bwd);

    cache.y = Matrix(t_len, model.output_dim);
    kernels::gemm(cache.fwd.h.v.data(), model.w_fy.v.data(), cache.y.v.data(),
                  t_len, model.hidden, model.output_dim);
    kernels::gemm(cache.bwd.h.v.data(), model.w_by.v.data(), cache.y.v.data(),
                  t_len, model.hidden, model.output_dim, true);
    for (int t = 0; t < t_len; ++t) {
        double* row = cache.y.row(t);
        for (int j = 0; j < model.output_dim; ++j) row[j] += model.b_y[j];
    }
    return cache;
}

double euclidean_loss(const Matrix& pred, const Matrix& label) {
    if (pred.rows != label.rows || pred.cols != label.cols)
        throw std::invalid_argument("euclidean_loss: shape mismatch");
    if (pred.rows < 1)
        throw std::invalid_argument("euclidean_loss: empty sequences");
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.v.size(); ++i) {
        const double d = pred.v[i] - label.v[i];
        sum += d * d;
    }
    return sum / (2.0 * pred.rows);
}

BiLstmGrads bilstm_backward(const BiLstmModel& model, const ForwardCache& cache,
                            const Matrix& label) {
    if (cache.y.rows != label.rows || cache.y.cols != label.cols)
        throw std::invalid_argument("bilstm_backward: label shape mismatch");
    if (cache.x.rows != cache.y.rows || cache.x.cols != model.input_dim)
        throw std::invalid_argument("bilstm_backward: stale forward cache");

    const int t_len = cache.y.rows;
    BiLstmGrads grads = zeros_like(model);

    Matrix dy(t_len, model.output_dim);
    for (std::size_t i = 0; i < dy.v.size(); ++i)
        dy.v[i] = (cache.y.v[i] - label.v[i]) / t_len;

    kernels::gemm_tn(cache.fwd.h.v.data(), dy.v.data(), grads.w_fy.v.data(),
                     model.hidden, t_len, model.output_dim);
    kernels::gemm_tn(cache.bwd.h.v.data(), dy.v.data(), grads.w_by.v.data(),
                     model.hidden, t_len, model.output_dim);
    for (int t = 0; t < t_len; ++t) {
        const double* row = dy.row(t);
        for (int j = 0; j < model.output_dim; ++j) grads.b_y[j] += row[j];
    }

    Matrix dh_f(t_len, model.hidden), dh_b(t_len, model.hidden);
    kernels::gemm_nt(dy.v.data(), model.w_fy.v.data(), dh_f.v.data(), t_len,
                     model.output_dim, model.hidden);
    kernels::gemm_nt(dy.v.data(), model.w_by.v.data(), dh_b.v.data(), t_len,
                     model.output_dim, model.hidden);

    stream_backward(model.fwd, cache.x, cache.fwd, dh_f, model.hidden, false,
                    grads.fwd);
    stream_backward(model.bwd, cache.x, cache.bwd, dh_b, model.hidden, true,
                    grads.bwd);
    return grads;
}

double clip_global_norm(BiLstmGrads& grads, double max_norm) {
    double sq = 0.0;
    for (auto& [name, vec] : param_blocks(grads))
        for (double g : *vec) sq += g * g;
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const double scale = max_norm / norm;
        for (auto& [name, vec] : param_blocks(grads))
            for (double& g : *vec) g *= scale;
    }
    return norm;
}

RmspropState RmspropState::make(const BiLstmModel& model, const RmspropConfig& cfg) {
    RmspropState s;
    s.acc = zeros_like(model);
    s.cfg = cfg;
    return s;
}

void rmsprop_step(BiLstmModel& model, const BiLstmGrads& grads, RmspropState& state) {
    auto mb = param_blocks(model);
    auto gb = param_blocks(grads);
    auto ab = param_blocks(state.acc);
    const double decay = state.cfg.decay;
    const double lr = state.cfg.learning_rate;
    const double eps = state.cfg.epsilon;
    for (std::size_t k = 0; k < mb.size(); ++k) {
        std::vector<double>& theta = *mb[k].second;
        const std::vector<double>& g = *gb[k].second;
        std::vector<double>& acc = *ab[k].second;
        if (theta.size() != g.size() || theta.size() != acc.size())
            throw std::invalid_argument("rmsprop_step: shape mismatch");
        for (std::size_t i = 0; i < theta.size(); ++i) {
            acc[i] = decay * acc[i] + (1.0 - decay) * g[i] * g[i];
            theta[i] -= lr * g[i] / (std::sqrt(acc[i]) + eps);
        }
    }
}

BiLstmModel init_gaussian(int input_dim, int hidden, int output_dim,
                          double stddev, std::uint64_t seed) {
    if (stddev <= 0.0)
        throw std::invalid_argument("init_gaussian: stddev must be positive");
    BiLstmModel m;
    m.input_dim = input_dim;
    m.hidden = hidden;
    m.output_dim = output_dim;
    m = zeros_like(m);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, stddev);
    for (auto& [name, vec] : param_blocks(m))
        for (double& w : *vec) w = dist(rng);
    return m;
}

std::vector<LossReport> train_bilstm(
    BiLstmModel& model, const std::vector<std::pair<Matrix, Matrix>>& dataset,
    const TrainConfig& cfg) {
    if (dataset.empty())
        throw std::invalid_argument("train_bilstm: empty dataset");
    check_model(model);

    RmspropState state = RmspropState::make(model, cfg.opt);
    std::mt19937_64 rng(cfg.seed);
    std::vector<int> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);

    std::vector<LossReport> reports;
    reports.reserve(cfg.epochs);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        for (int idx : order) {
            const auto& [x, label] = dataset[idx];
            ForwardCache cache = bilstm_forward(model, x);
            const double loss = euclidean_loss(cache.y, label);
            if (!std::isfinite(loss))
                throw numerical_error("train_bilstm: non-finite loss");
            loss_sum += loss;
            BiLstmGrads grads = bilstm_backward(model, cache, label);
            clip_global_norm(grads, cfg.clip_norm);
            rmsprop_step(model, grads, state);
        }
        reports.push_back({epoch + 1, loss_sum / double(dataset.size())});
    }
    return reports;
}

GradCheckReport gradcheck_bilstm(int input_dim, int hidden, int output_dim,
                                 int t_len, std::uint64_t seed, double step,
                                 bool corrupt) {
    BiLstmModel model = init_gaussian(input_dim, hidden, output_dim, 0.2, seed);

    std::mt19937_64 rng(seed + 17);
    std::normal_distribution<double> dist(0.0, 1.0);
    Matrix x(t_len, input_dim), label(t_len, output_dim);
    for (double& v : x.v) v = dist(rng);
    for (double& v : label.v) v = dist(rng);

    ForwardCache cache = bilstm_forward(model, x);
    BiLstmGrads grads = bilstm_backward(model, cache, label);
    if (corrupt) grads.fwd.w_x.v[0] += 1.0;

    GradCheckReport report;
    auto mb = param_blocks(model);
    auto gb = param_blocks(grads);
    for (std::size_t blk = 0; blk < mb.size(); ++blk) {
        std::vector<double>& theta = *mb[blk].second;
        const std::vector<double>& g = *gb[blk].second;
        report.n_parameters += int(theta.size());
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const double saved = theta[i];
            theta[i] = saved + step;
            const double lp = euclidean_loss(bilstm_forward(model, x).y, label);
            theta[i] = saved - step;
            const double lm = euclidean_loss(bilstm_forward(model, x).y, label);
            theta[i] = saved;
            const double numeric = (lp - lm) / (2.0 * step);
            const double analytic = g[i];
            const double rel = std::abs(analytic - numeric) /
                               std::max({std::abs(analytic), std::abs(numeric), 1e-8});
            if (rel > report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst_block = mb[blk].first;
                report.worst_index = int(i);
            }
        }
    }
    return report;
}

namespace {
constexpr char kModelMagic[8] = {'S', 'S', 'E', 'G', 'R', 'N', 'N', '1'};
constexpr std::uint32_t kModelVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = (v >> (8 * i)) & 0xff;
    out.write(reinterpret_cast<const char*>(buf), 4);
}

std::uint32_t read_u32(std::istream& in) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(buf[i]) << (8 * i);
    return v;
}
}  // namespace

void save_bilstm(const BiLstmModel& model, const std::string& path,
                 const std::string& sidecar_json) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("save_bilstm: cannot write " + path);
    out.write(kModelMagic, 8);
    write_u32(out, kModelVersion);
    write_u32(out, std::uint32_t(model.input_dim));
    write_u32(out, std::uint32_t(model.hidden));
    write_u32(out, std::uint32_t(model.output_dim));
    for (auto& [name, vec] : param_blocks(model))
        out.write(reinterpret_cast<const char*>(vec->data()),
                  std::streamsize(vec->size() * sizeof(double)));
    if (!out) throw io_error("save_bilstm: write failed for " + path);
    if (!sidecar_json.empty()) {
        std::ofstream side(path + ".json");
        if (!side) throw io_error("save_bilstm: cannot write " + path + ".json");
        side << sidecar_json << "\n";
    }
}

BiLstmModel load_bilstm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("load_bilstm: cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kModelMagic, 8) != 0)
        throw io_error("load_bilstm: bad magic in " + path);
    if (read_u32(in) != kModelVersion)
        throw io_error("load_bilstm: unsupported version in " + path);
    const int input_dim = int(read_u32(in));
    const int hidden = int(read_u32(in));
    const int output_dim = int(read_u32(in));
    BiLstmModel m;
    m.input_dim = input_dim;
    m.hidden = hidden;
    m.output_dim = output_dim;
    m = zeros_like(m);
    for (auto& [name, vec] : param_blocks(m))
        in.read(reinterpret_cast<char*>(vec->data()),
                std::streamsize(vec->size() * sizeof(double)));
    if (!in) throw io_error("load_bilstm: truncated file " + path);
    return m;
}

}  // namespace starseg
