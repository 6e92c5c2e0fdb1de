#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace starseg {

struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0)
        : rows(r), cols(c), v(std::size_t(r) * c, fill) {}

    double* row(int i) { return v.data() + std::size_t(i) * cols; }
    const double* row(int i) const { return v.data() + std::size_t(i) * cols; }
    double& operator()(int i, int j) { return v[std::size_t(i) * cols + j]; }
    double operator()(int i, int j) const { return v[std::size_t(i) * cols + j]; }
};

// One LSTM stream. Gate pre-activations are packed along the column axis in
// the fixed order [input i | forget f | candidate g | output o], each block
// `hidden` wide.
struct LstmParams {
    Matrix w_x;             // input_dim x 4*hidden
    Matrix w_h;             // hidden x 4*hidden
    std::vector<double> b;  // 4*hidden
};

struct BiLstmModel {
    int input_dim = 0;
    int hidden = 0;
    int output_dim = 0;
    LstmParams fwd;
    LstmParams bwd;
    Matrix w_fy;              // hidden x output_dim
    Matrix w_by;              // hidden x output_dim
    std::vector<double> b_y;  // output_dim
};

// Gradients share the model's shape.
using BiLstmGrads = BiLstmModel;

BiLstmModel zeros_like(const BiLstmModel& m);

// Named views over every parameter block, in the serialization order.
std::vector<std::pair<std::string, std::vector<double>*>> param_blocks(BiLstmModel& m);
std::vector<std::pair<std::string, const std::vector<double>*>> param_blocks(const BiLstmModel& m);

// Single LSTM cell update: returns (h_t, c_t).
std::pair<std::vector<double>, std::vector<double>> lstm_cell(
    const LstmParams& params, const std::vector<double>& x_t,
    const std::vector<double>& h_prev, const std::vector<double>& c_prev);

// Basic tanh RNN step, kept as a reference cell for tests.
std::vector<double> basic_rnn_step(const Matrix& w_xh, const Matrix& w_hh,
                                   const std::vector<double>& b_h,
                                   const std::vector<double>& x_t,
                                   const std::vector<double>& h_prev);

struct StreamCache {
    Matrix gates;   // T x 4H, post-activation [i f g o]
    Matrix c;       // T x H
    Matrix tanh_c;  // T x H
    Matrix h;       // T x H
};

struct ForwardCache {
    Matrix x;  // T x input_dim
    StreamCache fwd;
    StreamCache bwd;  // indexed in sequence order t
    Matrix y;         // T x output_dim
};

// Bidirectional pass over a sequence stored one timestep per row.
ForwardCache bilstm_forward(const BiLstmModel& model, const Matrix& seq);

double euclidean_loss(const Matrix& pred, const Matrix& label);

BiLstmGrads bilstm_backward(const BiLstmModel& model, const ForwardCache& cache,
                            const Matrix& label);

// Returns the pre-clip global gradient norm.
double clip_global_norm(BiLstmGrads& grads, double max_norm);

struct RmspropConfig {
    double learning_rate = 0.001;
    double decay = 0.9;
    double epsilon = 1e-8;
};

struct RmspropState {
    BiLstmModel acc;  // squared-gradient accumulators
    RmspropConfig cfg;

    static RmspropState make(const BiLstmModel& model, const RmspropConfig& cfg);
};

void rmsprop_step(BiLstmModel& model, const BiLstmGrads& grads, RmspropState& state);

BiLstmModel init_gaussian(int input_dim, int hidden, int output_dim,
                          double stddev, std::uint64_t seed);

struct LossReport {
    int epoch = 0;
    double mean_loss = 0.0;
};

struct TrainConfig {
    int epochs = 0;
    RmspropConfig opt;
    double clip_norm = 5.0;
    std::uint64_t seed = 0;
};

// Per-sample stochastic updates in a seeded shuffled order. The reported
// loss is each sample's forward loss before its update, averaged per epoch.
std::vector<LossReport> train_bilstm(
    BiLstmModel& model, const std::vector<std::pair<Matrix, Matrix>>& dataset,
    const TrainConfig& cfg);

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst_block;
    int worst_index = -1;
    int n_parameters = 0;
};

// Compares BPTT gradients against central finite differences on a randomly
// initialized model and a random sequence pair. `corrupt` perturbs one
// analytic gradient entry first (negative-control hook).
GradCheckReport gradcheck_bilstm(int input_dim, int hidden, int output_dim,
                                 int t_len, std::uint64_t seed,
                                 double step = 1e-5, bool corrupt = false);

// Versioned flat binary container (magic, version, dims, little-endian f64
// blocks in param_blocks order). `sidecar_json`, when non-empty, is written
// verbatim to path + ".json".
void save_bilstm(const BiLstmModel& model, const std::string& path,
                 const std::string& sidecar_json = {});
BiLstmModel load_bilstm(const std::string& path);

}  // namespace starseg
