#pragma once

#include "pcg/mel.hpp"
#include "pcg/rng.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace pcg::nn {

// Flat parameter block with gradient and Adam moment buffers.
struct Param {
    std::vector<double> w, g, m, v;
    std::string name;

    void init(std::size_t n, const std::string& nm) {
        w.assign(n, 0.0);
        g.assign(n, 0.0);
        m.assign(n, 0.0);
        v.assign(n, 0.0);
        name = nm;
    }
    void zero_grad() { std::fill(g.begin(), g.end(), 0.0); }
};

struct Tensor3 {
    int c = 0, h = 0, w = 0;
    std::vector<double> v;

    Tensor3() = default;
    Tensor3(int c_, int h_, int w_) : c(c_), h(h_), w(w_), v(static_cast<std::size_t>(c_) * h_ * w_, 0.0) {}
    double& at(int ci, int hi, int wi) { return v[(static_cast<std::size_t>(ci) * h + hi) * w + wi]; }
    double at(int ci, int hi, int wi) const {
        return v[(static_cast<std::size_t>(ci) * h + hi) * w + wi];
    }
};

// 3x3 convolution, stride 2, zero padding 1. forward caches the input for
// backward; single-sample semantics (the trainer loops the batch).
// The inner loop is OpenMP-parallel over output channels (disjoint writes).
struct Conv2d {
    int in_ch = 0, out_ch = 0;
    static constexpr int kKernel = 3, kStride = 2, kPad = 1;
    Param weight, bias;
    Tensor3 x_cache;

    void init(int in_c, int out_c, Rng& rng, const std::string& name);
    Tensor3 forward(const Tensor3& x);
    Tensor3 backward(const Tensor3& dy);

    // serial reference path, kept for kernel tests and the benchmark
    Tensor3 forward_serial(const Tensor3& x) const;
};

struct Relu {
    std::vector<double> x_cache;
    std::vector<double> forward(const std::vector<double>& x);
    std::vector<double> backward(const std::vector<double>& dy) const;
};

// mean-over-time and max-over-time of a (c, t, w) map, concatenated: 2*c*w.
struct MeanMaxTimePool {
    int c = 0, h = 0, w = 0;
    std::vector<int> argmax; // per (c, w)
    std::vector<double> forward(const Tensor3& x);
    Tensor3 backward(const std::vector<double>& dy) const;
};

struct Linear {
    int in = 0, out = 0;
    Param weight, bias; // weight row-major [out][in]
    std::vector<double> x_cache;

    void init(int in_d, int out_d, Rng& rng, const std::string& name);
    std::vector<double> forward(const std::vector<double>& x);
    std::vector<double> backward(const std::vector<double>& dy);
};

struct Dropout {
    double rate = 0.5;
    std::vector<double> mask;
    // training: inverted dropout with the caller's rng; eval: identity
    std::vector<double> forward(const std::vector<double>& x, bool training, Rng& rng);
    std::vector<double> backward(const std::vector<double>& dy) const;
};

// Conv stack 1->16->32->64 over the 96x64 grid, mean+max temporal pooling,
// linear projection to embed_dim.
struct Encoder {
    int embed_dim = 128;
    Conv2d conv1, conv2, conv3;
    Relu relu1, relu2, relu3;
    MeanMaxTimePool pool;
    Linear proj;

    void init(int embed, Rng& rng, const std::string& prefix);
    std::vector<double> forward(const MelSpectrogram& spec);
    void backward(const std::vector<double>& d_embed); // input gradient discarded
    void collect(std::vector<Param*>& out);
};

// Dense stack with ReLU between layers (identity after the last one) and
// optional dropout on hidden activations.
struct Mlp {
    std::vector<Linear> layers;
    std::vector<Relu> relus;
    std::vector<Dropout> dropouts;
    double dropout_rate = 0.0;

    void init(const std::vector<int>& dims, double dropout, Rng& rng, const std::string& prefix);
    std::vector<double> forward(const std::vector<double>& x, bool training, Rng& rng);
    std::vector<double> backward(const std::vector<double>& dy);
    void collect(std::vector<Param*>& out);
};

// unit L2 normalization; zero vector maps to zero vector
struct L2Normalize {
    std::vector<double> x_cache;
    double norm_cache = 0.0;
    std::vector<double> forward(const std::vector<double>& x);
    std::vector<double> backward(const std::vector<double>& dy) const;
};

struct Adam {
    double lr = 1e-4, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    long t = 0;
    void step(const std::vector<Param*>& params);
};

double cross_entropy_loss(const std::vector<double>& logits, int label,
                          std::vector<double>& d_logits);
std::vector<double> softmax(const std::vector<double>& logits);

// --- named-tensor checkpoint: JSON manifest + little-endian f32 blob -------
struct CheckpointEntry {
    std::string name;
    std::vector<std::size_t> shape;
};

void save_checkpoint(const std::string& json_path, const std::string& blob_path,
                     const std::vector<const Param*>& params,
                     const std::vector<std::vector<std::size_t>>& shapes,
                     const std::string& config_json);
// Loads values into matching params; throws CheckpointLoadError on any
// name/shape mismatch. Returns the stored config JSON text.
std::string load_checkpoint(const std::string& json_path, const std::vector<Param*>& params);

} // namespace pcg::nn
