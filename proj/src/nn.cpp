#include "pcg/nn.hpp"
#include "pcg/error.hpp"
#include "pcg/threading.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pcg::nn {

using nlohmann::json;

namespace {

void he_init(Param& p, std::size_t fan_in, Rng& rng) {
    const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (auto& v : p.w) v = rng.gaussian() * scale;
}

int conv_out(int n) { return (n + 2 * Conv2d::kPad - Conv2d::kKernel) / Conv2d::kStride + 1; }

} // namespace

// --- Conv2d ----------------------------------------------------------------

void Conv2d::init(int in_c, int out_c, Rng& rng, const std::string& name) {
    in_ch = in_c;
    out_ch = out_c;
    weight.init(static_cast<std::size_t>(out_c) * in_c * kKernel * kKernel, name + ".weight");
    bias.init(out_c, name + ".bias");
    he_init(weight, static_cast<std::size_t>(in_c) * kKernel * kKernel, rng);
}

Tensor3 Conv2d::forward_serial(const Tensor3& x) const {
    const int oh = conv_out(x.h), ow = conv_out(x.w);
    Tensor3 y(out_ch, oh, ow);
    for (int oc = 0; oc < out_ch; ++oc)
        for (int i = 0; i < oh; ++i)
            for (int j = 0; j < ow; ++j) {
                double acc = bias.w[oc];
                for (int ic = 0; ic < in_ch; ++ic)
                    for (int ki = 0; ki < kKernel; ++ki)
                        for (int kj = 0; kj < kKernel; ++kj) {
                            const int si = i * kStride + ki - kPad;
                            const int sj = j * kStride + kj - kPad;
                            if (si < 0 || si >= x.h || sj < 0 || sj >= x.w) continue;
                            acc += weight.w[((static_cast<std::size_t>(oc) * in_ch + ic) * kKernel + ki) *
                                                kKernel +
                                            kj] *
                                   x.at(ic, si, sj);
                        }
                y.at(oc, i, j) = acc;
            }
    return y;
}

Tensor3 Conv2d::forward(const Tensor3& x) {
    x_cache = x;
    const int oh = conv_out(x.h), ow = conv_out(x.w);
    Tensor3 y(out_ch, oh, ow);
    const int nt = pcg::num_threads();
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(nt)
#endif
    for (int oc = 0; oc < out_ch; ++oc)
        for (int i = 0; i < oh; ++i)
            for (int j = 0; j < ow; ++j) {
                double acc = bias.w[oc];
                for (int ic = 0; ic < in_ch; ++ic)
                    for (int ki = 0; ki < kKernel; ++ki)
                        for (int kj = 0; kj < kKernel; ++kj) {
                            const int si = i * kStride + ki - kPad;
                            const int sj = j * kStride + kj - kPad;
                            if (si < 0 || si >= x.h || sj < 0 || sj >= x.w) continue;
                            acc += weight.w[((static_cast<std::size_t>(oc) * in_ch + ic) * kKernel + ki) *
                                                kKernel +
                                            kj] *
                                   x.at(ic, si, sj);
                        }
                y.at(oc, i, j) = acc;
            }
    (void)nt;
    return y;
}

Tensor3 Conv2d::backward(const Tensor3& dy) {
    const Tensor3& x = x_cache;
    Tensor3 dx(x.c, x.h, x.w);
    // weight/bias grads: parallel over output channels (disjoint slices)
    const int nt = pcg::num_threads();
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(nt)
#endif
    for (int oc = 0; oc < out_ch; ++oc) {
        for (int i = 0; i < dy.h; ++i)
            for (int j = 0; j < dy.w; ++j) {
                const double g = dy.at(oc, i, j);
                bias.g[oc] += g;
                for (int ic = 0; ic < in_ch; ++ic)
                    for (int ki = 0; ki < kKernel; ++ki)
                        for (int kj = 0; kj < kKernel; ++kj) {
                            const int si = i * kStride + ki - kPad;
                            const int sj = j * kStride + kj - kPad;
                            if (si < 0 || si >= x.h || sj < 0 || sj >= x.w) continue;
                            weight.g[((static_cast<std::size_t>(oc) * in_ch + ic) * kKernel + ki) *
                                         kKernel +
                                     kj] += g * x.at(ic, si, sj);
                        }
            }
    }
    (void)nt;
    // input grad: serial (writes overlap across output channels)
    for (int oc = 0; oc < out_ch; ++oc)
        for (int i = 0; i < dy.h; ++i)
            for (int j = 0; j < dy.w; ++j) {
                const double g = dy.at(oc, i, j);
                for (int ic = 0; ic < in_ch; ++ic)
                    for (int ki = 0; ki < kKernel; ++ki)
                        for (int kj = 0; kj < kKernel; ++kj) {
                            const int si = i * kStride + ki - kPad;
                            const int sj = j * kStride + kj - kPad;
                            if (si < 0 || si >= x.h || sj < 0 || sj >= x.w) continue;
                            dx.at(ic, si, sj) +=
                                g * weight.w[((static_cast<std::size_t>(oc) * in_ch + ic) * kKernel +
                                              ki) *
                                                 kKernel +
                                             kj];
                        }
            }
    return dx;
}

// --- Relu ------------------------------------------------------------------

std::vector<double> Relu::forward(const std::vector<double>& x) {
    x_cache = x;
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
    return y;
}

std::vector<double> Relu::backward(const std::vector<double>& dy) const {
    std::vector<double> dx(dy.size());
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = x_cache[i] > 0.0 ? dy[i] : 0.0;
    return dx;
}

// --- MeanMaxTimePool -------------------------------------------------------

std::vector<double> MeanMaxTimePool::forward(const Tensor3& x) {
    c = x.c;
    h = x.h;
    w = x.w;
    argmax.assign(static_cast<std::size_t>(c) * w, 0);
    std::vector<double> y(2 * static_cast<std::size_t>(c) * w);
    for (int ci = 0; ci < c; ++ci)
        for (int wi = 0; wi < w; ++wi) {
            double sum = 0.0, best = x.at(ci, 0, wi);
            int best_t = 0;
            for (int t = 0; t < h; ++t) {
                const double v = x.at(ci, t, wi);
                sum += v;
                if (v > best) {
                    best = v;
                    best_t = t;
                }
            }
            y[static_cast<std::size_t>(ci) * w + wi] = sum / h;
            y[static_cast<std::size_t>(c) * w + ci * w + wi] = best;
            argmax[static_cast<std::size_t>(ci) * w + wi] = best_t;
        }
    return y;
}

Tensor3 MeanMaxTimePool::backward(const std::vector<double>& dy) const {
    Tensor3 dx(c, h, w);
    for (int ci = 0; ci < c; ++ci)
        for (int wi = 0; wi < w; ++wi) {
            const double dmean = dy[static_cast<std::size_t>(ci) * w + wi] / h;
            for (int t = 0; t < h; ++t) dx.at(ci, t, wi) += dmean;
            dx.at(ci, argmax[static_cast<std::size_t>(ci) * w + wi], wi) +=
                dy[static_cast<std::size_t>(c) * w + ci * w + wi];
        }
    return dx;
}

// --- Linear ----------------------------------------------------------------

void Linear::init(int in_d, int out_d, Rng& rng, const std::string& name) {
    in = in_d;
    out = out_d;
    weight.init(static_cast<std::size_t>(in_d) * out_d, name + ".weight");
    bias.init(out_d, name + ".bias");
    he_init(weight, in_d, rng);
}

std::vector<double> Linear::forward(const std::vector<double>& x) {
    x_cache = x;
    std::vector<double> y(out);
    for (int o = 0; o < out; ++o) {
        double acc = bias.w[o];
        const double* row = &weight.w[static_cast<std::size_t>(o) * in];
        for (int i = 0; i < in; ++i) acc += row[i] * x[i];
        y[o] = acc;
    }
    return y;
}

std::vector<double> Linear::backward(const std::vector<double>& dy) {
    std::vector<double> dx(in, 0.0);
    for (int o = 0; o < out; ++o) {
        const double g = dy[o];
        bias.g[o] += g;
        double* grow = &weight.g[static_cast<std::size_t>(o) * in];
        const double* row = &weight.w[static_cast<std::size_t>(o) * in];
        for (int i = 0; i < in; ++i) {
            grow[i] += g * x_cache[i];
            dx[i] += g * row[i];
        }
    }
    return dx;
}

// --- Dropout ---------------------------------------------------------------

std::vector<double> Dropout::forward(const std::vector<double>& x, bool training, Rng& rng) {
    if (!training || rate <= 0.0) {
        mask.assign(x.size(), 1.0);
        return x;
    }
    const double keep = 1.0 - rate;
    mask.resize(x.size());
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        mask[i] = rng.uniform() < keep ? 1.0 / keep : 0.0;
        y[i] = x[i] * mask[i];
    }
    return y;
}

std::vector<double> Dropout::backward(const std::vector<double>& dy) const {
    std::vector<double> dx(dy.size());
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = dy[i] * mask[i];
    return dx;
}

// --- Encoder ---------------------------------------------------------------

void Encoder::init(int embed, Rng& rng, const std::string& prefix) {
    embed_dim = embed;
    conv1.init(1, 16, rng, prefix + ".conv1");
    conv2.init(16, 32, rng, prefix + ".conv2");
    conv3.init(32, 64, rng, prefix + ".conv3");
    // 96x64 -> 48x32 -> 24x16 -> 12x8; pool doubles channels over mel width
    proj.init(2 * 64 * 8, embed, rng, prefix + ".proj");
}

std::vector<double> Encoder::forward(const MelSpectrogram& spec) {
    Tensor3 x(1, kMelFrames, kMelBins);
    x.v = spec.grid;
    Tensor3 a = conv1.forward(x);
    a.v = relu1.forward(a.v);
    Tensor3 b = conv2.forward(a);
    b.v = relu2.forward(b.v);
    Tensor3 cmap = conv3.forward(b);
    cmap.v = relu3.forward(cmap.v);
    return proj.forward(pool.forward(cmap));
}

void Encoder::backward(const std::vector<double>& d_embed) {
    Tensor3 d3 = pool.backward(proj.backward(d_embed));
    d3.v = relu3.backward(d3.v);
    Tensor3 d2 = conv3.backward(d3);
    d2.v = relu2.backward(d2.v);
    Tensor3 d1 = conv2.backward(d2);
    d1.v = relu1.backward(d1.v);
    conv1.backward(d1);
}

void Encoder::collect(std::vector<Param*>& out) {
    out.push_back(&conv1.weight);
    out.push_back(&conv1.bias);
    out.push_back(&conv2.weight);
    out.push_back(&conv2.bias);
    out.push_back(&conv3.weight);
    out.push_back(&conv3.bias);
    out.push_back(&proj.weight);
    out.push_back(&proj.bias);
}

// --- Mlp -------------------------------------------------------------------

void Mlp::init(const std::vector<int>& dims, double dropout, Rng& rng,
               const std::string& prefix) {
    dropout_rate = dropout;
    layers.clear();
    relus.clear();
    dropouts.clear();
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        Linear l;
        l.init(dims[i], dims[i + 1], rng, prefix + ".fc" + std::to_string(i));
        layers.push_back(std::move(l));
    }
    relus.resize(layers.size() > 0 ? layers.size() - 1 : 0);
    dropouts.resize(relus.size());
    for (auto& d : dropouts) d.rate = dropout_rate;
}

std::vector<double> Mlp::forward(const std::vector<double>& x, bool training, Rng& rng) {
    std::vector<double> cur = x;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        cur = layers[i].forward(cur);
        if (i + 1 < layers.size()) {
            cur = relus[i].forward(cur);
            cur = dropouts[i].forward(cur, training, rng);
        }
    }
    return cur;
}

std::vector<double> Mlp::backward(const std::vector<double>& dy) {
    std::vector<double> cur = dy;
    for (std::size_t i = layers.size(); i-- > 0;) {
        if (i + 1 < layers.size()) {
            cur = dropouts[i].backward(cur);
            cur = relus[i].backward(cur);
        }
        cur = layers[i].backward(cur);
    }
    return cur;
}

void Mlp::collect(std::vector<Param*>& out) {
    for (auto& l : layers) {
        out.push_back(&l.weight);
        out.push_back(&l.bias);
    }
}

// --- L2Normalize -----------------------------------------------------------

std::vector<double> L2Normalize::forward(const std::vector<double>& x) {
    x_cache = x;
    double n2 = 0.0;
    for (double v : x) n2 += v * v;
    norm_cache = std::sqrt(n2);
    std::vector<double> y(x.size(), 0.0);
    if (norm_cache > 0.0)
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] / norm_cache;
    return y;
}

std::vector<double> L2Normalize::backward(const std::vector<double>& dy) const {
    std::vector<double> dx(dy.size(), 0.0);
    if (norm_cache <= 0.0) return dx;
    double dot = 0.0;
    for (std::size_t i = 0; i < dy.size(); ++i) dot += dy[i] * x_cache[i];
    const double n3 = norm_cache * norm_cache * norm_cache;
    for (std::size_t i = 0; i < dy.size(); ++i)
        dx[i] = dy[i] / norm_cache - x_cache[i] * dot / n3;
    return dx;
}

// --- Adam ------------------------------------------------------------------

void Adam::step(const std::vector<Param*>& params) {
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (Param* p : params) {
        for (std::size_t i = 0; i < p->w.size(); ++i) {
            p->m[i] = beta1 * p->m[i] + (1.0 - beta1) * p->g[i];
            p->v[i] = beta2 * p->v[i] + (1.0 - beta2) * p->g[i] * p->g[i];
            const double mhat = p->m[i] / bc1;
            const double vhat = p->v[i] / bc2;
            p->w[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

// --- losses ----------------------------------------------------------------

std::vector<double> softmax(const std::vector<double>& logits) {
    const double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        sum += p[i];
    }
    for (auto& v : p) v /= sum;
    return p;
}

double cross_entropy_loss(const std::vector<double>& logits, int label,
                          std::vector<double>& d_logits) {
    const std::vector<double> p = softmax(logits);
    d_logits = p;
    d_logits[label] -= 1.0;
    return -std::log(std::max(p[label], 1e-300));
}

// --- checkpoint ------------------------------------------------------------

void save_checkpoint(const std::string& json_path, const std::string& blob_path,
                     const std::vector<const Param*>& params,
                     const std::vector<std::vector<std::size_t>>& shapes,
                     const std::string& config_json) {
    namespace fs = std::filesystem;
    std::ofstream blob(blob_path, std::ios::binary);
    if (!blob) throw PcgError("IoError", "cannot write " + blob_path);

    json tensors = json::array();
    std::size_t offset = 0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const Param* p = params[i];
        tensors.push_back({{"name", p->name},
                           {"shape", shapes[i]},
                           {"offset", offset},
                           {"count", p->w.size()}});
        for (double v : p->w) {
            const float f = static_cast<float>(v);
            blob.write(reinterpret_cast<const char*>(&f), sizeof(float));
        }
        offset += p->w.size() * sizeof(float);
    }

    json j;
    j["schema_version"] = 1;
    j["config"] = json::parse(config_json);
    j["blob"] = fs::path(blob_path).filename().string();
    j["tensors"] = std::move(tensors);
    std::ofstream out(json_path);
    if (!out) throw PcgError("IoError", "cannot write " + json_path);
    out << j.dump(2);
}

std::string load_checkpoint(const std::string& json_path, const std::vector<Param*>& params) {
    namespace fs = std::filesystem;
    std::ifstream in(json_path);
    if (!in) throw PcgError("CheckpointLoadError", json_path + " not found");
    json j;
    try {
        j = json::parse(in);
    } catch (const std::exception& e) {
        throw PcgError("CheckpointLoadError", std::string("bad manifest: ") + e.what());
    }
    if (!j.contains("schema_version") || j["schema_version"].get<int>() != 1)
        throw PcgError("CheckpointLoadError", "unsupported checkpoint schema");

    const fs::path blob_path = fs::path(json_path).parent_path() / j.at("blob").get<std::string>();
    std::ifstream blob(blob_path, std::ios::binary);
    if (!blob) throw PcgError("CheckpointLoadError", blob_path.string() + " not found");

    for (Param* p : params) {
        bool found = false;
        for (const auto& t : j["tensors"]) {
            if (t.at("name").get<std::string>() != p->name) continue;
            found = true;
            const std::size_t count = t.at("count").get<std::size_t>();
            if (count != p->w.size())
                throw PcgError("CheckpointLoadError",
                               p->name + ": shape mismatch (" + std::to_string(count) + " vs " +
                                   std::to_string(p->w.size()) + ")");
            blob.seekg(static_cast<std::streamoff>(t.at("offset").get<std::size_t>()));
            for (std::size_t i = 0; i < count; ++i) {
                float f;
                blob.read(reinterpret_cast<char*>(&f), sizeof(float));
                if (!blob) throw PcgError("CheckpointLoadError", p->name + ": truncated blob");
                p->w[i] = static_cast<double>(f);
            }
            break;
        }
        if (!found) throw PcgError("CheckpointLoadError", p->name + ": missing tensor");
    }
    return j.at("config").dump();
}

} // namespace pcg::nn
