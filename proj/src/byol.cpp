#include "pcg/byol.hpp"
#include "pcg/audio.hpp"
#include "pcg/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

namespace pcg {

using nlohmann::json;

void ByolState::init(int embed_dim, double tau_, Rng& rng) {
    tau = tau_;
    step = 0;
    online_enc.init(embed_dim, rng, "encoder");
    online_proj.init({embed_dim, 256, 128}, 0.0, rng, "projector");
    online_pred.init({128, 256, 128}, 0.0, rng, "predictor");
    target_enc.init(embed_dim, rng, "encoder");
    target_proj.init({embed_dim, 256, 128}, 0.0, rng, "projector");
    // target starts as an exact copy of the online encoder/projector
    std::vector<nn::Param*> src, dst;
    online_enc.collect(src);
    online_proj.collect(src);
    target_enc.collect(dst);
    target_proj.collect(dst);
    for (std::size_t i = 0; i < src.size(); ++i) dst[i]->w = src[i]->w;
}

std::vector<nn::Param*> ByolState::online_params() {
    std::vector<nn::Param*> out;
    online_enc.collect(out);
    online_proj.collect(out);
    online_pred.collect(out);
    return out;
}

std::vector<nn::Param*> ByolState::target_params() {
    std::vector<nn::Param*> out;
    target_enc.collect(out);
    target_proj.collect(out);
    return out;
}

namespace {

double one_order(ByolState& s, const MelSpectrogram& a, const MelSpectrogram& b,
                 bool accumulate_grads) {
    Rng dummy(0); // Mlp forward in eval mode never draws from it

    std::vector<double> z = s.target_proj.forward(s.target_enc.forward(b), false, dummy);
    nn::L2Normalize nz;
    z = nz.forward(z);

    std::vector<double> q =
        s.online_pred.forward(s.online_proj.forward(s.online_enc.forward(a), false, dummy),
                              false, dummy);
    nn::L2Normalize nq;
    const std::vector<double> qh = nq.forward(q);

    double term = 0.0;
    std::vector<double> d(qh.size());
    for (std::size_t i = 0; i < qh.size(); ++i) {
        const double diff = qh[i] - z[i];
        term += diff * diff;
        d[i] = 2.0 * diff;
    }
    if (accumulate_grads)
        s.online_enc.backward(
            s.online_proj.backward(s.online_pred.backward(nq.backward(d))));
    return term;
}

PcgRecording prepare(const std::string& path, int rate_hz) {
    return resample(load_wav(path), rate_hz);
}

std::string blob_path_for(const std::string& json_path) {
    std::filesystem::path p(json_path);
    p.replace_extension(".bin");
    return p.string();
}

std::vector<std::vector<std::size_t>> encoder_shapes(const nn::Encoder& enc) {
    auto conv_shape = [](const nn::Conv2d& c) {
        return std::vector<std::vector<std::size_t>>{
            {static_cast<std::size_t>(c.out_ch), static_cast<std::size_t>(c.in_ch), 3, 3},
            {static_cast<std::size_t>(c.out_ch)}};
    };
    std::vector<std::vector<std::size_t>> shapes;
    for (const auto* c : {&enc.conv1, &enc.conv2, &enc.conv3})
        for (auto& s : conv_shape(*c)) shapes.push_back(s);
    shapes.push_back({static_cast<std::size_t>(enc.proj.out), static_cast<std::size_t>(enc.proj.in)});
    shapes.push_back({static_cast<std::size_t>(enc.proj.out)});
    return shapes;
}

} // namespace

double byol_loss(ByolState& state, const MelSpectrogram& view1, const MelSpectrogram& view2,
                 bool accumulate_grads) {
    return one_order(state, view1, view2, accumulate_grads) +
           one_order(state, view2, view1, accumulate_grads);
}

void ema_update(ByolState& state) {
    std::vector<nn::Param*> online, target;
    state.online_enc.collect(online);
    state.online_proj.collect(online);
    state.target_enc.collect(target);
    state.target_proj.collect(target);
    for (std::size_t i = 0; i < online.size(); ++i)
        for (std::size_t k = 0; k < online[i]->w.size(); ++k)
            target[i]->w[k] = state.tau * target[i]->w[k] + (1.0 - state.tau) * online[i]->w[k];
}

void save_encoder(nn::Encoder& enc, const ByolConfig& config, const std::string& json_path) {
    std::vector<nn::Param*> params;
    enc.collect(params);
    std::vector<const nn::Param*> cparams(params.begin(), params.end());
    json cfg;
    cfg["embed_dim"] = config.embed_dim;
    cfg["tau"] = config.tau;
    cfg["operating_rate_hz"] = config.operating_rate_hz;
    nn::save_checkpoint(json_path, blob_path_for(json_path), cparams, encoder_shapes(enc),
                        cfg.dump());
}

nn::Encoder load_encoder(const std::string& json_path, ByolConfig* config_out) {
    std::ifstream in(json_path);
    if (!in) throw PcgError("CheckpointLoadError", json_path + " not found");
    json j;
    try {
        j = json::parse(in);
    } catch (const std::exception& e) {
        throw PcgError("CheckpointLoadError", std::string("bad manifest: ") + e.what());
    }
    const int embed = j.at("config").at("embed_dim").get<int>();

    nn::Encoder enc;
    Rng dummy(0);
    enc.init(embed, dummy, "encoder");
    std::vector<nn::Param*> params;
    enc.collect(params);
    nn::load_checkpoint(json_path, params);

    if (config_out) {
        config_out->embed_dim = embed;
        if (j["config"].contains("tau")) config_out->tau = j["config"]["tau"].get<double>();
        if (j["config"].contains("operating_rate_hz"))
            config_out->operating_rate_hz = j["config"]["operating_rate_hz"].get<int>();
    }
    return enc;
}

PretrainResult pretrain(const Manifest& manifest, const ByolConfig& config,
                        const std::string& out_dir, const std::string& init_checkpoint) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    std::vector<PcgRecording> recs;
    recs.reserve(manifest.rows.size());
    for (const auto& row : manifest.rows) recs.push_back(prepare(row.path, config.operating_rate_hz));
    if (recs.empty()) throw PcgError("EmptyManifest", "no recordings to pretrain on");

    Rng rng(config.seed);
    ByolState state;
    state.init(config.embed_dim, config.tau, rng);
    if (!init_checkpoint.empty()) {
        std::vector<nn::Param*> enc_params;
        state.online_enc.collect(enc_params);
        nn::load_checkpoint(init_checkpoint, enc_params);
        std::vector<nn::Param*> tgt;
        state.target_enc.collect(tgt);
        for (std::size_t i = 0; i < enc_params.size(); ++i) tgt[i]->w = enc_params[i]->w;
    }

    std::vector<nn::Param*> online = state.online_params();
    nn::Adam adam;
    adam.lr = config.lr;

    MelConfig mc = config.mel;
    mc.random_crop = true;

    PretrainResult result;
    std::vector<std::size_t> order(recs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng.uniform_index(i)]);

        double loss_sum = 0.0;
        std::size_t pos = 0;
        while (pos < order.size()) {
            const std::size_t n_batch =
                std::min<std::size_t>(config.batch, order.size() - pos);
            for (auto* p : online) p->zero_grad();
            for (std::size_t b = 0; b < n_batch; ++b) {
                const auto& rec = recs[order[pos + b]];
                const MelSpectrogram spec = log_mel(rec, mc, rng);
                auto [v1, v2] = make_views(spec, config.augment, rng);
                loss_sum += byol_loss(state, v1, v2, true);
            }
            const double inv = 1.0 / static_cast<double>(n_batch);
            for (auto* p : online)
                for (auto& g : p->g) g *= inv;
            adam.step(online);
            ema_update(state);
            ++state.step;
            pos += n_batch;
        }
        result.epoch_loss.push_back(loss_sum / static_cast<double>(order.size()));

        char name[64];
        std::snprintf(name, sizeof(name), "encoder_epoch_%03d.json", epoch + 1);
        save_encoder(state.online_enc, config, (fs::path(out_dir) / name).string());
    }

    save_encoder(state.online_enc, config, (fs::path(out_dir) / "encoder.json").string());

    std::ofstream log((fs::path(out_dir) / "loss_log.csv").string());
    log.precision(17);
    log << "epoch,mean_loss\n";
    for (std::size_t e = 0; e < result.epoch_loss.size(); ++e)
        log << (e + 1) << "," << result.epoch_loss[e] << "\n";
    return result;
}

std::vector<std::vector<double>> encode_frozen(nn::Encoder& enc, const Manifest& manifest,
                                               const ByolConfig& config) {
    MelConfig mc = config.mel;
    mc.random_crop = false;
    Rng dummy(0);
    std::vector<std::vector<double>> table;
    table.reserve(manifest.rows.size());
    for (const auto& row : manifest.rows) {
        const PcgRecording rec = prepare(row.path, config.operating_rate_hz);
        table.push_back(enc.forward(log_mel(rec, mc, dummy)));
    }
    return table;
}

void write_embeddings_csv(const std::vector<std::string>& ids,
                          const std::vector<std::vector<double>>& table,
                          const std::string& path) {
    std::ofstream out(path);
    if (!out) throw PcgError("IoError", "cannot write " + path);
    out.precision(17);
    const std::size_t d = table.empty() ? 0 : table[0].size();
    out << "id";
    for (std::size_t i = 0; i < d; ++i) out << ",e_" << i;
    out << "\n";
    for (std::size_t r = 0; r < table.size(); ++r) {
        out << ids[r];
        for (double v : table[r]) out << "," << v;
        out << "\n";
    }
}

} // namespace pcg
