#pragma once

#include "pcg/manifest.hpp"
#include "pcg/mel.hpp"
#include "pcg/nn.hpp"

#include <string>
#include <vector>

namespace pcg {

struct ByolConfig {
    int embed_dim = 128; // 3072 mirrors the reference feature width
    double tau = 0.99;
    int epochs = 30;
    int batch = 32;
    double lr = 1e-4;
    std::uint64_t seed = 1;
    MelConfig mel;          // random_crop forced on during training
    AugmentRanges augment;
    int operating_rate_hz = 1000;
};

// Online network: encoder + projector + predictor. Target: EMA copy of the
// encoder + projector, never gradient-updated.
struct ByolState {
    nn::Encoder online_enc, target_enc;
    nn::Mlp online_proj, target_proj; // embed -> 256 -> 128
    nn::Mlp online_pred;              // 128 -> 256 -> 128
    double tau = 0.99;
    long step = 0;

    void init(int embed_dim, double tau_, Rng& rng);
    std::vector<nn::Param*> online_params();
    std::vector<nn::Param*> target_params();
};

// Symmetric loss over both view orders; each term = ||normalize(pred) -
// normalize(target_proj)||^2 in [0, 4]. accumulate_grads adds d(loss)/d(online
// params) into the online gradient buffers.
double byol_loss(ByolState& state, const MelSpectrogram& view1, const MelSpectrogram& view2,
                 bool accumulate_grads = false);

// theta_t <- tau * theta_t + (1 - tau) * theta_o, elementwise.
void ema_update(ByolState& state);

struct PretrainResult {
    std::vector<double> epoch_loss; // mean over steps
};

// Full pretraining loop over the manifest's recordings. Writes a checkpoint
// per epoch plus `encoder.json`/`encoder.bin` and `loss_log.csv` under
// out_dir. init_checkpoint empty = random init; otherwise weights are loaded
// first (CheckpointLoadError on shape mismatch).
PretrainResult pretrain(const Manifest& manifest, const ByolConfig& config,
                        const std::string& out_dir, const std::string& init_checkpoint = "");

void save_encoder(nn::Encoder& enc, const ByolConfig& config, const std::string& json_path);
// Returns the encoder restored from a checkpoint written by save_encoder;
// embed_dim is read from the stored config.
nn::Encoder load_encoder(const std::string& json_path, ByolConfig* config_out = nullptr);

// One embedding per manifest row (center-crop spectrogram, no mutation).
std::vector<std::vector<double>> encode_frozen(nn::Encoder& enc, const Manifest& manifest,
                                               const ByolConfig& config);
// CSV: id,e_0,...,e_{d-1}
void write_embeddings_csv(const std::vector<std::string>& ids,
                          const std::vector<std::vector<double>>& table,
                          const std::string& path);

} // namespace pcg
