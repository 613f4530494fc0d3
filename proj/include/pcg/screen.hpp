#pragma once

#include "pcg/byol.hpp"
#include "pcg/manifest.hpp"
#include "pcg/nn.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace pcg {

enum class BmiCategory { underweight, normal, overweight, obese, missing };

// Per-age-group BMI thresholds t1 < t2 < t3; a value exactly at a threshold
// falls into the upper category.
struct CutoffTable {
    // rows: neonate, infant, child, adolescent
    std::array<std::array<double, 3>, 4> thresholds = {{
        {12.0, 16.0, 20.0},
        {13.0, 17.0, 21.0},
        {14.0, 18.0, 22.0},
        {15.0, 19.0, 23.0},
    }};
};

// BMI = weight_kg / (height_cm/100)^2, binned by the age group's thresholds.
// Any missing input (height, weight, or age group) -> missing.
// Throws BadCutoffTable if a row is not strictly increasing.
BmiCategory acbmi_category(const DemographicRecord& rec, const CutoffTable& cutoffs);

// Fixed 10-dim layout: [sex, pregnant, age one-hot(4), acBMI one-hot(4)].
// sex: female=0 male=1 missing=0.5; pregnant: no=0 yes=1 missing=0;
// missing age or acBMI -> all-zero block. Total: never throws.
std::vector<double> encode_demographics(const DemographicRecord& rec, const CutoffTable& cutoffs);

// Concatenation, audio first; fused dim = d + 10. Throws DimMismatch if the
// demo vector is not exactly 10-dim.
std::vector<double> fuse(const std::vector<double>& audio, const std::vector<double>& demo);

struct HeadConfig {
    int hidden = 256;      // two hidden layers of this width
    double dropout = 0.5;
    int epochs = 20;
    int batch = 32;
    double lr = 1e-4;
    int decay_every = 5;   // epochs; learning rate x0.1 at each boundary
    double decay_factor = 0.1;
    std::uint64_t seed = 1;
};

struct HeadModel {
    nn::Mlp mlp;
    int in_dim = 0;
    bool multimodal = false;

    std::vector<nn::Param*> params();
};

struct TrainLog {
    std::vector<double> epoch_loss;
    std::vector<double> epoch_lr;
};

// in -> 256 relu -> 256 relu -> 2 logits, dropout 0.5 on hidden activations.
// Cross-entropy, Adam, step-decayed learning rate. Throws SingleClass.
HeadModel train_head(const std::vector<std::vector<double>>& features,
                     const std::vector<int>& labels, const HeadConfig& config, bool multimodal,
                     TrainLog* log = nullptr);

// Finetune mode: gradients flow through the encoder as well. Spectrograms are
// precomputed (center crop); optional demo vectors are fused after encoding.
HeadModel train_head_finetune(nn::Encoder& encoder, const std::vector<MelSpectrogram>& specs,
                              const std::vector<std::vector<double>>* demos,
                              const std::vector<int>& labels, const HeadConfig& config,
                              TrainLog* log = nullptr);

// Softmax over 2 logits; label = argmax, tie -> abnormal (1). Demo required
// iff the model is multimodal (ModalityMismatch); ignored for unimodal models.
std::pair<double, int> predict_outcome(HeadModel& model, const std::vector<double>& audio_embed,
                                       const std::optional<std::vector<double>>& demo);

void save_head(HeadModel& model, const std::string& json_path);
HeadModel load_head(const std::string& json_path);

} // namespace pcg
