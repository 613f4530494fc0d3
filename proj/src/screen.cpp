#include "pcg/screen.hpp"
#include "pcg/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

namespace pcg {

using nlohmann::json;

BmiCategory acbmi_category(const DemographicRecord& rec, const CutoffTable& cutoffs) {
    for (const auto& row : cutoffs.thresholds)
        if (!(row[0] < row[1] && row[1] < row[2]))
            throw PcgError("BadCutoffTable", "thresholds must be strictly increasing");
    if (rec.age_group == AgeGroup::missing || !rec.height_cm || !rec.weight_kg)
        return BmiCategory::missing;
    const double h_m = *rec.height_cm / 100.0;
    const double bmi = *rec.weight_kg / (h_m * h_m);
    const auto& t = cutoffs.thresholds[static_cast<int>(rec.age_group)];
    if (bmi < t[0]) return BmiCategory::underweight;
    if (bmi < t[1]) return BmiCategory::normal;
    if (bmi < t[2]) return BmiCategory::overweight;
    return BmiCategory::obese;
}

std::vector<double> encode_demographics(const DemographicRecord& rec, const CutoffTable& cutoffs) {
    std::vector<double> v(10, 0.0);
    switch (rec.sex) {
        case Sex::female: v[0] = 0.0; break;
        case Sex::male: v[0] = 1.0; break;
        case Sex::missing: v[0] = 0.5; break;
    }
    v[1] = rec.pregnant == Tristate::yes ? 1.0 : 0.0;
    if (rec.age_group != AgeGroup::missing) v[2 + static_cast<int>(rec.age_group)] = 1.0;
    const BmiCategory cat = acbmi_category(rec, cutoffs);
    if (cat != BmiCategory::missing) v[6 + static_cast<int>(cat)] = 1.0;
    return v;
}

std::vector<double> fuse(const std::vector<double>& audio, const std::vector<double>& demo) {
    if (demo.size() != 10)
        throw PcgError("DimMismatch", "demo vector must be 10-dim, got " +
                                          std::to_string(demo.size()));
    std::vector<double> fused = audio;
    fused.insert(fused.end(), demo.begin(), demo.end());
    return fused;
}

std::vector<nn::Param*> HeadModel::params() {
    std::vector<nn::Param*> out;
    mlp.collect(out);
    return out;
}

namespace {

void check_classes(const std::vector<int>& labels) {
    const bool has0 = std::any_of(labels.begin(), labels.end(), [](int v) { return v == 0; });
    const bool has1 = std::any_of(labels.begin(), labels.end(), [](int v) { return v == 1; });
    if (!has0 || !has1) throw PcgError("SingleClass", "labels contain a single class");
}

double epoch_lr(const HeadConfig& c, int epoch) {
    return c.lr * std::pow(c.decay_factor, epoch / c.decay_every);
}

} // namespace

HeadModel train_head(const std::vector<std::vector<double>>& features,
                     const std::vector<int>& labels, const HeadConfig& config, bool multimodal,
                     TrainLog* log) {
    if (features.empty() || features.size() != labels.size())
        throw PcgError("LengthMismatch", "features/labels size mismatch");
    check_classes(labels);

    const int in_dim = static_cast<int>(features[0].size());
    Rng rng(config.seed);
    HeadModel model;
    model.in_dim = in_dim;
    model.multimodal = multimodal;
    model.mlp.init({in_dim, config.hidden, config.hidden, 2}, config.dropout, rng, "head");

    std::vector<nn::Param*> params = model.params();
    nn::Adam adam;

    std::vector<std::size_t> order(features.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        adam.lr = epoch_lr(config, epoch);
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng.uniform_index(i)]);

        double loss_sum = 0.0;
        std::size_t pos = 0;
        while (pos < order.size()) {
            const std::size_t n_batch = std::min<std::size_t>(config.batch, order.size() - pos);
            for (auto* p : params) p->zero_grad();
            for (std::size_t b = 0; b < n_batch; ++b) {
                const std::size_t i = order[pos + b];
                std::vector<double> logits = model.mlp.forward(features[i], true, rng);
                std::vector<double> d;
                loss_sum += nn::cross_entropy_loss(logits, labels[i], d);
                model.mlp.backward(d);
            }
            const double inv = 1.0 / static_cast<double>(n_batch);
            for (auto* p : params)
                for (auto& g : p->g) g *= inv;
            adam.step(params);
            pos += n_batch;
        }
        if (log) {
            log->epoch_loss.push_back(loss_sum / static_cast<double>(order.size()));
            log->epoch_lr.push_back(adam.lr);
        }
    }
    return model;
}

HeadModel train_head_finetune(nn::Encoder& encoder, const std::vector<MelSpectrogram>& specs,
                              const std::vector<std::vector<double>>* demos,
                              const std::vector<int>& labels, const HeadConfig& config,
                              TrainLog* log) {
    if (specs.empty() || specs.size() != labels.size())
        throw PcgError("LengthMismatch", "spectrograms/labels size mismatch");
    if (demos && demos->size() != specs.size())
        throw PcgError("LengthMismatch", "demographics/labels size mismatch");
    check_classes(labels);

    const bool multimodal = demos != nullptr;
    const int in_dim = encoder.embed_dim + (multimodal ? 10 : 0);
    Rng rng(config.seed);
    HeadModel model;
    model.in_dim = in_dim;
    model.multimodal = multimodal;
    model.mlp.init({in_dim, config.hidden, config.hidden, 2}, config.dropout, rng, "head");

    std::vector<nn::Param*> params = model.params();
    encoder.collect(params);
    nn::Adam adam;

    std::vector<std::size_t> order(specs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        adam.lr = epoch_lr(config, epoch);
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng.uniform_index(i)]);

        double loss_sum = 0.0;
        std::size_t pos = 0;
        while (pos < order.size()) {
            const std::size_t n_batch = std::min<std::size_t>(config.batch, order.size() - pos);
            for (auto* p : params) p->zero_grad();
            for (std::size_t b = 0; b < n_batch; ++b) {
                const std::size_t i = order[pos + b];
                std::vector<double> x = encoder.forward(specs[i]);
                if (multimodal) x = fuse(x, (*demos)[i]);
                std::vector<double> logits = model.mlp.forward(x, true, rng);
                std::vector<double> d;
                loss_sum += nn::cross_entropy_loss(logits, labels[i], d);
                std::vector<double> dx = model.mlp.backward(d);
                dx.resize(encoder.embed_dim); // demo block carries no gradient
                encoder.backward(dx);
            }
            const double inv = 1.0 / static_cast<double>(n_batch);
            for (auto* p : params)
                for (auto& g : p->g) g *= inv;
            adam.step(params);
            pos += n_batch;
        }
        if (log) {
            log->epoch_loss.push_back(loss_sum / static_cast<double>(order.size()));
            log->epoch_lr.push_back(adam.lr);
        }
    }
    return model;
}

std::pair<double, int> predict_outcome(HeadModel& model, const std::vector<double>& audio_embed,
                                       const std::optional<std::vector<double>>& demo) {
    std::vector<double> x;
    if (model.multimodal) {
        if (!demo)
            throw PcgError("ModalityMismatch", "multimodal model requires demographics");
        x = fuse(audio_embed, *demo);
    } else {
        x = audio_embed; // demographics, if supplied, are ignored
    }
    if (static_cast<int>(x.size()) != model.in_dim)
        throw PcgError("DimMismatch", "input dim " + std::to_string(x.size()) + " vs model " +
                                          std::to_string(model.in_dim));
    Rng dummy(0);
    const std::vector<double> p = nn::softmax(model.mlp.forward(x, false, dummy));
    const int label = p[1] >= p[0] ? 1 : 0; // tie -> abnormal
    return {p[1], label};
}

void save_head(HeadModel& model, const std::string& json_path) {
    std::vector<nn::Param*> params = model.params();
    std::vector<const nn::Param*> cparams(params.begin(), params.end());
    std::vector<std::vector<std::size_t>> shapes;
    for (const auto& l : model.mlp.layers) {
        shapes.push_back({static_cast<std::size_t>(l.out), static_cast<std::size_t>(l.in)});
        shapes.push_back({static_cast<std::size_t>(l.out)});
    }
    json cfg;
    cfg["kind"] = "screen_head";
    cfg["in_dim"] = model.in_dim;
    cfg["multimodal"] = model.multimodal;
    json dims = json::array();
    dims.push_back(model.mlp.layers.front().in);
    for (const auto& l : model.mlp.layers) dims.push_back(l.out);
    cfg["dims"] = dims;
    cfg["dropout"] = model.mlp.dropout_rate;

    std::filesystem::path blob(json_path);
    blob.replace_extension(".bin");
    nn::save_checkpoint(json_path, blob.string(), cparams, shapes, cfg.dump());
}

HeadModel load_head(const std::string& json_path) {
    std::ifstream in(json_path);
    if (!in) throw PcgError("CheckpointLoadError", json_path + " not found");
    json j;
    try {
        j = json::parse(in);
    } catch (const std::exception& e) {
        throw PcgError("CheckpointLoadError", std::string("bad manifest: ") + e.what());
    }
    const json& cfg = j.at("config");
    if (!cfg.contains("kind") || cfg["kind"].get<std::string>() != "screen_head")
        throw PcgError("CheckpointLoadError", json_path + ": not a screening head");

    HeadModel model;
    model.in_dim = cfg.at("in_dim").get<int>();
    model.multimodal = cfg.at("multimodal").get<bool>();
    Rng dummy(0);
    model.mlp.init(cfg.at("dims").get<std::vector<int>>(), cfg.at("dropout").get<double>(), dummy,
                   "head");
    std::vector<nn::Param*> params = model.params();
    nn::load_checkpoint(json_path, params);
    return model;
}

} // namespace pcg
