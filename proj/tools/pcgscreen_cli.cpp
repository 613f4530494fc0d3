// pcgscreen: command-line surface over the heart-sound screening toolkit.
// All numeric behavior is driven by a JSON run config plus a mandatory seed;
// flags only select files and modes.

#include "pcg/audio.hpp"
#include "pcg/byol.hpp"
#include "pcg/error.hpp"
#include "pcg/manifest.hpp"
#include "pcg/metrics.hpp"
#include "pcg/quality.hpp"
#include "pcg/screen.hpp"
#include "pcg/synth.hpp"
#include "pcg/threading.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pcg;

namespace {

struct RunConfig {
    std::uint64_t seed = 0;
    double quality_test_fraction = 0.2;
    QualityConfig quality;
    MelConfig mel;
    ByolConfig ssl;
    HeadConfig head;
    CostConfig metrics;
};

void reject_unknown(const json& obj, const std::vector<std::string>& allowed,
                    const std::string& where) {
    if (!obj.is_object()) throw PcgError("BadConfig", where + " must be a JSON object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
            throw PcgError("UnknownConfigKey", where + "." + it.key());
}

template <typename T>
void get_if(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj[key].get<T>();
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw PcgError("FileNotFound", path);
    json j;
    try {
        j = json::parse(in);
    } catch (const std::exception& e) {
        throw PcgError("BadConfig", path + ": " + e.what());
    }
    reject_unknown(j, {"io", "quality", "selection", "classifiers", "mel", "ssl", "head",
                       "metrics", "seed"},
                   "config");
    if (!j.contains("seed")) throw PcgError("MissingSeed", path + ": seed is mandatory");

    RunConfig cfg;
    cfg.seed = j["seed"].get<std::uint64_t>();

    if (j.contains("io")) reject_unknown(j["io"], {}, "io");
    if (j.contains("quality")) {
        const json& q = j["quality"];
        reject_unknown(q, {"test_fraction", "decision_threshold"}, "quality");
        get_if(q, "test_fraction", cfg.quality_test_fraction);
        get_if(q, "decision_threshold", cfg.quality.decision_threshold);
    }
    if (j.contains("selection")) {
        const json& s = j["selection"];
        reject_unknown(s, {"keep_fraction", "mi_bins"}, "selection");
        get_if(s, "keep_fraction", cfg.quality.keep_fraction);
        get_if(s, "mi_bins", cfg.quality.mi_bins);
    }
    if (j.contains("classifiers")) {
        const json& c = j["classifiers"];
        reject_unknown(c, {"svm", "rf", "gb"}, "classifiers");
        if (c.contains("svm")) {
            reject_unknown(c["svm"], {"C", "gamma", "tol", "max_iter"}, "classifiers.svm");
            get_if(c["svm"], "C", cfg.quality.svm.C);
            get_if(c["svm"], "gamma", cfg.quality.svm.gamma);
            get_if(c["svm"], "tol", cfg.quality.svm.tol);
            get_if(c["svm"], "max_iter", cfg.quality.svm.max_iter);
        }
        if (c.contains("rf")) {
            reject_unknown(c["rf"], {"n_trees", "max_depth", "min_samples_leaf"},
                           "classifiers.rf");
            get_if(c["rf"], "n_trees", cfg.quality.rf.n_trees);
            get_if(c["rf"], "max_depth", cfg.quality.rf.max_depth);
            get_if(c["rf"], "min_samples_leaf", cfg.quality.rf.min_samples_leaf);
        }
        if (c.contains("gb")) {
            reject_unknown(c["gb"], {"n_rounds", "learning_rate", "max_depth"},
                           "classifiers.gb");
            get_if(c["gb"], "n_rounds", cfg.quality.gb.n_rounds);
            get_if(c["gb"], "learning_rate", cfg.quality.gb.learning_rate);
            get_if(c["gb"], "max_depth", cfg.quality.gb.max_depth);
        }
    }
    if (j.contains("mel")) {
        const json& m = j["mel"];
        reject_unknown(m, {"window_s", "hop_s", "fmin_hz"}, "mel");
        get_if(m, "window_s", cfg.mel.window_s);
        get_if(m, "hop_s", cfg.mel.hop_s);
        get_if(m, "fmin_hz", cfg.mel.fmin_hz);
    }
    if (j.contains("ssl")) {
        const json& s = j["ssl"];
        reject_unknown(s, {"embed_dim", "tau", "epochs", "batch", "lr", "max_pitch_shift",
                           "stretch_lo", "stretch_hi"},
                       "ssl");
        get_if(s, "embed_dim", cfg.ssl.embed_dim);
        get_if(s, "tau", cfg.ssl.tau);
        get_if(s, "epochs", cfg.ssl.epochs);
        get_if(s, "batch", cfg.ssl.batch);
        get_if(s, "lr", cfg.ssl.lr);
        get_if(s, "max_pitch_shift", cfg.ssl.augment.max_pitch_shift);
        get_if(s, "stretch_lo", cfg.ssl.augment.stretch_lo);
        get_if(s, "stretch_hi", cfg.ssl.augment.stretch_hi);
    }
    if (j.contains("head")) {
        const json& h = j["head"];
        reject_unknown(h, {"hidden", "dropout", "epochs", "batch", "lr", "decay_every",
                           "decay_factor"},
                       "head");
        get_if(h, "hidden", cfg.head.hidden);
        get_if(h, "dropout", cfg.head.dropout);
        get_if(h, "epochs", cfg.head.epochs);
        get_if(h, "batch", cfg.head.batch);
        get_if(h, "lr", cfg.head.lr);
        get_if(h, "decay_every", cfg.head.decay_every);
        get_if(h, "decay_factor", cfg.head.decay_factor);
    }
    if (j.contains("metrics")) {
        const json& m = j["metrics"];
        reject_unknown(m, {"c_algorithm", "c_treatment", "c_error", "a0", "a1", "a2", "a4"},
                       "metrics");
        get_if(m, "c_algorithm", cfg.metrics.c_algorithm);
        get_if(m, "c_treatment", cfg.metrics.c_treatment);
        get_if(m, "c_error", cfg.metrics.c_error);
        get_if(m, "a0", cfg.metrics.a0);
        get_if(m, "a1", cfg.metrics.a1);
        get_if(m, "a2", cfg.metrics.a2);
        get_if(m, "a4", cfg.metrics.a4);
    }

    cfg.quality.seed = cfg.seed;
    cfg.ssl.seed = cfg.seed;
    cfg.ssl.mel = cfg.mel;
    cfg.head.seed = cfg.seed;
    return cfg;
}

json resolved_json(const RunConfig& c) {
    json j;
    j["seed"] = c.seed;
    j["io"] = json::object();
    j["quality"] = {{"test_fraction", c.quality_test_fraction},
                    {"decision_threshold", c.quality.decision_threshold}};
    j["selection"] = {{"keep_fraction", c.quality.keep_fraction}, {"mi_bins", c.quality.mi_bins}};
    j["classifiers"] = {
        {"svm",
         {{"C", c.quality.svm.C},
          {"gamma", c.quality.svm.gamma},
          {"tol", c.quality.svm.tol},
          {"max_iter", c.quality.svm.max_iter}}},
        {"rf",
         {{"n_trees", c.quality.rf.n_trees},
          {"max_depth", c.quality.rf.max_depth},
          {"min_samples_leaf", c.quality.rf.min_samples_leaf}}},
        {"gb",
         {{"n_rounds", c.quality.gb.n_rounds},
          {"learning_rate", c.quality.gb.learning_rate},
          {"max_depth", c.quality.gb.max_depth}}}};
    j["mel"] = {{"window_s", c.mel.window_s}, {"hop_s", c.mel.hop_s}, {"fmin_hz", c.mel.fmin_hz}};
    j["ssl"] = {{"embed_dim", c.ssl.embed_dim},
                {"tau", c.ssl.tau},
                {"epochs", c.ssl.epochs},
                {"batch", c.ssl.batch},
                {"lr", c.ssl.lr},
                {"max_pitch_shift", c.ssl.augment.max_pitch_shift},
                {"stretch_lo", c.ssl.augment.stretch_lo},
                {"stretch_hi", c.ssl.augment.stretch_hi}};
    j["head"] = {{"hidden", c.head.hidden},   {"dropout", c.head.dropout},
                 {"epochs", c.head.epochs},   {"batch", c.head.batch},
                 {"lr", c.head.lr},           {"decay_every", c.head.decay_every},
                 {"decay_factor", c.head.decay_factor}};
    j["metrics"] = {{"c_algorithm", c.metrics.c_algorithm},
                    {"c_treatment", c.metrics.c_treatment},
                    {"c_error", c.metrics.c_error},
                    {"a0", c.metrics.a0},
                    {"a1", c.metrics.a1},
                    {"a2", c.metrics.a2},
                    {"a4", c.metrics.a4}};
    return j;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw PcgError("IoError", "cannot write " + path);
    out << text;
}

void echo_config(const json& j, const std::string& out_dir) {
    fs::create_directories(out_dir);
    write_text((fs::path(out_dir) / "config.json").string(), j.dump(2) + "\n");
}

std::vector<int> outcome_labels(const Manifest& m) {
    std::vector<int> y;
    for (const auto& row : m.rows) {
        if (!row.outcome_label)
            throw PcgError("BadLabel", row.path + ": outcome label required");
        y.push_back(*row.outcome_label == Outcome::abnormal ? 1 : 0);
    }
    return y;
}

std::vector<std::vector<double>> demo_vectors(const Manifest& m) {
    CutoffTable cutoffs;
    std::vector<std::vector<double>> demos;
    for (const auto& row : m.rows) demos.push_back(encode_demographics(row.demographics, cutoffs));
    return demos;
}

void run_synth(int n, const std::string& out, std::uint64_t seed) {
    CorpusOptions opt;
    opt.n = n;
    opt.out_dir = out;
    opt.seed = seed;
    make_corpus(opt);
    json j = {{"command", "synth"}, {"n", n}, {"seed", seed}};
    echo_config(j, out);
}

void run_quality_train(const std::string& manifest_path, const std::string& config_path,
                       const std::string& out) {
    const RunConfig cfg = load_run_config(config_path);
    const Manifest manifest = read_manifest(manifest_path);
    auto [train, test] = stratified_split(manifest, cfg.quality_test_fraction, cfg.seed);

    const QualityModel model = train_quality(train, cfg.quality);
    fs::create_directories(out);
    save_quality_model(model, (fs::path(out) / "quality_model.json").string());

    std::vector<int> y, yhat;
    std::vector<double> scores;
    for (const auto& row : test.rows) {
        y.push_back(map_score(*row.quality_score).value);
        const auto [p, label] = score_quality(model, load_wav(row.path));
        scores.push_back(p);
        yhat.push_back(label);
    }
    const ConfusionCounts c = confusion(y, yhat);
    const BasicMetrics m = basic_metrics(c);
    json report;
    report["positive_class"] = "acceptable";
    report["held_out"] = {{"n", test.rows.size()}};
    report["accuracy"] = m.accuracy;
    report["precision"] = m.precision;
    report["recall"] = m.recall;
    report["specificity"] = m.specificity;
    report["f1"] = m.f1;
    report["auroc"] = auroc(scores, y);
    report["confusion"] = {{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}};
    write_text((fs::path(out) / "report.json").string(), report.dump(2) + "\n");
    echo_config(resolved_json(cfg), out);
}

void run_quality_gate(const std::string& model_path, const std::string& manifest_path,
                      const std::string& out) {
    const QualityModel model = load_quality_model(model_path);
    const Manifest manifest = read_manifest(manifest_path);
    const GateResult result = gate_manifest(model, manifest);
    fs::create_directories(out);
    write_manifest(result.kept, (fs::path(out) / "kept.csv").string());
    write_manifest(result.removed, (fs::path(out) / "removed.csv").string());
    write_text((fs::path(out) / "gate_report.json").string(),
               gate_report_json(result.report) + "\n");
    // no paths in the echo: outputs stay byte-identical across run directories
    echo_config({{"command", "quality-gate"}}, out);
}

void run_pretrain(const std::string& manifest_path, const std::string& config_path,
                  const std::string& init, const std::string& checkpoint,
                  const std::string& out) {
    const RunConfig cfg = load_run_config(config_path);
    if (init != "random" && init != "checkpoint")
        throw PcgError("BadArgument", "--init must be random or checkpoint");
    if (init == "checkpoint" && checkpoint.empty())
        throw PcgError("BadArgument", "--init checkpoint requires --checkpoint <path>");
    const Manifest manifest = read_manifest(manifest_path);
    pretrain(manifest, cfg.ssl, out, init == "checkpoint" ? checkpoint : "");
    echo_config(resolved_json(cfg), out);
}

void run_train(const std::string& manifest_path, const std::string& encoder_path,
               const std::string& mode, const std::string& fusion,
               const std::string& config_path, const std::string& out) {
    if (mode != "frozen" && mode != "finetune")
        throw PcgError("BadArgument", "--mode must be frozen or finetune");
    if (fusion != "audio" && fusion != "audio+demo")
        throw PcgError("BadArgument", "--fusion must be audio or audio+demo");

    RunConfig cfg = load_run_config(config_path);
    ByolConfig enc_cfg = cfg.ssl;
    nn::Encoder encoder = load_encoder(encoder_path, &enc_cfg);
    enc_cfg.mel = cfg.mel;
    const Manifest manifest = read_manifest(manifest_path);
    const std::vector<int> labels = outcome_labels(manifest);
    const bool multimodal = fusion == "audio+demo";

    TrainLog log;
    HeadModel head;
    fs::create_directories(out);
    if (mode == "frozen") {
        const auto embeds = encode_frozen(encoder, manifest, enc_cfg);
        std::vector<std::vector<double>> X = embeds;
        if (multimodal) {
            const auto demos = demo_vectors(manifest);
            for (std::size_t i = 0; i < X.size(); ++i) X[i] = fuse(embeds[i], demos[i]);
        }
        head = train_head(X, labels, cfg.head, multimodal, &log);
        // frozen mode: encoder checkpoint bytes pass through unchanged
        fs::copy_file(encoder_path, fs::path(out) / "encoder.json",
                      fs::copy_options::overwrite_existing);
        fs::path blob(encoder_path);
        blob.replace_extension(".bin");
        fs::copy_file(blob, fs::path(out) / "encoder.bin",
                      fs::copy_options::overwrite_existing);
    } else {
        MelConfig mc = enc_cfg.mel;
        mc.random_crop = false;
        Rng dummy(0);
        std::vector<MelSpectrogram> specs;
        for (const auto& row : manifest.rows)
            specs.push_back(
                log_mel(resample(load_wav(row.path), enc_cfg.operating_rate_hz), mc, dummy));
        std::vector<std::vector<double>> demos;
        if (multimodal) demos = demo_vectors(manifest);
        head = train_head_finetune(encoder, specs, multimodal ? &demos : nullptr, labels,
                                   cfg.head, &log);
        save_encoder(encoder, enc_cfg, (fs::path(out) / "encoder.json").string());
    }
    save_head(head, (fs::path(out) / "head.json").string());

    std::ostringstream tl;
    tl.precision(17);
    tl << "epoch,mean_loss,learning_rate\n";
    for (std::size_t e = 0; e < log.epoch_loss.size(); ++e)
        tl << (e + 1) << "," << log.epoch_loss[e] << "," << log.epoch_lr[e] << "\n";
    write_text((fs::path(out) / "train_log.csv").string(), tl.str());
    echo_config(resolved_json(cfg), out);
}

void run_evaluate(const std::string& model_dir, const std::string& manifest_path,
                  const std::string& cost_config_path, const std::string& config_path,
                  const std::string& out) {
    RunConfig cfg = load_run_config(config_path);
    if (!cost_config_path.empty()) {
        std::ifstream in(cost_config_path);
        if (!in) throw PcgError("FileNotFound", cost_config_path);
        json j = json::parse(in);
        reject_unknown(j, {"c_algorithm", "c_treatment", "c_error", "a0", "a1", "a2", "a4"},
                       "cost-config");
        get_if(j, "c_algorithm", cfg.metrics.c_algorithm);
        get_if(j, "c_treatment", cfg.metrics.c_treatment);
        get_if(j, "c_error", cfg.metrics.c_error);
        get_if(j, "a0", cfg.metrics.a0);
        get_if(j, "a1", cfg.metrics.a1);
        get_if(j, "a2", cfg.metrics.a2);
        get_if(j, "a4", cfg.metrics.a4);
    }

    ByolConfig enc_cfg = cfg.ssl;
    nn::Encoder encoder = load_encoder((fs::path(model_dir) / "encoder.json").string(), &enc_cfg);
    enc_cfg.mel = cfg.mel;
    HeadModel head = load_head((fs::path(model_dir) / "head.json").string());

    const Manifest manifest = read_manifest(manifest_path);
    const auto embeds = encode_frozen(encoder, manifest, enc_cfg);
    CutoffTable cutoffs;
    std::vector<Prediction> preds;
    for (std::size_t i = 0; i < manifest.rows.size(); ++i) {
        std::optional<std::vector<double>> demo;
        if (head.multimodal)
            demo = encode_demographics(manifest.rows[i].demographics, cutoffs);
        const auto [p, label] = predict_outcome(head, embeds[i], demo);
        preds.push_back({manifest.rows[i].path, p, label});
    }
    fs::create_directories(out);
    write_predictions_csv(preds, (fs::path(out) / "predictions.csv").string());
    const EvalReport report = evaluate_run(preds, manifest, cfg.metrics);
    write_text((fs::path(out) / "report.json").string(),
               report_json(report, cfg.metrics) + "\n");
    echo_config(resolved_json(cfg), out);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Heart-sound screening toolkit"};
    app.require_subcommand(1);
    int threads = 1;
    app.add_option("--threads", threads, "worker thread cap (default 1, deterministic)");

    // synth
    int n = 100;
    std::string out, manifest_path, config_path, model_path;
    std::uint64_t seed = 0;
    auto* synth = app.add_subcommand("synth", "generate a synthetic labeled corpus");
    synth->add_option("--n", n)->required();
    synth->add_option("--out", out)->required();
    synth->add_option("--seed", seed)->required();

    auto* qtrain = app.add_subcommand("quality-train", "train the quality voting classifier");
    qtrain->add_option("--manifest", manifest_path)->required();
    qtrain->add_option("--config", config_path)->required();
    qtrain->add_option("--out", out)->required();

    auto* qgate = app.add_subcommand("quality-gate", "partition a manifest by predicted quality");
    qgate->add_option("--model", model_path)->required();
    qgate->add_option("--manifest", manifest_path)->required();
    qgate->add_option("--out", out)->required();

    std::string init = "random", checkpoint;
    auto* pre = app.add_subcommand("pretrain", "self-supervised encoder pretraining");
    pre->add_option("--manifest", manifest_path)->required();
    pre->add_option("--config", config_path)->required();
    pre->add_option("--init", init, "random|checkpoint");
    pre->add_option("--checkpoint", checkpoint, "warm-start checkpoint (init=checkpoint)");
    pre->add_option("--out", out)->required();

    std::string mode = "frozen", fusion = "audio", encoder_path;
    auto* train = app.add_subcommand("train", "train the screening head");
    train->add_option("--manifest", manifest_path)->required();
    train->add_option("--encoder", encoder_path)->required();
    train->add_option("--mode", mode, "frozen|finetune");
    train->add_option("--fusion", fusion, "audio|audio+demo");
    train->add_option("--config", config_path)->required();
    train->add_option("--out", out)->required();

    std::string cost_config_path;
    auto* eval = app.add_subcommand("evaluate", "score a manifest and report metrics");
    eval->add_option("--model", model_path, "directory produced by `train`")->required();
    eval->add_option("--manifest", manifest_path)->required();
    eval->add_option("--cost-config", cost_config_path);
    eval->add_option("--config", config_path)->required();
    eval->add_option("--out", out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        json err = {{"error", "BadArgument"}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return 2;
    }

    set_num_threads(threads);
    try {
        if (synth->parsed()) run_synth(n, out, seed);
        else if (qtrain->parsed()) run_quality_train(manifest_path, config_path, out);
        else if (qgate->parsed()) run_quality_gate(model_path, manifest_path, out);
        else if (pre->parsed()) run_pretrain(manifest_path, config_path, init, checkpoint, out);
        else if (train->parsed())
            run_train(manifest_path, encoder_path, mode, fusion, config_path, out);
        else if (eval->parsed())
            run_evaluate(model_path, manifest_path, cost_config_path, config_path, out);
    } catch (const PcgError& e) {
        json err = {{"error", e.code()}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        json err = {{"error", "InternalError"}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return 1;
    }
    return 0;
}
