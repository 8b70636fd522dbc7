#pragma once

#include <array>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "knock/manifest.hpp"
#include "knock/planner.hpp"
#include "knock/report.hpp"
#include "knock/signal.hpp"
#include "knock/train.hpp"
#include "knock/wav.hpp"

namespace knock::cli {

/// MfccConfig implied by a model config: square filterbank, matching frames.
inline MfccConfig mfcc_for_model(const nn::ModelConfig& cfg) {
    MfccConfig m;
    m.n_mels = cfg.in_channels;
    m.n_coeffs = cfg.in_channels;
    m.frames = cfg.frames;
    return m;
}

inline void write_run_config(const std::string& out_dir, const std::string& command,
                             const nlohmann::json& options) {
    std::filesystem::create_directories(out_dir);
    nlohmann::json j{{"version", 1}, {"command", command}, {"options", options}};
    write_json((std::filesystem::path(out_dir) / "run_config.json").string(), j);
}

// ---------------------------------------------------------------------------

struct SynthOptions {
    std::array<std::size_t, 3> counts{0, 0, 0};
    std::string out_dir;
    std::uint64_t seed = 0;
    std::size_t knocks_per_clip = 1; // >1 sums that many knocks per clip
};

/// Generate a labeled synthetic dataset; returns the manifest (also saved
/// to <out_dir>/manifest.csv).
inline Manifest cmd_synth(const SynthOptions& opt) {
    std::filesystem::create_directories(opt.out_dir);
    write_run_config(opt.out_dir, "synth",
                     {{"counts", opt.counts},
                      {"seed", opt.seed},
                      {"knocks_per_clip", opt.knocks_per_clip}});

    struct Job {
        int label;
        std::size_t index_in_class;
        std::size_t global;
    };
    std::vector<Job> jobs;
    for (int c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < opt.counts[c]; ++i)
            jobs.push_back({c, i, jobs.size()});

    const Rng master(opt.seed);
    std::vector<ManifestEntry> entries(jobs.size());
    parallel_for(jobs.size(), [&](std::size_t j) {
        const Job& job = jobs[j];
        Rng rng = master.split(job.global);
        Signal sig;
        if (opt.knocks_per_clip <= 1) {
            sig = synth_knock(static_cast<Maturity>(job.label), rng);
        } else {
            std::vector<Signal> knocks;
            for (std::size_t k = 0; k < opt.knocks_per_clip; ++k)
                knocks.push_back(synth_knock(static_cast<Maturity>(job.label), rng));
            sig = combine_sum(knocks);
        }
        const std::string stem =
            "synth_" + std::to_string(job.label) + "_" + std::to_string(job.index_in_class);
        write_wav(sig, (std::filesystem::path(opt.out_dir) / (stem + ".wav")).string());
        ManifestEntry e;
        e.path = stem + ".wav";
        e.label = static_cast<Maturity>(job.label);
        e.provenance = Provenance::synthetic;
        e.source_id = stem;
        entries[j] = std::move(e);
    });

    Manifest m;
    for (auto& e : entries) m.add(std::move(e));
    m.save((std::filesystem::path(opt.out_dir) / "manifest.csv").string());
    return Manifest::load((std::filesystem::path(opt.out_dir) / "manifest.csv").string());
}

// ---------------------------------------------------------------------------

struct AugmentOptions {
    std::string manifest_path;
    std::array<std::size_t, 3> targets{0, 0, 0};
    std::string out_dir;
    std::uint64_t seed = 0;
    double audiomentation_ratio = 0.5;
};

/// Grow the dataset to the per-class targets; returns the merged manifest
/// (also saved to <out_dir>/manifest.csv).
inline Manifest cmd_augment(const AugmentOptions& opt) {
    const Manifest source = Manifest::load(opt.manifest_path);
    write_run_config(opt.out_dir, "augment",
                     {{"manifest", opt.manifest_path},
                      {"targets", opt.targets},
                      {"seed", opt.seed},
                      {"audiomentation_ratio", opt.audiomentation_ratio}});
    AugmentPlan plan;
    plan.targets = opt.targets;
    plan.audiomentation_ratio = opt.audiomentation_ratio;
    Manifest merged = plan_and_augment(source, plan, opt.seed, opt.out_dir);
    merged.save((std::filesystem::path(opt.out_dir) / "manifest.csv").string());
    return Manifest::load((std::filesystem::path(opt.out_dir) / "manifest.csv").string());
}

// ---------------------------------------------------------------------------

struct FeaturesOptions {
    std::string manifest_path;
    std::string out_path;
    std::size_t frames = 64;
    std::size_t n_coeffs = 128;
};

/// Featurize a manifest into a KNF1 record file (row order = manifest order).
inline void cmd_features(const FeaturesOptions& opt) {
    const Manifest m = Manifest::load(opt.manifest_path);
    MfccConfig cfg;
    cfg.frames = opt.frames;
    cfg.n_mels = opt.n_coeffs;
    cfg.n_coeffs = opt.n_coeffs;
    std::vector<FeatureRecord> records(m.size());
    parallel_for(m.size(), [&](std::size_t i) {
        records[i].label = static_cast<int>(m[i].label);
        records[i].tensor = featurize(read_wav(m.resolve(m[i])), cfg);
    });
    write_feature_file(opt.out_path, records);
}

// ---------------------------------------------------------------------------

struct TrainOptions {
    std::string manifest_path;
    std::string cell = "rnn";
    std::uint64_t seed = 0;
    std::string out_dir;
    double test_fraction = 0.10;   // 0 disables the internal split
    std::string val_manifest_path; // overrides the internal split
    std::string features_path;     // optional KNF1 cache aligned with the manifest
    std::size_t frames = 64;
    std::size_t epochs = 60;
    bool drop_outliers = false;
};

struct TrainOutputs {
    std::string checkpoint_path;
    std::string trainlog_path;
    std::string train_manifest_path; // empty when no internal split
    std::string test_manifest_path;
    TrainResult result;
};

inline Dataset dataset_from_options(const Manifest& m, const std::string& features_path,
                                    const MfccConfig& cfg) {
    if (features_path.empty()) return load_dataset(m, cfg);
    const auto records = read_feature_file(features_path);
    if (records.size() != m.size())
        throw ArgumentError("feature cache has " + std::to_string(records.size()) +
                            " records but the manifest has " + std::to_string(m.size()));
    Dataset ds;
    ds.features.reserve(records.size());
    ds.labels.reserve(records.size());
    for (const auto& r : records) {
        ds.features.push_back(r.tensor);
        ds.labels.push_back(r.label);
    }
    return ds;
}

/**
 * Train one model. With the default 10% internal split, the hold-out side
 * doubles as the validation set for per-epoch loss and best-epoch
 * selection, and both sub-manifests are written next to the checkpoint.
 */
inline TrainOutputs cmd_train(const TrainOptions& opt) {
    nn::ModelConfig cfg;
    cfg.cell = nn::cell_from_string(opt.cell);
    cfg.frames = opt.frames;
    cfg.epochs = opt.epochs;
    cfg.validate();

    write_run_config(opt.out_dir, "train",
                     {{"manifest", opt.manifest_path},
                      {"cell", opt.cell},
                      {"seed", opt.seed},
                      {"test_fraction", opt.test_fraction},
                      {"val_manifest", opt.val_manifest_path},
                      {"features", opt.features_path},
                      {"frames", opt.frames},
                      {"epochs", opt.epochs},
                      {"drop_outliers", opt.drop_outliers}});

    const Manifest full = Manifest::load(opt.manifest_path);
    const MfccConfig mfcc_cfg = mfcc_for_model(cfg);
    Dataset all = dataset_from_options(full, opt.features_path, mfcc_cfg);

    TrainOutputs out;
    Dataset train_ds, val_ds;
    if (!opt.val_manifest_path.empty()) {
        train_ds = std::move(all);
        val_ds = load_dataset(Manifest::load(opt.val_manifest_path), mfcc_cfg);
    } else if (opt.test_fraction > 0.0) {
        SplitConfig scfg;
        scfg.test_fraction = opt.test_fraction;
        scfg.seed = opt.seed;
        auto [train_idx, test_idx] = split_train_test_indices(full, scfg);
        out.train_manifest_path =
            (std::filesystem::path(opt.out_dir) / "train_manifest.csv").string();
        out.test_manifest_path =
            (std::filesystem::path(opt.out_dir) / "test_manifest.csv").string();
        manifest_subset(full, train_idx).save(out.train_manifest_path);
        manifest_subset(full, test_idx).save(out.test_manifest_path);
        train_ds = all.subset(train_idx);
        val_ds = all.subset(test_idx);
    } else {
        throw ArgumentError("train: need either --val-manifest or a positive test fraction");
    }

    if (opt.drop_outliers) {
        const auto retained = outlier_filter(train_ds.features, train_ds.labels);
        train_ds = train_ds.subset(retained);
    }

    out.result = train(train_ds, val_ds, cfg, opt.seed);
    out.checkpoint_path = (std::filesystem::path(opt.out_dir) / "checkpoint.knck").string();
    out.trainlog_path = (std::filesystem::path(opt.out_dir) / "trainlog.csv").string();
    out.result.checkpoint.save(out.checkpoint_path);
    write_trainlog_csv(out.trainlog_path, out.result.log);
    return out;
}

// ---------------------------------------------------------------------------

struct EvalOptions {
    std::string checkpoint_path;
    std::string manifest_path;
    std::string out_dir;
    std::string features_path;
    std::string weight_set = "best";
    std::string report_name = "metrics.json";
};

inline MetricsReport cmd_eval(const EvalOptions& opt) {
    write_run_config(opt.out_dir, "eval",
                     {{"checkpoint", opt.checkpoint_path},
                      {"manifest", opt.manifest_path},
                      {"features", opt.features_path},
                      {"weight_set", opt.weight_set}});
    const nn::Checkpoint ck = nn::Checkpoint::load(opt.checkpoint_path);
    nn::Model model = model_from_checkpoint(ck, opt.weight_set);
    const Manifest m = Manifest::load(opt.manifest_path);
    const Dataset ds =
        dataset_from_options(m, opt.features_path, mfcc_for_model(model.config()));
    const auto pairs = predict(model, ds);
    const MetricsReport rep = metrics(confusion(pairs));
    write_json((std::filesystem::path(opt.out_dir) / opt.report_name).string(),
               metrics_to_json(rep));
    write_confusion_csv((std::filesystem::path(opt.out_dir) / "confusion.csv").string(),
                        rep.confusion);
    return rep;
}

// ---------------------------------------------------------------------------

struct CompareOptions {
    std::string report_a_path;
    std::string report_b_path; // either this or ml_reference
    std::string ml_reference;  // "ann", "rf", "svm", or "all" (the group)
    std::string out_path;
    std::string model_a_name = "model_a";
    std::string model_b_name = "model_b";
};

inline nlohmann::json cmd_compare(const CompareOptions& opt) {
    const MetricsReport a = metrics_from_json(read_json(opt.report_a_path));
    const auto ia = a.indicators();
    std::vector<double> va(ia.begin(), ia.end());
    std::vector<double> vb;
    std::string b_name = opt.model_b_name;

    if (!opt.ml_reference.empty()) {
        if (opt.ml_reference == "all") {
            for (const auto& r : ml_references()) {
                vb.push_back(r.accuracy);
                vb.push_back(r.f1);
            }
            b_name = "ml-group";
        } else {
            bool found = false;
            for (const auto& r : ml_references())
                if (opt.ml_reference == r.name) {
                    vb = {r.accuracy, r.f1};
                    va = {a.accuracy, a.f1_macro}; // match the available indicators
                    b_name = r.name;
                    found = true;
                }
            if (!found)
                throw ArgumentError("unknown ML reference: " + opt.ml_reference +
                                    " (expected ann, rf, svm, or all)");
        }
    } else {
        const MetricsReport b = metrics_from_json(read_json(opt.report_b_path));
        const auto ib = b.indicators();
        vb.assign(ib.begin(), ib.end());
    }

    const double p = compare_models(va, vb);
    const nlohmann::json j = comparison_to_json(opt.model_a_name, b_name, va, vb, p);
    if (!opt.out_path.empty()) write_json(opt.out_path, j);
    return j;
}

// ---------------------------------------------------------------------------

struct KfoldOptions {
    std::string manifest_path;
    std::string cell = "rnn";
    std::size_t k = 5;
    std::uint64_t seed = 0;
    std::string out_dir;
    std::string features_path;
    std::size_t frames = 64;
    std::size_t epochs = 60;
};

/// Cross-validated training: trains one model per fold and reports
/// per-fold and aggregate metrics.
inline nlohmann::json cmd_kfold(const KfoldOptions& opt) {
    nn::ModelConfig cfg;
    cfg.cell = nn::cell_from_string(opt.cell);
    cfg.frames = opt.frames;
    cfg.epochs = opt.epochs;
    cfg.validate();

    write_run_config(opt.out_dir, "kfold",
                     {{"manifest", opt.manifest_path},
                      {"cell", opt.cell},
                      {"k", opt.k},
                      {"seed", opt.seed},
                      {"features", opt.features_path},
                      {"frames", opt.frames},
                      {"epochs", opt.epochs}});

    const Manifest full = Manifest::load(opt.manifest_path);
    SplitConfig scfg;
    scfg.k_folds = opt.k;
    scfg.seed = opt.seed;
    const auto folds = kfold_split_indices(full, scfg);
    const Dataset all =
        dataset_from_options(full, opt.features_path, mfcc_for_model(cfg));

    nlohmann::json fold_reports = nlohmann::json::array();
    double acc_sum = 0.0, best_acc = 0.0;
    std::size_t best_fold = 0;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        const Dataset train_ds = all.subset(folds[f].first);
        const Dataset val_ds = all.subset(folds[f].second);
        TrainResult res = train(train_ds, val_ds, cfg, opt.seed + f);
        nn::Model model = model_from_checkpoint(res.checkpoint, "best");
        const MetricsReport rep = metrics(confusion(predict(model, val_ds)));
        acc_sum += rep.accuracy;
        if (rep.accuracy > best_acc) {
            best_acc = rep.accuracy;
            best_fold = f;
        }
        nlohmann::json jf = metrics_to_json(rep);
        jf["fold"] = f;
        jf["best_epoch"] = res.best_epoch;
        jf["best_val_loss"] = res.best_val_loss;
        fold_reports.push_back(jf);
    }

    nlohmann::json j{{"version", 1},
                     {"cell", opt.cell},
                     {"k", opt.k},
                     {"folds", fold_reports},
                     {"mean_accuracy", acc_sum / static_cast<double>(folds.size())},
                     {"best_fold", best_fold},
                     {"best_fold_accuracy", best_acc}};
    write_json((std::filesystem::path(opt.out_dir) / "kfold.json").string(), j);
    return j;
}

} // namespace knock::cli
