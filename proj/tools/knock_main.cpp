// knock: synthetic knock-sound dataset generation, augmentation, MFCC
// feature extraction, and conv-recurrent maturity classification.

#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <vector>

#include "knock/cli.hpp"

namespace {

std::array<std::size_t, 3> parse_triple(const std::string& text, const char* what) {
    std::array<std::size_t, 3> out{};
    std::stringstream ss(text);
    std::string item;
    int i = 0;
    while (std::getline(ss, item, ',')) {
        if (i >= 3) throw knock::ArgumentError(std::string(what) + ": expected 3 values");
        const long v = std::stol(item);
        if (v < 0) throw knock::ArgumentError(std::string(what) + ": values must be >= 0");
        out[i++] = static_cast<std::size_t>(v);
    }
    if (i != 3) throw knock::ArgumentError(std::string(what) + ": expected 3 comma-separated values");
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"knock-sound maturity classification pipeline"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Key=value config file overriding defaults");

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic labeled dataset");
    std::string synth_counts = "24,108,255";
    knock::cli::SynthOptions synth_opt;
    synth->add_option("--counts", synth_counts, "Clips per class, e.g. 24,108,255");
    synth->add_option("--out-dir", synth_opt.out_dir, "Output directory")->required();
    synth->add_option("--seed", synth_opt.seed, "Master seed");
    synth->add_option("--knocks-per-clip", synth_opt.knocks_per_clip,
                      "Sum this many knocks per clip (default 1)");

    // augment
    auto* augment = app.add_subcommand("augment", "Grow a dataset to per-class targets");
    std::string augment_targets = "4050,4050,5850";
    knock::cli::AugmentOptions augment_opt;
    augment->add_option("--manifest", augment_opt.manifest_path, "Input manifest CSV")->required();
    augment->add_option("--targets", augment_targets, "Per-class targets, e.g. 4050,4050,5850");
    augment->add_option("--out-dir", augment_opt.out_dir, "Output directory")->required();
    augment->add_option("--seed", augment_opt.seed, "Master seed");
    augment->add_option("--ratio", augment_opt.audiomentation_ratio,
                        "Fraction generated by audiomentation vs procedural (default 0.5)");

    // features
    auto* features = app.add_subcommand("features", "Write MFCC tensors to a KNF1 file");
    knock::cli::FeaturesOptions features_opt;
    features->add_option("--manifest", features_opt.manifest_path, "Input manifest CSV")->required();
    features->add_option("--out", features_opt.out_path, "Output feature file")->required();
    features->add_option("--frames", features_opt.frames, "Frame count T (default 64)");
    features->add_option("--coeffs", features_opt.n_coeffs, "MFCC coefficients (default 128)");

    // train
    auto* train = app.add_subcommand("train", "Train the RNN or LSTM classifier");
    knock::cli::TrainOptions train_opt;
    train->add_option("--manifest", train_opt.manifest_path, "Input manifest CSV")->required();
    train->add_option("--cell", train_opt.cell, "rnn or lstm")->required();
    train->add_option("--seed", train_opt.seed, "Master seed");
    train->add_option("--out-dir", train_opt.out_dir, "Output directory")->required();
    train->add_option("--test-fraction", train_opt.test_fraction,
                      "Internal hold-out fraction (default 0.1; 0 disables)");
    train->add_option("--val-manifest", train_opt.val_manifest_path,
                      "Validate on this manifest instead of an internal split");
    train->add_option("--features", train_opt.features_path,
                      "KNF1 feature cache aligned with the manifest");
    train->add_option("--frames", train_opt.frames, "Feature frame count T (default 64)");
    train->add_option("--epochs", train_opt.epochs, "Training epochs (default 60)");
    train->add_flag("--drop-outliers", train_opt.drop_outliers,
                    "Apply the per-class z-score outlier filter to the training set");

    // eval
    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a manifest");
    knock::cli::EvalOptions eval_opt;
    eval->add_option("--checkpoint", eval_opt.checkpoint_path, "Checkpoint file")->required();
    eval->add_option("--manifest", eval_opt.manifest_path, "Manifest to evaluate")->required();
    eval->add_option("--out-dir", eval_opt.out_dir, "Output directory")->required();
    eval->add_option("--features", eval_opt.features_path, "KNF1 feature cache");
    eval->add_option("--weight-set", eval_opt.weight_set,
                     "Checkpoint weight set: best (default) or final");
    eval->add_option("--report-name", eval_opt.report_name,
                     "Metrics JSON file name (default metrics.json)");

    // compare
    auto* compare = app.add_subcommand("compare", "Welch t-test between two metric reports");
    knock::cli::CompareOptions compare_opt;
    compare->add_option("--report-a", compare_opt.report_a_path, "Metrics JSON A")->required();
    compare->add_option("--report-b", compare_opt.report_b_path, "Metrics JSON B");
    compare->add_option("--ml", compare_opt.ml_reference,
                        "Compare against reference ML scores: ann, rf, svm, or all");
    compare->add_option("--out", compare_opt.out_path, "Comparison JSON output path");
    compare->add_option("--name-a", compare_opt.model_a_name, "Label for model A");
    compare->add_option("--name-b", compare_opt.model_b_name, "Label for model B");

    // kfold
    auto* kfold = app.add_subcommand("kfold", "Stratified k-fold cross-validated training");
    knock::cli::KfoldOptions kfold_opt;
    kfold->add_option("--manifest", kfold_opt.manifest_path, "Input manifest CSV")->required();
    kfold->add_option("--cell", kfold_opt.cell, "rnn or lstm");
    kfold->add_option("--k", kfold_opt.k, "Fold count (default 5)");
    kfold->add_option("--seed", kfold_opt.seed, "Master seed");
    kfold->add_option("--out-dir", kfold_opt.out_dir, "Output directory")->required();
    kfold->add_option("--features", kfold_opt.features_path, "KNF1 feature cache");
    kfold->add_option("--frames", kfold_opt.frames, "Feature frame count T (default 64)");
    kfold->add_option("--epochs", kfold_opt.epochs, "Training epochs per fold (default 60)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            synth_opt.counts = parse_triple(synth_counts, "--counts");
            const knock::Manifest m = knock::cli::cmd_synth(synth_opt);
            const auto c = m.class_counts();
            std::cout << "wrote " << m.size() << " clips (" << c[0] << "/" << c[1] << "/"
                      << c[2] << ") to " << synth_opt.out_dir << "\n";
        } else if (augment->parsed()) {
            augment_opt.targets = parse_triple(augment_targets, "--targets");
            const knock::Manifest m = knock::cli::cmd_augment(augment_opt);
            const auto c = m.class_counts();
            std::cout << "dataset now " << m.size() << " clips (" << c[0] << "/" << c[1]
                      << "/" << c[2] << "), manifest in " << augment_opt.out_dir << "\n";
        } else if (features->parsed()) {
            knock::cli::cmd_features(features_opt);
            std::cout << "wrote features to " << features_opt.out_path << "\n";
        } else if (train->parsed()) {
            const auto out = knock::cli::cmd_train(train_opt);
            std::cout << "trained " << train_opt.cell << ": best epoch "
                      << out.result.best_epoch << " (val loss " << out.result.best_val_loss
                      << "), checkpoint at " << out.checkpoint_path << "\n";
        } else if (eval->parsed()) {
            const knock::MetricsReport rep = knock::cli::cmd_eval(eval_opt);
            std::cout << knock::render_metrics_table("evaluation", rep);
        } else if (compare->parsed()) {
            if (compare_opt.report_b_path.empty() && compare_opt.ml_reference.empty())
                throw knock::ArgumentError("compare: need --report-b or --ml");
            const auto j = knock::cli::cmd_compare(compare_opt);
            std::cout << "p-value " << j["p_value"].get<double>() << ": "
                      << j["verdict"].get<std::string>() << "\n";
        } else if (kfold->parsed()) {
            const auto j = knock::cli::cmd_kfold(kfold_opt);
            std::cout << "k-fold mean accuracy " << j["mean_accuracy"].get<double>()
                      << " %, best fold " << j["best_fold"].get<std::size_t>() << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
