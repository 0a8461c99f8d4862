#include <functional>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "mitoscan/errors.hpp"

using mitoscan::cli::Options;

namespace {

// Shared run-configuration flags. Each mirrors a key in the flat key=value
// config file given with --config; command-line flags win.
void add_common(CLI::App* cmd, Options& opt) {
    cmd->set_config("--config", "", "Flat key=value run configuration file");
    cmd->add_option("--dataset", opt.dataset_root, "Dataset root directory");
    cmd->add_option("--hpf", opt.hpf_ids, "HPF ids (default: every stack under the root)");
    cmd->add_option("--band", opt.band, "Spectral band index");
    cmd->add_option("--plane", opt.plane, "Focus plane index");
    cmd->add_option("--keep-planes", opt.keep_planes, "Planes kept by focus ranking");
    cmd->add_option("--min-area", opt.min_area, "Minimum candidate area in pixels");
    cmd->add_option("--max-area", opt.max_area, "Maximum candidate area in pixels");
    cmd->add_option("--open-radius", opt.open_radius, "Morphological opening radius");
    cmd->add_option("--tolerance-um", opt.tolerance_um, "Centroid matching tolerance in microns");
    cmd->add_option("--microns-per-pixel", opt.microns_per_pixel, "Physical pixel scale");
    cmd->add_option("--classifier", opt.classifier, "bayes | tree | linear-svm");
    cmd->add_option("--feature-mode", opt.feature_mode,
                    "all | selected | whiteBandOnly | multispectralOnly | intensityOnly | textureOnly");
    cmd->add_option("--seed", opt.seed, "Deterministic seed");
    cmd->add_option("--jobs", opt.jobs, "Worker threads (output is order-canonical)");
    cmd->add_option("--bins", opt.bins, "Discretization bins");
    cmd->add_option("--backtrack", opt.backtrack, "Search backtracking budget");
    cmd->add_option("--min-node-size", opt.min_node_size, "Tree: smallest splittable node");
    cmd->add_flag("--undersample", opt.undersample, "Balance classes by undersampling");
    cmd->add_option("--gray-levels", opt.gray_levels, "Texture quantization levels");
    cmd->add_option("--window-margin", opt.window_margin, "Texture window margin in pixels");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multispectral mitosis detection pipeline"};
    app.require_subcommand(1);

    Options opt;
    std::function<int()> action;

    auto* synth = app.add_subcommand("synth", "Generate a synthetic stack fixture");
    add_common(synth, opt);
    synth->add_option("--spec", opt.spec_file, "Generator spec file")->required();
    synth->add_option("--out", opt.out_dir, "Output dataset root")->required();
    synth->add_option("--hpf-id", opt.hpf_id, "Name of the generated stack");
    synth->callback([&] { action = [&] { return mitoscan::cli::cmd_synth(opt); }; });

    auto* focus = app.add_subcommand("focus", "Rank focus planes by average gradient");
    add_common(focus, opt);
    focus->add_option("--out", opt.out_path, "Ranking CSV")->required();
    focus->add_option("--histograms", opt.histogram_path, "Masked spectral histogram CSV");
    focus->add_option("--histogram-bins", opt.histogram_bins, "Histogram bins (0 = per depth)");
    focus->callback([&] { action = [&] { return mitoscan::cli::cmd_focus(opt); }; });

    auto* detect = app.add_subcommand("detect", "Detect candidate regions");
    add_common(detect, opt);
    detect->add_option("--out-dir", opt.out_dir, "Candidate output directory")->required();
    detect->add_flag("--sweep", opt.sweep, "Sweep all bands over the kept planes");
    detect->callback([&] { action = [&] { return mitoscan::cli::cmd_detect(opt); }; });

    auto* features = app.add_subcommand("features", "Compute the 235-slot feature vectors");
    add_common(features, opt);
    features->add_option("--candidates-dir", opt.candidates_dir, "detect output directory")
        ->required();
    features->add_option("--out", opt.out_path, "Feature matrix CSV")->required();
    features->callback([&] { action = [&] { return mitoscan::cli::cmd_features(opt); }; });

    auto* select = app.add_subcommand("select", "Consistency-based feature selection");
    add_common(select, opt);
    select->add_option("--features", opt.features_path, "Feature matrix CSV")->required();
    select->add_option("--out", opt.out_path, "Subset JSON")->required();
    select->callback([&] { action = [&] { return mitoscan::cli::cmd_select(opt); }; });

    auto* train = app.add_subcommand("train", "Train a classifier");
    add_common(train, opt);
    train->add_option("--features", opt.features_path, "Feature matrix CSV")->required();
    train->add_option("--subset", opt.subset_path, "Subset JSON from select");
    train->add_option("--out", opt.out_path, "Model JSON")->required();
    train->callback([&] { action = [&] { return mitoscan::cli::cmd_train(opt); }; });

    auto* eval = app.add_subcommand("eval", "Evaluate a model");
    add_common(eval, opt);
    eval->add_option("--features", opt.features_path, "Feature matrix CSV")->required();
    eval->add_option("--model", opt.model_path, "Model JSON")->required();
    eval->add_option("--out", opt.out_path, "Report JSON")->required();
    eval->add_option("--predictions", opt.predictions_path, "Score-sorted predictions CSV");
    eval->add_option("--outcomes", opt.outcomes_path, "Per-candidate TP/FP/FN CSV");
    eval->add_option("--candidates-dir", opt.candidates_dir,
                     "detect output directory (enables end-to-end matching)");
    eval->callback([&] { action = [&] { return mitoscan::cli::cmd_eval(opt); }; });

    auto* cv = app.add_subcommand("cv", "Stratified k-fold cross-validation");
    add_common(cv, opt);
    cv->add_option("--features", opt.features_path, "Feature matrix CSV")->required();
    cv->add_option("--out", opt.out_path, "Report JSON")->required();
    cv->add_option("--k", opt.k_folds, "Fold count");
    cv->add_option("--detection-fn", opt.detection_fn,
                   "Detection-stage misses to add (-1 = read the features meta sidecar)");
    cv->add_flag("!--no-selection", opt.use_selection, "Disable per-fold feature selection");
    cv->callback([&] { action = [&] { return mitoscan::cli::cmd_cv(opt); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;  // usage errors exit 1, --help exits 0
    }

    try {
        return action();
    } catch (const mitoscan::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
