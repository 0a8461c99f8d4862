#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mitoscan::cli {

// Shared run options; every subcommand exposes the subset it consumes, all
// overridable from a flat key=value config file (flags win).
struct Options {
    std::string dataset_root;
    std::vector<std::string> hpf_ids;  // empty = every stack under the root
    int band = 8;
    int plane = 6;
    int keep_planes = 6;
    int min_area = 200;
    int max_area = 5405;
    int open_radius = 1;
    double tolerance_um = 5.0;
    double microns_per_pixel = 0.430;
    std::string classifier = "bayes";
    std::string feature_mode = "all";
    uint64_t seed = 0;
    int jobs = 1;
    int bins = 10;
    int backtrack = 5;
    int min_node_size = 15;
    bool undersample = false;
    int gray_levels = 16;
    int window_margin = 5;
    int histogram_bins = 0;  // 0 = per bit depth
    int k_folds = 5;
    bool use_selection = true;
    long detection_fn = -1;  // -1 = take from the features meta sidecar

    // Stage-specific paths.
    std::string spec_file;
    std::string out_path;
    std::string out_dir;
    std::string histogram_path;
    std::string candidates_dir;
    std::string features_path;
    std::string subset_path;
    std::string model_path;
    std::string predictions_path;
    std::string outcomes_path;
    std::string hpf_id = "synth";
    bool sweep = false;
};

int cmd_synth(const Options& opt);
int cmd_focus(const Options& opt);
int cmd_detect(const Options& opt);
int cmd_features(const Options& opt);
int cmd_select(const Options& opt);
int cmd_train(const Options& opt);
int cmd_eval(const Options& opt);
int cmd_cv(const Options& opt);

}  // namespace mitoscan::cli
