#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mitoscan/features.hpp"

namespace mitoscan {

enum class ClassifierKind { Bayes, Tree, LinearSvm };

ClassifierKind parse_classifier_kind(const std::string& s);
std::string classifier_kind_name(ClassifierKind kind);

struct TrainConfig {
    int min_node_size = 15;   // tree: do not split smaller nodes
    double svm_cost = 1.0;    // C
    double svm_eps = 0.01;    // relative duality-gap tolerance
    double svm_bias = 1.0;    // value of the appended bias feature
    int svm_max_epochs = 1000;
    double variance_floor = 1e-9;  // bayes
    bool undersample = false;      // drop majority-class rows to balance
    uint64_t undersample_seed = 0;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0;
    int left = -1;
    int right = -1;
    double n_mitosis = 0;  // leaf class distribution
    double n_total = 0;
};

/// Immutable trained model. `subset` holds the indices (into the training
/// matrix's columns) the model consumes; `feature_names` pins the schema for
/// mismatch detection at prediction time.
struct Model {
    int version = 1;
    ClassifierKind kind = ClassifierKind::Bayes;
    std::vector<int> subset;
    std::vector<std::string> feature_names;  // names of the subset columns
    TrainConfig training_config;

    // bayes: per class (0 = non-mitosis, 1 = mitosis), per subset feature
    std::array<double, 2> log_prior = {0, 0};
    std::vector<std::array<double, 2>> gauss_mean;
    std::vector<std::array<double, 2>> gauss_var;

    // tree
    std::vector<TreeNode> nodes;

    // linear svm (weights are over standardized subset features + bias term)
    std::vector<double> svm_weights;
    std::vector<double> std_mean;
    std::vector<double> std_scale;
};

struct Prediction {
    std::string candidate_id;
    int label = 0;     // 1 mitosis, 0 non-mitosis
    double score = 0;  // class-1 posterior, leaf proportion, or signed margin
};

/// Trains on rows with labels 0/1 restricted to `subset` columns. Throws
/// SingleClassDataError unless both classes are present and
/// NonFiniteFeatureError on non-finite selected values.
Model train(ClassifierKind kind, const FeatureMatrix& data, const std::vector<int>& subset,
            const TrainConfig& cfg = {});

/// Pure function of (model, row). The label is mitosis when the score exceeds
/// the kind's threshold (0.5 probabilistic, 0 margin); exact ties resolve to
/// non-mitosis.
Prediction predict(const Model& model, std::span<const double> row,
                   const std::string& candidate_id = {});

std::vector<Prediction> predict_all(const Model& model, const FeatureMatrix& data);

void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace mitoscan
