#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mitoscan/classify.hpp"
#include "mitoscan/detect.hpp"
#include "mitoscan/features.hpp"
#include "mitoscan/select.hpp"
#include "mitoscan/stack.hpp"

namespace mitoscan {

struct MatchResult {
    std::vector<std::pair<std::string, std::string>> tp_pairs;  // (candidateId, gtId)
    std::vector<std::string> fp_ids;
    std::vector<std::string> fn_ids;
    double tolerance_microns = 5.0;
};

/// Greedy nearest-pair matching: repeatedly pair the globally closest
/// unmatched candidate/ground-truth centroids within
/// tolerance_microns / microns_per_pixel pixels. Leftover candidates are FP,
/// leftover ground truth FN.
MatchResult match(const std::vector<CandidateRegion>& predicted, const GroundTruth& gt,
                  double tolerance_microns = 5.0,
                  double microns_per_pixel = kDefaultMicronsPerPixel);

struct Counts {
    long tp = 0;
    long fp = 0;
    long fn = 0;
    double tpr = 0;
    double ppv = 0;
    double f_measure = 0;
};

/// TPR = tp/(tp+fn), PPV = tp/(tp+fp), F = harmonic mean; each 0 when its
/// denominator is 0.
Counts metrics(long tp, long fp, long fn);

struct EvaluationReport {
    Counts aggregate;
    std::vector<Counts> per_fold;
    long detection_stage_fn = 0;  // ground truth never reached by any candidate
};

struct CrossValidationConfig {
    int k = 5;
    uint64_t seed = 0;
    ClassifierKind classifier = ClassifierKind::Bayes;
    TrainConfig train;
    bool use_selection = true;
    int bin_count = 10;
    int backtrack = 5;
    FeatureMode feature_mode = FeatureMode::All;
    long detection_fn = 0;  // added to the aggregate FN (end-to-end accounting)
};

/// Per-class fold assignment: within each class, instances are ordered by id,
/// shuffled with the seed, and dealt round-robin so fold sizes differ by at
/// most one. Permuting the input rows does not change the assignment.
std::vector<int> stratified_folds(const std::vector<std::string>& ids,
                                  const std::vector<int>& labels, int k, uint64_t seed);

/// Stratified k-fold over the pipeline tail: per fold, discretization bins,
/// the feature subset, standardization, and the model are fit on the training
/// folds only and applied to the held-out fold. TP/FP/FN aggregate over
/// folds. Deterministic given the seed.
EvaluationReport cross_validate(const FeatureMatrix& features,
                                const CrossValidationConfig& cfg);

}  // namespace mitoscan
