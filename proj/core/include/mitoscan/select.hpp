#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mitoscan/features.hpp"

namespace mitoscan {

/// Per-feature equal-frequency bin edges, reusable on held-out data.
struct DiscretizationModel {
    int bin_count = 0;
    std::vector<std::vector<double>> edges;  // ascending cut values per feature

    int code(int feature, double value) const;
};

struct DiscretizedMatrix {
    int n_instances = 0;
    int n_features = 0;
    int bin_count = 0;
    std::vector<uint8_t> codes;  // row-major n_instances x n_features
    std::vector<int> labels;

    uint8_t code(int instance, int feature) const {
        return codes[static_cast<size_t>(instance) * n_features + feature];
    }
};

/// Equal-frequency binning with tie preservation: cut positions snap to the
/// nearest boundary between distinct values, so equal values never split
/// across bins. Constant features collapse to a single bin.
DiscretizationModel fit_discretization(const FeatureMatrix& m, int bin_count = 10);

DiscretizedMatrix apply_discretization(const DiscretizationModel& model,
                                       const FeatureMatrix& m);

DiscretizedMatrix discretize(const FeatureMatrix& m, int bin_count = 10);

/// Groups instances by their code tuple restricted to `subset`; each group
/// contributes (group size - majority class count). Returns the total over
/// groups divided by the instance count.
double inconsistency_rate(const DiscretizedMatrix& d, const std::vector<int>& subset);

struct FeatureSubset {
    std::vector<int> indices;  // unique, sorted
    double rate = 0;           // inconsistency rate of `indices`
    double full_set_rate = 0;
    std::vector<std::pair<int, double>> search_log;  // (size, rate) of expanded nodes
};

/// Best-first search from the empty set, expanding by one unused feature at a
/// time, ordered by (rate, size, lexicographic indices). The search stops
/// after `backtrack` consecutive expansions that fail to improve the best
/// rate, then returns the smallest evaluated subset whose rate does not
/// exceed the full set's. Deterministic for a given matrix.
FeatureSubset select_features(const DiscretizedMatrix& d, int backtrack = 5);

FeatureSubset select_features(const FeatureMatrix& m, int bin_count = 10, int backtrack = 5);

/// Subset JSON: schema indices, names, achieved rate, search log.
void save_subset(const FeatureSubset& subset, const std::vector<std::string>& names,
                 const std::filesystem::path& path);
FeatureSubset load_subset(const std::filesystem::path& path);

}  // namespace mitoscan
