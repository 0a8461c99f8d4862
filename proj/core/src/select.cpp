#include "mitoscan/select.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "mitoscan/errors.hpp"
#include "mitoscan/util.hpp"

namespace mitoscan {

using nlohmann::json;

int DiscretizationModel::code(int feature, double value) const {
    const auto& e = edges[feature];
    return static_cast<int>(std::lower_bound(e.begin(), e.end(), value) - e.begin());
}

DiscretizationModel fit_discretization(const FeatureMatrix& m, int bin_count) {
    const int n = m.n_instances();
    if (n == 0) throw EmptyMatrixError("cannot discretize an empty matrix");
    if (n < bin_count) throw Error("need at least bin_count instances");

    DiscretizationModel model;
    model.bin_count = bin_count;
    model.edges.resize(m.n_features());

    std::vector<double> sorted(n);
    for (int f = 0; f < m.n_features(); ++f) {
        for (int i = 0; i < n; ++i) sorted[i] = m.rows[i][f];
        std::sort(sorted.begin(), sorted.end());

        // Boundaries between runs of equal values: cumulative counts at which
        // a cut is possible without splitting ties.
        std::vector<int> boundaries;
        for (int i = 1; i < n; ++i)
            if (sorted[i] != sorted[i - 1]) boundaries.push_back(i);
        if (boundaries.empty()) continue;  // constant feature -> single bin

        // Snap each ideal equal-frequency cut to the nearest boundary.
        std::set<int> cuts;
        for (int k = 1; k < bin_count; ++k) {
            const double ideal = static_cast<double>(k) * n / bin_count;
            const auto it = std::lower_bound(boundaries.begin(), boundaries.end(), ideal);
            int best = it == boundaries.end() ? boundaries.back() : *it;
            if (it != boundaries.begin()) {
                const int prev = *std::prev(it);
                if (std::abs(ideal - prev) <= std::abs(best - ideal)) best = prev;
            }
            cuts.insert(best);
        }
        for (int c : cuts) model.edges[f].push_back((sorted[c - 1] + sorted[c]) / 2.0);
    }
    return model;
}

DiscretizedMatrix apply_discretization(const DiscretizationModel& model, const FeatureMatrix& m) {
    DiscretizedMatrix d;
    d.n_instances = m.n_instances();
    d.n_features = m.n_features();
    d.bin_count = model.bin_count;
    d.labels = m.labels;
    d.codes.resize(static_cast<size_t>(d.n_instances) * d.n_features);
    for (int i = 0; i < d.n_instances; ++i)
        for (int f = 0; f < d.n_features; ++f)
            d.codes[static_cast<size_t>(i) * d.n_features + f] =
                static_cast<uint8_t>(model.code(f, m.rows[i][f]));
    return d;
}

DiscretizedMatrix discretize(const FeatureMatrix& m, int bin_count) {
    return apply_discretization(fit_discretization(m, bin_count), m);
}

double inconsistency_rate(const DiscretizedMatrix& d, const std::vector<int>& subset) {
    // Group by the code tuple restricted to the subset; each group contributes
    // its size minus the majority class count.
    std::unordered_map<std::string, std::unordered_map<int, long>> groups;
    groups.reserve(d.n_instances * 2);
    std::string key(subset.size(), '\0');
    for (int i = 0; i < d.n_instances; ++i) {
        for (size_t s = 0; s < subset.size(); ++s)
            key[s] = static_cast<char>(d.code(i, subset[s]));
        groups[key][d.labels[i]]++;
    }
    long inconsistent = 0;
    for (const auto& [_, counts] : groups) {
        long total = 0, majority = 0;
        for (const auto& [label, c] : counts) {
            total += c;
            majority = std::max(majority, c);
        }
        inconsistent += total - majority;
    }
    return static_cast<double>(inconsistent) / d.n_instances;
}

namespace {

struct SearchNode {
    double rate;
    std::vector<int> indices;

    bool operator<(const SearchNode& other) const {
        if (rate != other.rate) return rate < other.rate;
        if (indices.size() != other.indices.size()) return indices.size() < other.indices.size();
        return indices < other.indices;
    }
};

}  // namespace

FeatureSubset select_features(const DiscretizedMatrix& d, int backtrack) {
    if (d.n_instances == 0) throw EmptyMatrixError("cannot select features on an empty matrix");
    std::set<int> classes(d.labels.begin(), d.labels.end());
    if (classes.size() < 2) throw SingleClassDataError("feature selection needs two classes");

    std::vector<int> full(d.n_features);
    for (int f = 0; f < d.n_features; ++f) full[f] = f;
    const double full_rate = inconsistency_rate(d, full);

    FeatureSubset result;
    result.full_set_rate = full_rate;

    std::map<std::vector<int>, double> visited;
    std::set<SearchNode> open;
    std::set<std::vector<int>> expanded;

    const double empty_rate = inconsistency_rate(d, {});
    visited[{}] = empty_rate;
    open.insert({empty_rate, {}});
    visited[full] = full_rate;

    double best_rate = empty_rate;
    int stale = 0;
    while (!open.empty() && stale < backtrack) {
        SearchNode node = *open.begin();
        open.erase(open.begin());
        if (!expanded.insert(node.indices).second) continue;
        result.search_log.emplace_back(static_cast<int>(node.indices.size()), node.rate);

        bool improved = false;
        for (int f = 0; f < d.n_features; ++f) {
            if (std::binary_search(node.indices.begin(), node.indices.end(), f)) continue;
            std::vector<int> child = node.indices;
            child.insert(std::lower_bound(child.begin(), child.end(), f), f);
            if (visited.count(child)) continue;
            const double rate = inconsistency_rate(d, child);
            visited[child] = rate;
            open.insert({rate, std::move(child)});
            if (rate < best_rate) {
                best_rate = rate;
                improved = true;
            }
        }
        stale = improved ? 0 : stale + 1;
    }

    // Smallest evaluated subset no less consistent than the full set; the full
    // set itself always qualifies.
    bool have = false;
    for (const auto& [indices, rate] : visited) {
        if (rate > full_rate) continue;
        const bool better =
            !have || indices.size() < result.indices.size() ||
            (indices.size() == result.indices.size() &&
             (rate < result.rate || (rate == result.rate && indices < result.indices)));
        if (better) {
            result.indices = indices;
            result.rate = rate;
            have = true;
        }
    }
    if (!have) throw NoValidSubsetError("unreachable: the full set always qualifies");
    return result;
}

FeatureSubset select_features(const FeatureMatrix& m, int bin_count, int backtrack) {
    return select_features(discretize(m, bin_count), backtrack);
}

void save_subset(const FeatureSubset& subset, const std::vector<std::string>& names,
                 const std::filesystem::path& path) {
    json j;
    j["indices"] = subset.indices;
    j["inconsistencyRate"] = subset.rate;
    j["fullSetRate"] = subset.full_set_rate;
    json jnames = json::array();
    for (int i : subset.indices)
        jnames.push_back(i < static_cast<int>(names.size()) ? names[i] : std::to_string(i));
    j["names"] = jnames;
    json log = json::array();
    for (auto [size, rate] : subset.search_log) log.push_back({{"size", size}, {"rate", rate}});
    j["searchLog"] = log;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw UnreadableFileError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

FeatureSubset load_subset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UnreadableFileError("cannot open " + path.string());
    json j = json::parse(in);
    FeatureSubset s;
    s.indices = j.at("indices").get<std::vector<int>>();
    s.rate = j.at("inconsistencyRate").get<double>();
    s.full_set_rate = j.value("fullSetRate", 0.0);
    if (j.contains("searchLog"))
        for (const auto& e : j["searchLog"])
            s.search_log.emplace_back(e.at("size").get<int>(), e.at("rate").get<double>());
    return s;
}

}  // namespace mitoscan
