// Constructed datasets shared between unit and acceptance tests.
#pragma once

#include <vector>

#include "mitoscan/features.hpp"
#include "mitoscan/rng.hpp"

namespace fixtures {

// 200 x 20 matrix where the class is the parity of the planted codes of
// features 2 and 7. Those two columns carry ten tight clusters of exactly 20
// values each, so equal-frequency binning recovers the codes; the remaining
// columns are binary noise that no small subset can shatter.
inline mitoscan::FeatureMatrix parity_matrix(uint64_t seed) {
    using mitoscan::SplitMix64;
    constexpr int kN = 200, kF = 20, kCodes = 10;
    const std::vector<int> informative = {2, 7};

    mitoscan::FeatureMatrix m;
    for (int f = 0; f < kF; ++f) m.feature_names.push_back("f" + std::to_string(f));
    m.rows.assign(kN, std::vector<double>(kF, 0.0));

    std::vector<std::vector<int>> codes(informative.size(), std::vector<int>(kN));
    for (size_t c = 0; c < informative.size(); ++c) {
        SplitMix64 rng(mitoscan::derive_seed(seed, 10 + c));
        std::vector<int>& col = codes[c];
        for (int i = 0; i < kN; ++i) col[i] = i / (kN / kCodes);  // 20 of each
        for (int i = kN - 1; i > 0; --i) std::swap(col[i], col[rng.next() % (i + 1)]);
        for (int i = 0; i < kN; ++i)
            m.rows[i][informative[c]] = col[i] + 0.001 * rng.uniform();
    }

    SplitMix64 noise(mitoscan::derive_seed(seed, 99));
    for (int i = 0; i < kN; ++i) {
        for (int f = 0; f < kF; ++f) {
            if (f == 2 || f == 7) continue;
            m.rows[i][f] = static_cast<double>(noise.next() % 2);
        }
        m.ids.push_back("inst" + std::to_string(i));
        m.labels.push_back((codes[0][i] + codes[1][i]) % 2);
    }
    return m;
}

// 2-D XOR: four point clusters of 40 at the unit-square corners. The corners
// are exact so the only candidate thresholds are the two midlines, which is
// what makes the depth-2 representation reachable.
inline mitoscan::FeatureMatrix xor_matrix(uint64_t /*seed*/) {
    mitoscan::FeatureMatrix m;
    m.feature_names = {"x", "y"};
    int id = 0;
    for (int cx = 0; cx < 2; ++cx)
        for (int cy = 0; cy < 2; ++cy)
            for (int i = 0; i < 40; ++i) {
                m.rows.push_back({static_cast<double>(cx), static_cast<double>(cy)});
                m.labels.push_back(cx ^ cy);
                m.ids.push_back("p" + std::to_string(id++));
            }
    return m;
}

// Random matrix with the given shape; labels drawn uniformly.
inline mitoscan::FeatureMatrix random_matrix(int n, int f, uint64_t seed) {
    mitoscan::SplitMix64 rng(seed);
    mitoscan::FeatureMatrix m;
    for (int j = 0; j < f; ++j) m.feature_names.push_back("f" + std::to_string(j));
    for (int i = 0; i < n; ++i) {
        std::vector<double> row(f);
        for (int j = 0; j < f; ++j) row[j] = rng.uniform(-10, 10);
        m.rows.push_back(std::move(row));
        m.labels.push_back(static_cast<int>(rng.next() % 2));
        m.ids.push_back("r" + std::to_string(i));
    }
    return m;
}

}  // namespace fixtures
