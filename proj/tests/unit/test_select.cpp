#include <doctest.h>

#include <algorithm>
#include <set>

#include "mitoscan/errors.hpp"
#include "mitoscan/rng.hpp"
#include "mitoscan/select.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace mitoscan;

namespace {

FeatureMatrix single_column(const std::vector<double>& values) {
    FeatureMatrix m;
    m.feature_names = {"f0"};
    for (size_t i = 0; i < values.size(); ++i) {
        m.rows.push_back({values[i]});
        m.labels.push_back(static_cast<int>(i % 2));
        m.ids.push_back("i" + std::to_string(i));
    }
    return m;
}

std::vector<std::vector<int>> codes_of(const DiscretizedMatrix& d) {
    std::vector<std::vector<int>> out(d.n_instances, std::vector<int>(d.n_features));
    for (int i = 0; i < d.n_instances; ++i)
        for (int f = 0; f < d.n_features; ++f) out[i][f] = d.code(i, f);
    return out;
}

}  // namespace

TEST_CASE("equal-frequency binning splits 1..100 into tens") {
    std::vector<double> values(100);
    for (int i = 0; i < 100; ++i) values[i] = i + 1;
    DiscretizedMatrix d = discretize(single_column(values), 10);
    std::vector<int> per_bin(10, 0);
    for (int i = 0; i < 100; ++i) {
        CHECK(d.code(i, 0) == i / 10);  // rows arrive sorted here
        per_bin[d.code(i, 0)]++;
    }
    for (int c : per_bin) CHECK(c == 10);
}

TEST_CASE("constant columns collapse to a single bin") {
    DiscretizedMatrix d = discretize(single_column(std::vector<double>(50, 3.25)), 10);
    for (int i = 0; i < 50; ++i) CHECK(d.code(i, 0) == 0);
}

TEST_CASE("ties never split across bins") {
    std::vector<double> values(100, 5.0);
    for (int i = 90; i < 100; ++i) values[i] = 7.0;
    DiscretizedMatrix d = discretize(single_column(values), 10);
    std::set<int> codes_5, codes_7;
    for (int i = 0; i < 100; ++i) (values[i] == 5.0 ? codes_5 : codes_7).insert(d.code(i, 0));
    CHECK(codes_5 == std::set<int>{0});
    CHECK(codes_7 == std::set<int>{1});
}

TEST_CASE("bin edges fit on training data apply to held-out values") {
    std::vector<double> values(100);
    for (int i = 0; i < 100; ++i) values[i] = i + 1;
    FeatureMatrix train = single_column(values);
    DiscretizationModel model = fit_discretization(train, 10);
    CHECK(model.code(0, -50.0) == 0);    // below the range clamps to bin 0
    CHECK(model.code(0, 1e9) == 9);      // above the range clamps to the last bin
    CHECK(model.code(0, 55.2) == 5);     // interior value falls in its decile
}

TEST_CASE("inconsistency rate: hand cases") {
    FeatureMatrix m;
    m.feature_names = {"f0", "f1"};
    SUBCASE("all distinct tuples give rate 0") {
        for (int i = 0; i < 10; ++i) {
            m.rows.push_back({static_cast<double>(i), static_cast<double>(10 - i)});
            m.labels.push_back(i % 2);
            m.ids.push_back("i" + std::to_string(i));
        }
        DiscretizedMatrix d = discretize(m, 10);
        CHECK(inconsistency_rate(d, {0, 1}) == 0.0);
    }
    SUBCASE("two identical instances with different labels give 0.5") {
        DiscretizedMatrix d;
        d.n_instances = 2;
        d.n_features = 1;
        d.bin_count = 2;
        d.codes = {1, 1};
        d.labels = {0, 1};
        CHECK(inconsistency_rate(d, {0}) == 0.5);
    }
}

TEST_CASE("inconsistency rate equals the grouping oracle exactly") {
    SplitMix64 rng(21);
    for (int trial = 0; trial < 30; ++trial) {
        DiscretizedMatrix d;
        d.n_instances = 50;
        d.n_features = 5;
        d.bin_count = 4;
        for (int i = 0; i < 50 * 5; ++i) d.codes.push_back(static_cast<uint8_t>(rng.next() % 4));
        for (int i = 0; i < 50; ++i) d.labels.push_back(static_cast<int>(rng.next() % 3));

        std::vector<int> subset;
        for (int f = 0; f < 5; ++f)
            if (rng.next() % 2) subset.push_back(f);
        if (subset.empty()) subset.push_back(0);

        CHECK(inconsistency_rate(d, subset) == oracle::inconsistency(codes_of(d), d.labels, subset));
    }
}

TEST_CASE("inconsistency rate is monotone under subset inclusion") {
    SplitMix64 rng(22);
    DiscretizedMatrix d;
    d.n_instances = 120;
    d.n_features = 8;
    d.bin_count = 3;
    for (int i = 0; i < 120 * 8; ++i) d.codes.push_back(static_cast<uint8_t>(rng.next() % 3));
    for (int i = 0; i < 120; ++i) d.labels.push_back(static_cast<int>(rng.next() % 2));

    for (int trial = 0; trial < 200; ++trial) {
        std::vector<int> small, large;
        for (int f = 0; f < 8; ++f) {
            const int r = static_cast<int>(rng.next() % 3);
            if (r == 2) {
                small.push_back(f);
                large.push_back(f);
            } else if (r == 1) {
                large.push_back(f);
            }
        }
        if (small.empty() || large.empty()) continue;
        CHECK(inconsistency_rate(d, small) >= inconsistency_rate(d, large));
    }
}

TEST_CASE("a perfectly predictive single feature is selected alone") {
    SplitMix64 rng(33);
    FeatureMatrix m;
    m.feature_names = {"f0", "f1", "f2", "f3", "f4"};
    for (int i = 0; i < 60; ++i) {
        const int label = static_cast<int>(rng.next() % 2);
        std::vector<double> row(5);
        for (int f = 0; f < 5; ++f) row[f] = rng.uniform(0, 1);
        row[3] = label * 10.0;  // two tight values: binning recovers the class exactly
        m.rows.push_back(std::move(row));
        m.labels.push_back(label);
        m.ids.push_back("i" + std::to_string(i));
    }
    FeatureSubset s = select_features(m, 10, 5);
    CHECK(s.indices == std::vector<int>{3});
    CHECK(s.rate == 0.0);
}

TEST_CASE("planted-relevance fixture: the parity pair is recovered") {
    FeatureMatrix m = fixtures::parity_matrix(2024);
    FeatureSubset s = select_features(m, 10, 5);
    CHECK(s.rate <= s.full_set_rate);
    REQUIRE(s.indices.size() >= 2);
    CHECK(std::binary_search(s.indices.begin(), s.indices.end(), 2));
    CHECK(std::binary_search(s.indices.begin(), s.indices.end(), 7));
    CHECK(s.indices == std::vector<int>{2, 7});  // nothing smaller reaches rate 0
}

TEST_CASE("selection never returns a subset less consistent than the full set") {
    for (uint64_t seed : {1, 2, 3, 4, 5}) {
        FeatureMatrix m = fixtures::random_matrix(80, 10, seed);
        FeatureSubset s = select_features(m, 10, 5);
        CHECK(s.rate <= s.full_set_rate);
        CHECK(std::is_sorted(s.indices.begin(), s.indices.end()));
        CHECK(std::adjacent_find(s.indices.begin(), s.indices.end()) == s.indices.end());
        // Reported rate must be reproducible from the matrix.
        DiscretizedMatrix d = discretize(m, 10);
        CHECK(s.rate == inconsistency_rate(d, s.indices));
    }
}

TEST_CASE("selection is deterministic including its search log") {
    FeatureMatrix m = fixtures::random_matrix(60, 8, 77);
    FeatureSubset a = select_features(m, 10, 5);
    FeatureSubset b = select_features(m, 10, 5);
    CHECK(a.indices == b.indices);
    CHECK(a.rate == b.rate);
    CHECK(a.search_log == b.search_log);
}

TEST_CASE("subset JSON round-trips") {
    TempDir dir("subset");
    FeatureMatrix m = fixtures::parity_matrix(5);
    FeatureSubset s = select_features(m, 10, 5);
    save_subset(s, m.feature_names, dir.path / "subset.json");
    FeatureSubset back = load_subset(dir.path / "subset.json");
    CHECK(back.indices == s.indices);
    CHECK(back.rate == s.rate);
    CHECK(back.search_log == s.search_log);
}

TEST_CASE("empty matrices are rejected") {
    FeatureMatrix m;
    m.feature_names = {"f0"};
    CHECK_THROWS_AS(discretize(m, 10), EmptyMatrixError);
}
