#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "mitoscan/errors.hpp"
#include "mitoscan/evaluate.hpp"
#include "mitoscan/rng.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace mitoscan;

namespace {

CandidateRegion candidate_at(double cx, double cy, int ordinal) {
    CandidateRegion c;
    c.id = "h:8:6:" + std::to_string(ordinal);
    c.cx = cx;
    c.cy = cy;
    c.area = 300;
    c.pixels = {{static_cast<int>(cx), static_cast<int>(cy)}};
    return c;
}

GroundTruth gt_at(const std::vector<std::pair<double, double>>& centroids) {
    GroundTruth gt;
    gt.hpf_id = "h";
    for (size_t i = 0; i < centroids.size(); ++i) {
        MitosisAnnotation m;
        m.id = "m" + std::to_string(i);
        m.cx = centroids[i].first;
        m.cy = centroids[i].second;
        gt.mitoses.push_back(m);
    }
    return gt;
}

}  // namespace

TEST_CASE("matching: exact hit, out-of-tolerance miss, greedy nearest pair") {
    SUBCASE("candidate on the centroid") {
        MatchResult r = match({candidate_at(50, 50, 0)}, gt_at({{50, 50}}), 5.0, 1.0);
        CHECK(r.tp_pairs.size() == 1);
        CHECK(r.fp_ids.empty());
        CHECK(r.fn_ids.empty());
    }
    SUBCASE("10 um away under a 5 um tolerance") {
        MatchResult r = match({candidate_at(60, 50, 0)}, gt_at({{50, 50}}), 5.0, 1.0);
        CHECK(r.tp_pairs.empty());
        CHECK(r.fp_ids.size() == 1);
        CHECK(r.fn_ids.size() == 1);
    }
    SUBCASE("the closer of two candidates wins") {
        MatchResult r = match({candidate_at(52, 50, 0), candidate_at(51, 50, 1)},
                              gt_at({{50, 50}}), 5.0, 1.0);
        REQUIRE(r.tp_pairs.size() == 1);
        CHECK(r.tp_pairs[0].first == "h:8:6:1");  // 1 um beats 2 um
        CHECK(r.fp_ids == std::vector<std::string>{"h:8:6:0"});
    }
}

TEST_CASE("matching bookkeeping balances on random scenes") {
    SplitMix64 rng(41);
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<CandidateRegion> candidates;
        std::vector<std::pair<double, double>> gts;
        const int nc = 1 + static_cast<int>(rng.next() % 7);
        const int ng = 1 + static_cast<int>(rng.next() % 6);
        for (int i = 0; i < nc; ++i)
            candidates.push_back(candidate_at(rng.uniform(0, 40), rng.uniform(0, 40), i));
        for (int i = 0; i < ng; ++i) gts.push_back({rng.uniform(0, 40), rng.uniform(0, 40)});
        GroundTruth gt = gt_at(gts);

        MatchResult r = match(candidates, gt, 8.0, 1.0);
        CHECK(r.tp_pairs.size() + r.fn_ids.size() == gt.mitoses.size());
        CHECK(r.tp_pairs.size() + r.fp_ids.size() == candidates.size());
        CHECK(r.tp_pairs.size() <= std::min(candidates.size(), gt.mitoses.size()));

        std::set<std::string> gt_seen, cand_seen;
        for (const auto& [cid, gid] : r.tp_pairs) {
            CHECK(cand_seen.insert(cid).second);
            CHECK(gt_seen.insert(gid).second);
        }

        // Greedy maximal matching is at least half of the optimum.
        std::vector<std::vector<int>> adjacency(candidates.size());
        for (size_t c = 0; c < candidates.size(); ++c)
            for (size_t g = 0; g < gt.mitoses.size(); ++g) {
                const double dx = candidates[c].cx - gt.mitoses[g].cx;
                const double dy = candidates[c].cy - gt.mitoses[g].cy;
                if (std::sqrt(dx * dx + dy * dy) <= 8.0) adjacency[c].push_back(static_cast<int>(g));
            }
        std::vector<bool> used(gt.mitoses.size(), false);
        const int optimal = oracle::max_matching(adjacency, 0, used);
        CHECK(static_cast<int>(r.tp_pairs.size()) <= optimal);
        CHECK(2 * static_cast<int>(r.tp_pairs.size()) >= optimal);
    }
}

TEST_CASE("metrics reproduce the published contest rows") {
    Counts a = metrics(59, 51, 39);
    CHECK(a.tpr == doctest::Approx(0.602).epsilon(0.001));
    CHECK(a.ppv == doctest::Approx(0.536).epsilon(0.001));
    CHECK(a.f_measure == doctest::Approx(0.567).epsilon(0.001));

    Counts b = metrics(50, 28, 48);
    CHECK(b.tpr == doctest::Approx(0.510).epsilon(0.001));
    CHECK(b.ppv == doctest::Approx(0.641).epsilon(0.001));
    CHECK(b.f_measure == doctest::Approx(0.568).epsilon(0.001));

    Counts z = metrics(0, 0, 10);
    CHECK(z.tpr == 0.0);
    CHECK(z.ppv == 0.0);
    CHECK(z.f_measure == 0.0);
}

TEST_CASE("f-measure is the harmonic mean of tpr and ppv") {
    SplitMix64 rng(43);
    for (int i = 0; i < 100; ++i) {
        const long tp = rng.next() % 50, fp = rng.next() % 50, fn = rng.next() % 50;
        Counts c = metrics(tp, fp, fn);
        CHECK(c.f_measure >= std::min(c.tpr, c.ppv) - 1e-12);
        CHECK(c.f_measure <= std::max(c.tpr, c.ppv) + 1e-12);
        if (c.tpr + c.ppv > 0)
            CHECK(c.f_measure == doctest::Approx(2 * c.tpr * c.ppv / (c.tpr + c.ppv)));
    }
}

namespace {

std::pair<std::vector<std::string>, std::vector<int>> synthetic_population(int positives,
                                                                           int negatives) {
    std::vector<std::string> ids;
    std::vector<int> labels;
    for (int i = 0; i < positives; ++i) {
        ids.push_back("p" + std::to_string(i));
        labels.push_back(1);
    }
    for (int i = 0; i < negatives; ++i) {
        ids.push_back("n" + std::to_string(i));
        labels.push_back(0);
    }
    return {ids, labels};
}

}  // namespace

TEST_CASE("stratified folds: 322 positives over 5 folds give 64 or 65 each") {
    auto [ids, labels] = synthetic_population(322, 4916);
    std::vector<int> fold = stratified_folds(ids, labels, 5, 99);

    std::vector<int> pos_per_fold(5, 0), total_per_fold(5, 0);
    for (size_t i = 0; i < ids.size(); ++i) {
        REQUIRE(fold[i] >= 0);
        REQUIRE(fold[i] < 5);
        total_per_fold[fold[i]]++;
        if (labels[i] == 1) pos_per_fold[fold[i]]++;
    }
    for (int f = 0; f < 5; ++f) {
        CHECK(pos_per_fold[f] >= 64);
        CHECK(pos_per_fold[f] <= 65);
    }
    const auto [lo, hi] = std::minmax_element(total_per_fold.begin(), total_per_fold.end());
    CHECK(*hi - *lo <= 2);  // one per class
}

TEST_CASE("fold assignment ignores row order") {
    auto [ids, labels] = synthetic_population(30, 70);
    std::vector<int> fold = stratified_folds(ids, labels, 4, 7);

    std::vector<size_t> perm(ids.size());
    std::iota(perm.begin(), perm.end(), size_t{0});
    SplitMix64 rng(3);
    for (size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng.next() % (i + 1)]);

    std::vector<std::string> ids2;
    std::vector<int> labels2;
    for (size_t i : perm) {
        ids2.push_back(ids[i]);
        labels2.push_back(labels[i]);
    }
    std::vector<int> fold2 = stratified_folds(ids2, labels2, 4, 7);
    for (size_t i = 0; i < perm.size(); ++i) CHECK(fold2[i] == fold[perm[i]]);
}

TEST_CASE("cross-validation separates an easy two-gaussian problem") {
    SplitMix64 rng(51);
    FeatureMatrix m;
    m.feature_names = {"x", "y"};
    for (int i = 0; i < 120; ++i) {
        const int label = i % 2;
        m.rows.push_back({label * 6.0 + rng.gaussian(), rng.uniform(-1, 1)});
        m.labels.push_back(label);
        m.ids.push_back("i" + std::to_string(i));
    }

    CrossValidationConfig cfg;
    cfg.k = 5;
    cfg.seed = 17;
    cfg.use_selection = false;
    EvaluationReport report = cross_validate(m, cfg);
    CHECK(report.per_fold.size() == 5);
    CHECK(report.aggregate.f_measure > 0.95);
    CHECK(report.aggregate.tp + report.aggregate.fn == 60);

    SUBCASE("deterministic for a fixed seed") {
        EvaluationReport again = cross_validate(m, cfg);
        CHECK(again.aggregate.tp == report.aggregate.tp);
        CHECK(again.aggregate.fp == report.aggregate.fp);
        CHECK(again.aggregate.fn == report.aggregate.fn);
    }
    SUBCASE("row order does not change the aggregate") {
        FeatureMatrix shuffled;
        shuffled.feature_names = m.feature_names;
        std::vector<size_t> perm(m.n_instances());
        std::iota(perm.begin(), perm.end(), size_t{0});
        SplitMix64 prng(9);
        for (size_t i = perm.size() - 1; i > 0; --i)
            std::swap(perm[i], perm[prng.next() % (i + 1)]);
        for (size_t i : perm) {
            shuffled.ids.push_back(m.ids[i]);
            shuffled.labels.push_back(m.labels[i]);
            shuffled.rows.push_back(m.rows[i]);
        }
        EvaluationReport r2 = cross_validate(shuffled, cfg);
        CHECK(r2.aggregate.tp == report.aggregate.tp);
        CHECK(r2.aggregate.fp == report.aggregate.fp);
        CHECK(r2.aggregate.fn == report.aggregate.fn);
    }
    SUBCASE("detection-stage misses add to the aggregate FN") {
        CrossValidationConfig with_miss = cfg;
        with_miss.detection_fn = 7;
        EvaluationReport r3 = cross_validate(m, with_miss);
        CHECK(r3.aggregate.fn == report.aggregate.fn + 7);
        CHECK(r3.detection_stage_fn == 7);
    }
}

TEST_CASE("cross-validation with per-fold selection stays leak-free and deterministic") {
    SplitMix64 rng(77);
    FeatureMatrix m;
    for (int f = 0; f < 8; ++f) m.feature_names.push_back("f" + std::to_string(f));
    for (int i = 0; i < 160; ++i) {
        const int label = static_cast<int>(rng.next() % 2);
        std::vector<double> row(8);
        for (int f = 0; f < 8; ++f) row[f] = rng.uniform(0, 1);
        row[3] = label * 10.0 + rng.uniform(0, 1);  // single informative column
        m.rows.push_back(std::move(row));
        m.labels.push_back(label);
        m.ids.push_back("i" + std::to_string(i));
    }
    CrossValidationConfig cfg;
    cfg.k = 4;
    cfg.seed = 5;
    cfg.use_selection = true;
    cfg.classifier = ClassifierKind::Tree;
    cfg.train.min_node_size = 5;
    EvaluationReport a = cross_validate(m, cfg);
    EvaluationReport b = cross_validate(m, cfg);
    CHECK(a.aggregate.tp == b.aggregate.tp);
    CHECK(a.aggregate.f_measure == b.aggregate.f_measure);
    CHECK(a.aggregate.f_measure > 0.95);
}

TEST_CASE("leave-one-out is accepted") {
    SplitMix64 rng(53);
    FeatureMatrix m;
    m.feature_names = {"x"};
    for (int i = 0; i < 12; ++i) {
        const int label = i % 2;
        m.rows.push_back({label * 10.0 + rng.uniform(0, 1)});
        m.labels.push_back(label);
        m.ids.push_back("i" + std::to_string(i));
    }
    CrossValidationConfig cfg;
    cfg.k = 12;
    cfg.seed = 1;
    cfg.use_selection = false;
    EvaluationReport r = cross_validate(m, cfg);
    CHECK(r.per_fold.size() == 12);
    CHECK(r.aggregate.tp == 6);
}

TEST_CASE("insufficient data raises") {
    FeatureMatrix m;
    m.feature_names = {"x"};
    m.rows = {{1.0}, {2.0}, {3.0}};
    m.labels = {1, 0, 0};
    m.ids = {"a", "b", "c"};
    CrossValidationConfig cfg;
    cfg.k = 2;
    CHECK_THROWS_AS(cross_validate(m, cfg), InsufficientDataError);
}
