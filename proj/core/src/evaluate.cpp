#include "mitoscan/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "mitoscan/errors.hpp"
#include "mitoscan/rng.hpp"

namespace mitoscan {

MatchResult match(const std::vector<CandidateRegion>& predicted, const GroundTruth& gt,
                  double tolerance_microns, double microns_per_pixel) {
    if (tolerance_microns <= 0) throw Error("matching tolerance must be positive");
    const double tol_px = tolerance_microns / microns_per_pixel;

    struct Pair {
        double dist;
        int cand;
        int gt;
    };
    std::vector<Pair> pairs;
    for (size_t c = 0; c < predicted.size(); ++c) {
        for (size_t g = 0; g < gt.mitoses.size(); ++g) {
            const double dx = predicted[c].cx - gt.mitoses[g].cx;
            const double dy = predicted[c].cy - gt.mitoses[g].cy;
            const double dist = std::sqrt(dx * dx + dy * dy);
            if (dist <= tol_px) pairs.push_back({dist, static_cast<int>(c), static_cast<int>(g)});
        }
    }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        if (a.dist != b.dist) return a.dist < b.dist;
        if (a.cand != b.cand) return a.cand < b.cand;
        return a.gt < b.gt;
    });

    MatchResult result;
    result.tolerance_microns = tolerance_microns;
    std::vector<bool> cand_used(predicted.size(), false), gt_used(gt.mitoses.size(), false);
    for (const Pair& p : pairs) {
        if (cand_used[p.cand] || gt_used[p.gt]) continue;
        cand_used[p.cand] = true;
        gt_used[p.gt] = true;
        result.tp_pairs.emplace_back(predicted[p.cand].id, gt.mitoses[p.gt].id);
    }
    for (size_t c = 0; c < predicted.size(); ++c)
        if (!cand_used[c]) result.fp_ids.push_back(predicted[c].id);
    for (size_t g = 0; g < gt.mitoses.size(); ++g)
        if (!gt_used[g]) result.fn_ids.push_back(gt.mitoses[g].id);
    return result;
}

Counts metrics(long tp, long fp, long fn) {
    Counts c;
    c.tp = tp;
    c.fp = fp;
    c.fn = fn;
    c.tpr = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    c.ppv = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    c.f_measure = c.tpr + c.ppv > 0 ? 2.0 * c.tpr * c.ppv / (c.tpr + c.ppv) : 0.0;
    return c;
}

std::vector<int> stratified_folds(const std::vector<std::string>& ids,
                                  const std::vector<int>& labels, int k, uint64_t seed) {
    if (k < 2) throw InsufficientDataError("k must be at least 2");
    const size_t n = ids.size();
    if (static_cast<size_t>(k) > n)
        throw InsufficientDataError("k exceeds the instance count");
    std::vector<int> fold(n, -1);

    std::map<int, std::vector<size_t>> by_class;
    for (size_t i = 0; i < n; ++i) by_class[labels[i]].push_back(i);

    for (auto& [label, members] : by_class) {
        // Two per class keeps every training split two-class, including
        // leave-one-out (members land in distinct folds while size <= k).
        if (members.size() < 2)
            throw InsufficientDataError("class " + std::to_string(label) + " has fewer than 2 instances");
        // Canonical order by id makes the assignment independent of the row
        // order the matrix happened to arrive in.
        std::sort(members.begin(), members.end(),
                  [&](size_t a, size_t b) { return ids[a] < ids[b]; });
        SplitMix64 rng(derive_seed(seed, static_cast<uint64_t>(label) + 1));
        for (size_t i = members.size() - 1; i > 0; --i)
            std::swap(members[i], members[rng.next() % (i + 1)]);
        for (size_t i = 0; i < members.size(); ++i)
            fold[members[i]] = static_cast<int>(i % k);
    }
    return fold;
}

EvaluationReport cross_validate(const FeatureMatrix& features, const CrossValidationConfig& cfg) {
    FeatureMatrix data = cfg.feature_mode == FeatureMode::All
                             ? features
                             : restrict_columns(features, feature_mode_columns(
                                                              features.feature_names,
                                                              cfg.feature_mode));

    const std::vector<int> fold = stratified_folds(data.ids, data.labels, cfg.k, cfg.seed);

    EvaluationReport report;
    long tp = 0, fp = 0, fn = 0;
    for (int f = 0; f < cfg.k; ++f) {
        FeatureMatrix train_m, test_m;
        train_m.feature_names = test_m.feature_names = data.feature_names;
        for (int i = 0; i < data.n_instances(); ++i) {
            FeatureMatrix& dst = fold[i] == f ? test_m : train_m;
            dst.ids.push_back(data.ids[i]);
            dst.labels.push_back(data.labels[i]);
            dst.rows.push_back(data.rows[i]);
        }

        std::vector<int> subset;
        if (cfg.use_selection) {
            // Bins fit on the training folds only, then frozen.
            const DiscretizationModel bins = fit_discretization(train_m, cfg.bin_count);
            subset = select_features(apply_discretization(bins, train_m), cfg.backtrack).indices;
            if (subset.empty()) subset.clear();  // fall through to the full set
        }

        TrainConfig train_cfg = cfg.train;
        train_cfg.undersample_seed = derive_seed(cfg.seed, 512 + f);
        const Model model = train(cfg.classifier, train_m, subset, train_cfg);

        long ftp = 0, ffp = 0, ffn = 0;
        for (int i = 0; i < test_m.n_instances(); ++i) {
            const Prediction p = predict(model, test_m.rows[i], test_m.ids[i]);
            if (p.label == 1 && test_m.labels[i] == 1) ++ftp;
            if (p.label == 1 && test_m.labels[i] == 0) ++ffp;
            if (p.label == 0 && test_m.labels[i] == 1) ++ffn;
        }
        report.per_fold.push_back(metrics(ftp, ffp, ffn));
        tp += ftp;
        fp += ffp;
        fn += ffn;
    }

    report.detection_stage_fn = cfg.detection_fn;
    report.aggregate = metrics(tp, fp, fn + cfg.detection_fn);
    return report;
}

}  // namespace mitoscan
