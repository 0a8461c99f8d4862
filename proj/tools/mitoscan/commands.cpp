#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include <nlohmann/json.hpp>

#include "mitoscan/classify.hpp"
#include "mitoscan/detect.hpp"
#include "mitoscan/errors.hpp"
#include "mitoscan/evaluate.hpp"
#include "mitoscan/features.hpp"
#include "mitoscan/focus.hpp"
#include "mitoscan/select.hpp"
#include "mitoscan/stack.hpp"
#include "mitoscan/synth.hpp"
#include "mitoscan/util.hpp"

namespace mitoscan::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class StageTimer {
  public:
    explicit StageTimer(std::string name)
        : name_(std::move(name)), start_(std::chrono::steady_clock::now()) {}
    ~StageTimer() {
        const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - start_)
                            .count();
        std::cerr << "[" << name_ << "] " << ms << " ms\n";
    }

  private:
    std::string name_;
    std::chrono::steady_clock::time_point start_;
};

std::vector<std::string> resolve_hpfs(const Options& opt) {
    if (!opt.hpf_ids.empty()) return opt.hpf_ids;
    if (opt.dataset_root.empty()) throw Error("no dataset root given");
    std::vector<std::string> ids;
    for (const auto& entry : fs::directory_iterator(opt.dataset_root))
        if (entry.is_directory() && fs::exists(entry.path() / "band00_plane00.png"))
            ids.push_back(entry.path().filename().string());
    std::sort(ids.begin(), ids.end());
    if (ids.empty()) throw UnreadableFileError("no stacks under " + opt.dataset_root);
    return ids;
}

json config_echo(const Options& opt) {
    return {{"datasetRoot", opt.dataset_root},
            {"band", opt.band},
            {"plane", opt.plane},
            {"keepPlanes", opt.keep_planes},
            {"minArea", opt.min_area},
            {"maxArea", opt.max_area},
            {"openRadius", opt.open_radius},
            {"toleranceMicrons", opt.tolerance_um},
            {"micronsPerPixel", opt.microns_per_pixel},
            {"classifier", opt.classifier},
            {"featureMode", opt.feature_mode},
            {"seed", opt.seed},
            {"jobs", opt.jobs},
            {"bins", opt.bins},
            {"backtrack", opt.backtrack},
            {"minNodeSize", opt.min_node_size},
            {"undersample", opt.undersample},
            {"grayLevels", opt.gray_levels},
            {"windowMargin", opt.window_margin},
            {"kFolds", opt.k_folds},
            {"useSelection", opt.use_selection}};
}

json counts_json(const Counts& c) {
    return {{"tp", c.tp},   {"fp", c.fp},   {"fn", c.fn},
            {"tpr", c.tpr}, {"ppv", c.ppv}, {"fMeasure", c.f_measure}};
}

void write_json(const json& j, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UnreadableFileError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

std::optional<GroundTruth> try_load_gt(const Options& opt, const std::string& hpf) {
    const fs::path csv = fs::path(opt.dataset_root) / hpf / "mitosis.csv";
    if (!fs::exists(csv)) return std::nullopt;
    return load_ground_truth(csv);
}

// Per-candidate labels from greedy matching against the ground truth, plus
// the count of ground truth no candidate reached (detection-stage misses).
std::pair<std::vector<int>, long> label_by_matching(const std::vector<CandidateRegion>& candidates,
                                                    const GroundTruth& gt, double tolerance_um,
                                                    double microns_per_pixel) {
    const MatchResult m = match(candidates, gt, tolerance_um, microns_per_pixel);
    std::map<std::string, int> labels;
    for (const auto& c : candidates) labels[c.id] = 0;
    for (const auto& [cand_id, gt_id] : m.tp_pairs) labels[cand_id] = 1;
    std::vector<int> out;
    out.reserve(candidates.size());
    for (const auto& c : candidates) out.push_back(labels[c.id]);
    return {out, static_cast<long>(m.fn_ids.size())};
}

TrainConfig train_config(const Options& opt) {
    TrainConfig cfg;
    cfg.min_node_size = opt.min_node_size;
    cfg.undersample = opt.undersample;
    cfg.undersample_seed = opt.seed;
    return cfg;
}

// Column subset a train/eval run consumes: explicit stored subset, or a
// feature-mode filter over the schema-encoded names.
std::vector<int> resolve_subset(const Options& opt, const FeatureMatrix& m) {
    if (!opt.subset_path.empty()) {
        const FeatureSubset s = load_subset(opt.subset_path);
        for (int idx : s.indices)
            if (idx < 0 || idx >= m.n_features())
                throw SchemaMismatchError("stored subset index " + std::to_string(idx) +
                                          " outside the feature matrix");
        return s.indices;
    }
    const FeatureMode mode = parse_feature_mode(opt.feature_mode);
    if (mode == FeatureMode::Selected)
        throw Error("feature mode 'selected' needs --subset");
    if (mode == FeatureMode::All) return {};
    return feature_mode_columns(m.feature_names, mode);
}

void check_model_schema(const Model& model, const FeatureMatrix& m) {
    for (size_t j = 0; j < model.subset.size(); ++j) {
        const int idx = model.subset[j];
        if (idx < 0 || idx >= m.n_features() || m.feature_names[idx] != model.feature_names[j])
            throw SchemaMismatchError("feature matrix does not match the model's schema");
    }
}

}  // namespace

int cmd_synth(const Options& opt) {
    StageTimer timer("synth");
    if (opt.spec_file.empty() || opt.out_dir.empty())
        throw Error("synth needs --spec and --out");
    const SynthSpec spec = load_synth_spec(opt.spec_file);
    const SynthResult result = generate(spec, opt.hpf_id);

    save_stack(result.stack, opt.out_dir);
    save_ground_truth(result.gt, fs::path(opt.out_dir) / opt.hpf_id / "mitosis.csv");
    save_synth_spec(spec, fs::path(opt.out_dir) / opt.hpf_id / "synth_spec.txt");
    std::cerr << "[synth] " << result.stack.bands << " bands x " << result.stack.planes
              << " planes, " << result.gt.mitoses.size() << " mitoses -> " << opt.out_dir << "\n";
    return 0;
}

int cmd_focus(const Options& opt) {
    StageTimer timer("focus");
    const auto hpfs = resolve_hpfs(opt);
    if (opt.out_path.empty()) throw Error("focus needs --out");

    std::ofstream out(opt.out_path, std::ios::binary);
    if (!out) throw UnreadableFileError("cannot write " + opt.out_path);
    out << "hpf,band,plane,averageGradient,rank,selected\n";

    std::ofstream hist_out;
    if (!opt.histogram_path.empty()) {
        hist_out.open(opt.histogram_path, std::ios::binary);
        if (!hist_out) throw UnreadableFileError("cannot write " + opt.histogram_path);
        hist_out << "hpf,band,bin,mitosis,background\n";
    }

    for (const auto& hpf : hpfs) {
        const MultispectralHPF stack = load_stack(opt.dataset_root, hpf, opt.microns_per_pixel);
        for (int b = 0; b < stack.bands; ++b) {
            const FocusRanking ranking = rank_planes(stack, b, opt.keep_planes);
            std::vector<int> rank_of(stack.planes, -1);
            for (size_t i = 0; i < ranking.selected.size(); ++i)
                rank_of[ranking.selected[i]] = static_cast<int>(i);
            // Full rank order for unselected planes too.
            std::vector<int> order(stack.planes);
            for (int p = 0; p < stack.planes; ++p) order[p] = p;
            std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
                return ranking.scores[x].average_gradient > ranking.scores[y].average_gradient;
            });
            std::vector<int> full_rank(stack.planes);
            for (int i = 0; i < stack.planes; ++i) full_rank[order[i]] = i;

            for (int p = 0; p < stack.planes; ++p)
                out << hpf << ',' << b << ',' << p << ','
                    << format_double(ranking.scores[p].average_gradient) << ',' << full_rank[p]
                    << ',' << (rank_of[p] >= 0 ? 1 : 0) << '\n';
        }

        if (hist_out.is_open()) {
            const auto gt = try_load_gt(opt, hpf);
            if (!gt) throw UnreadableFileError("histograms need " + hpf + "/mitosis.csv");
            BinaryMask mitotic(stack.width, stack.height);
            for (const auto& m : gt->mitoses) {
                if (!m.pixels.empty()) {
                    for (auto [x, y] : m.pixels)
                        if (mitotic.in_bounds(x, y)) mitotic.set(x, y, true);
                } else {
                    // Centroid-only ground truth: stand in a 300-px disk.
                    const int r = 10;
                    for (int dy = -r; dy <= r; ++dy)
                        for (int dx = -r; dx <= r; ++dx) {
                            if (dx * dx + dy * dy > 98) continue;  // ~300 px
                            const int x = static_cast<int>(m.cx) + dx;
                            const int y = static_cast<int>(m.cy) + dy;
                            if (mitotic.in_bounds(x, y)) mitotic.set(x, y, true);
                        }
                }
            }
            BinaryMask background(stack.width, stack.height);
            for (size_t i = 0; i < background.bits.size(); ++i)
                background.bits[i] = mitotic.bits[i] ? 0 : 1;

            for (int b = 0; b < stack.bands; ++b) {
                const GrayImage& img = stack.image(b, opt.plane);
                const int bins = opt.histogram_bins > 0 ? opt.histogram_bins
                                                        : default_bin_count(img.bit_depth);
                const Histogram hm = masked_histogram(img, mitotic, bins);
                const Histogram hb = masked_histogram(img, background, bins);
                for (int bin = 0; bin < bins; ++bin)
                    hist_out << hpf << ',' << b << ',' << bin << ',' << hm.counts[bin] << ','
                             << hb.counts[bin] << '\n';
            }
        }
    }
    return 0;
}

namespace {

std::string plane_tag(int band, int plane) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "b%02dp%02d", band, plane);
    return buf;
}

}  // namespace

int cmd_detect(const Options& opt) {
    StageTimer timer("detect");
    const auto hpfs = resolve_hpfs(opt);
    if (opt.out_dir.empty()) throw Error("detect needs --out-dir");
    fs::create_directories(opt.out_dir);

    DetectParams params;
    params.open_radius = opt.open_radius;
    params.min_area = opt.min_area;
    params.max_area = opt.max_area;

    if (!opt.sweep) {
        for (const auto& hpf : hpfs) {
            const MultispectralHPF stack = load_stack(opt.dataset_root, hpf, opt.microns_per_pixel);
            const auto candidates = detect(stack, opt.band, opt.plane, params);
            save_candidates(candidates, fs::path(opt.out_dir) / (hpf + "_candidates.csv"),
                            fs::path(opt.out_dir) / "masks");
            std::cerr << "[detect] " << hpf << ": " << candidates.size() << " candidates\n";
        }
        return 0;
    }

    // Sweep: every band x the top keep_planes planes per band, ranked by
    // F-measure against ground truth when available.
    struct SweepCell {
        int band, plane;
        long candidates = 0;
        long tp = 0, fp = 0, fn = 0;
    };
    std::vector<SweepCell> cells;

    for (const auto& hpf : hpfs) {
        const MultispectralHPF stack = load_stack(opt.dataset_root, hpf, opt.microns_per_pixel);
        const auto gt = try_load_gt(opt, hpf);

        std::vector<std::pair<int, int>> grid;
        for (int b = 0; b < stack.bands; ++b) {
            const FocusRanking ranking = rank_planes(stack, b, opt.keep_planes);
            for (int p : ranking.selected) grid.emplace_back(b, p);
        }
        std::sort(grid.begin(), grid.end());

        std::vector<std::vector<CandidateRegion>> results(grid.size());
        parallel_for(static_cast<long>(grid.size()), opt.jobs, [&](long i) {
            results[i] = detect(stack, grid[i].first, grid[i].second, params);
        });

        for (size_t i = 0; i < grid.size(); ++i) {
            const auto [b, p] = grid[i];
            save_candidates(results[i],
                            fs::path(opt.out_dir) / (hpf + "_" + plane_tag(b, p) + "_candidates.csv"),
                            fs::path(opt.out_dir) / "masks");
            auto it = std::find_if(cells.begin(), cells.end(), [&](const SweepCell& c) {
                return c.band == b && c.plane == p;
            });
            if (it == cells.end()) {
                cells.push_back({b, p});
                it = std::prev(cells.end());
            }
            it->candidates += static_cast<long>(results[i].size());
            if (gt) {
                const MatchResult m = match(results[i], *gt, opt.tolerance_um, opt.microns_per_pixel);
                it->tp += static_cast<long>(m.tp_pairs.size());
                it->fp += static_cast<long>(m.fp_ids.size());
                it->fn += static_cast<long>(m.fn_ids.size());
            }
        }
    }

    std::stable_sort(cells.begin(), cells.end(), [](const SweepCell& a, const SweepCell& b) {
        const double fa = metrics(a.tp, a.fp, a.fn).f_measure;
        const double fb = metrics(b.tp, b.fp, b.fn).f_measure;
        if (fa != fb) return fa > fb;
        if (a.band != b.band) return a.band < b.band;
        return a.plane < b.plane;
    });
    std::ofstream rank_out(fs::path(opt.out_dir) / "sweep_ranking.csv", std::ios::binary);
    rank_out << "band,plane,candidates,tp,fp,fn,tpr,ppv,fMeasure\n";
    for (const auto& c : cells) {
        const Counts m = metrics(c.tp, c.fp, c.fn);
        rank_out << c.band << ',' << c.plane << ',' << c.candidates << ',' << c.tp << ',' << c.fp
                 << ',' << c.fn << ',' << format_double(m.tpr) << ',' << format_double(m.ppv)
                 << ',' << format_double(m.f_measure) << '\n';
    }
    return 0;
}

int cmd_features(const Options& opt) {
    StageTimer timer("features");
    const auto hpfs = resolve_hpfs(opt);
    if (opt.candidates_dir.empty() || opt.out_path.empty())
        throw Error("features needs --candidates-dir and --out");

    TextureConfig tex;
    tex.gray_levels = opt.gray_levels;
    tex.window_margin = opt.window_margin;

    FeatureMatrix matrix;
    matrix.feature_names = FeatureSchema::instance().names();
    long detection_fn_total = 0;
    json per_hpf = json::object();

    for (const auto& hpf : hpfs) {
        const MultispectralHPF stack = load_stack(opt.dataset_root, hpf, opt.microns_per_pixel);
        const auto candidates = load_candidates(
            fs::path(opt.candidates_dir) / (hpf + "_candidates.csv"),
            fs::path(opt.candidates_dir) / "masks");

        std::vector<int> labels(candidates.size(), -1);
        if (const auto gt = try_load_gt(opt, hpf)) {
            auto [matched, missed] =
                label_by_matching(candidates, *gt, opt.tolerance_um, opt.microns_per_pixel);
            labels = std::move(matched);
            detection_fn_total += missed;
            per_hpf[hpf] = missed;
        }

        std::vector<FeatureVector> vectors(candidates.size());
        parallel_for(static_cast<long>(candidates.size()), opt.jobs, [&](long i) {
            vectors[i] = feature_vector(stack, candidates[i], opt.plane, tex);
        });

        for (size_t i = 0; i < candidates.size(); ++i) {
            matrix.ids.push_back(vectors[i].candidate_id);
            matrix.labels.push_back(labels[i]);
            matrix.rows.push_back(std::move(vectors[i].values));
        }
        std::cerr << "[features] " << hpf << ": " << candidates.size() << " candidates\n";
    }

    save_feature_matrix(matrix, opt.out_path);
    json meta = {{"detectionFn", detection_fn_total},
                 {"detectionFnPerHpf", per_hpf},
                 {"rows", matrix.n_instances()},
                 {"config", config_echo(opt)}};
    write_json(meta, opt.out_path + ".meta.json");
    return 0;
}

int cmd_select(const Options& opt) {
    StageTimer timer("select");
    if (opt.features_path.empty() || opt.out_path.empty())
        throw Error("select needs --features and --out");
    const FeatureMatrix m = load_feature_matrix(opt.features_path);
    const FeatureSubset subset = select_features(m, opt.bins, opt.backtrack);

    json j;
    j["indices"] = subset.indices;
    j["inconsistencyRate"] = subset.rate;
    j["fullSetRate"] = subset.full_set_rate;
    json names = json::array();
    for (int i : subset.indices) names.push_back(m.feature_names[i]);
    j["names"] = names;
    json log = json::array();
    for (auto [size, rate] : subset.search_log) log.push_back({{"size", size}, {"rate", rate}});
    j["searchLog"] = log;
    j["config"] = config_echo(opt);
    write_json(j, opt.out_path);
    std::cerr << "[select] kept " << subset.indices.size() << " of " << m.n_features()
              << " features, rate " << subset.rate << "\n";
    return 0;
}

int cmd_train(const Options& opt) {
    StageTimer timer("train");
    if (opt.features_path.empty() || opt.out_path.empty())
        throw Error("train needs --features and --out");
    const FeatureMatrix m = load_feature_matrix(opt.features_path);
    const std::vector<int> subset = resolve_subset(opt, m);

    const Model model = train(parse_classifier_kind(opt.classifier), m, subset, train_config(opt));
    save_model(model, opt.out_path);
    std::cerr << "[train] " << opt.classifier << " on " << m.n_instances() << " rows, "
              << (subset.empty() ? m.n_features() : static_cast<int>(subset.size()))
              << " features\n";
    return 0;
}

int cmd_eval(const Options& opt) {
    StageTimer timer("eval");
    if (opt.features_path.empty() || opt.model_path.empty() || opt.out_path.empty())
        throw Error("eval needs --features, --model and --out");
    const FeatureMatrix m = load_feature_matrix(opt.features_path);
    const Model model = load_model(opt.model_path);
    check_model_schema(model, m);

    std::vector<Prediction> predictions = predict_all(model, m);

    if (!opt.predictions_path.empty()) {
        std::vector<Prediction> sorted = predictions;
        std::stable_sort(sorted.begin(), sorted.end(), [](const Prediction& a, const Prediction& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.candidate_id < b.candidate_id;
        });
        std::ofstream out(opt.predictions_path, std::ios::binary);
        out << "candidateId,label,score\n";
        for (const auto& p : sorted)
            out << p.candidate_id << ',' << (p.label ? "mitosis" : "nonMitosis") << ','
                << format_double(p.score) << '\n';
    }

    json report;
    report["config"] = config_echo(opt);

    const bool labeled = std::any_of(m.labels.begin(), m.labels.end(),
                                     [](int l) { return l == 0 || l == 1; });
    if (labeled) {
        long tp = 0, fp = 0, fn = 0;
        for (int i = 0; i < m.n_instances(); ++i) {
            if (predictions[i].label == 1 && m.labels[i] == 1) ++tp;
            if (predictions[i].label == 1 && m.labels[i] == 0) ++fp;
            if (predictions[i].label == 0 && m.labels[i] == 1) ++fn;
        }
        report["classification"] = counts_json(metrics(tp, fp, fn));
    }

    std::vector<std::pair<std::string, std::string>> outcomes;  // (id, tag)
    if (!opt.dataset_root.empty() && !opt.candidates_dir.empty()) {
        // End-to-end accounting against the ground truth centroids.
        long tp = 0, fp = 0, fn = 0, detection_fn = 0;
        for (const auto& hpf : resolve_hpfs(opt)) {
            const auto gt = try_load_gt(opt, hpf);
            if (!gt) continue;
            const auto candidates = load_candidates(
                fs::path(opt.candidates_dir) / (hpf + "_candidates.csv"),
                fs::path(opt.candidates_dir) / "masks");

            std::map<std::string, int> predicted_label;
            for (const auto& p : predictions) predicted_label[p.candidate_id] = p.label;
            std::vector<CandidateRegion> positives;
            for (const auto& c : candidates) {
                const auto it = predicted_label.find(c.id);
                if (it != predicted_label.end() && it->second == 1) positives.push_back(c);
            }

            const MatchResult mr = match(positives, *gt, opt.tolerance_um, opt.microns_per_pixel);
            tp += static_cast<long>(mr.tp_pairs.size());
            fp += static_cast<long>(mr.fp_ids.size());
            fn += static_cast<long>(mr.fn_ids.size());
            for (const auto& [cid, gid] : mr.tp_pairs) outcomes.emplace_back(cid, "TP");
            for (const auto& id : mr.fp_ids) outcomes.emplace_back(id, "FP");
            for (const auto& id : mr.fn_ids) outcomes.emplace_back(id, "FN");

            const MatchResult all = match(candidates, *gt, opt.tolerance_um, opt.microns_per_pixel);
            detection_fn += static_cast<long>(all.fn_ids.size());
        }
        report["endToEnd"] = counts_json(metrics(tp, fp, fn));
        report["detectionStageFn"] = detection_fn;
    }

    if (!opt.outcomes_path.empty()) {
        if (outcomes.empty())
            for (int i = 0; i < m.n_instances(); ++i) {
                const bool actual = m.labels[i] == 1, pred = predictions[i].label == 1;
                if (pred && actual) outcomes.emplace_back(m.ids[i], "TP");
                else if (pred) outcomes.emplace_back(m.ids[i], "FP");
                else if (actual) outcomes.emplace_back(m.ids[i], "FN");
                else outcomes.emplace_back(m.ids[i], "TN");
            }
        std::ofstream out(opt.outcomes_path, std::ios::binary);
        out << "id,outcome\n";
        for (const auto& [id, tag] : outcomes) out << id << ',' << tag << '\n';
    }

    write_json(report, opt.out_path);
    return 0;
}

int cmd_cv(const Options& opt) {
    StageTimer timer("cv");
    if (opt.features_path.empty() || opt.out_path.empty())
        throw Error("cv needs --features and --out");
    const FeatureMatrix m = load_feature_matrix(opt.features_path);

    CrossValidationConfig cfg;
    cfg.k = opt.k_folds;
    cfg.seed = opt.seed;
    cfg.classifier = parse_classifier_kind(opt.classifier);
    cfg.train = train_config(opt);
    cfg.use_selection = opt.use_selection;
    cfg.bin_count = opt.bins;
    cfg.backtrack = opt.backtrack;
    cfg.feature_mode = parse_feature_mode(opt.feature_mode);
    if (cfg.feature_mode == FeatureMode::Selected)
        throw Error("cv refits selection per fold; use --feature-mode all..textureOnly");

    if (opt.detection_fn >= 0) {
        cfg.detection_fn = opt.detection_fn;
    } else {
        const fs::path meta_path = opt.features_path + ".meta.json";
        if (fs::exists(meta_path)) {
            std::ifstream in(meta_path);
            cfg.detection_fn = json::parse(in).value("detectionFn", 0L);
        }
    }

    const EvaluationReport report = cross_validate(m, cfg);
    json j;
    j["config"] = config_echo(opt);
    j["aggregate"] = counts_json(report.aggregate);
    j["detectionStageFn"] = report.detection_stage_fn;
    json folds = json::array();
    for (const auto& f : report.per_fold) folds.push_back(counts_json(f));
    j["perFold"] = folds;
    write_json(j, opt.out_path);
    std::cerr << "[cv] k=" << cfg.k << " F=" << report.aggregate.f_measure << "\n";
    return 0;
}

}  // namespace mitoscan::cli
