#include "mitoscan/classify.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "mitoscan/errors.hpp"
#include "mitoscan/rng.hpp"
#include "mitoscan/util.hpp"

namespace mitoscan {

using nlohmann::json;

ClassifierKind parse_classifier_kind(const std::string& s) {
    if (s == "bayes") return ClassifierKind::Bayes;
    if (s == "tree") return ClassifierKind::Tree;
    if (s == "linear-svm" || s == "linearSvm" || s == "svm") return ClassifierKind::LinearSvm;
    throw Error("unknown classifier '" + s + "'");
}

std::string classifier_kind_name(ClassifierKind kind) {
    switch (kind) {
        case ClassifierKind::Bayes: return "bayes";
        case ClassifierKind::Tree: return "tree";
        default: return "linear-svm";
    }
}

namespace {

struct TrainView {
    std::vector<std::vector<double>> x;  // n x |subset|
    std::vector<int> y;                  // 0/1
};

TrainView build_view(const FeatureMatrix& data, const std::vector<int>& subset,
                     const TrainConfig& cfg) {
    TrainView v;
    for (int i = 0; i < data.n_instances(); ++i) {
        if (data.labels[i] != 0 && data.labels[i] != 1) continue;
        std::vector<double> row(subset.size());
        for (size_t j = 0; j < subset.size(); ++j) {
            row[j] = data.rows[i][subset[j]];
            if (!std::isfinite(row[j]))
                throw NonFiniteFeatureError("non-finite value in feature '" +
                                            data.feature_names[subset[j]] + "' of " + data.ids[i]);
        }
        v.x.push_back(std::move(row));
        v.y.push_back(data.labels[i]);
    }

    long n1 = std::count(v.y.begin(), v.y.end(), 1);
    long n0 = static_cast<long>(v.y.size()) - n1;
    if (n0 == 0 || n1 == 0) throw SingleClassDataError("training set must contain both classes");

    if (cfg.undersample && n0 != n1) {
        const int majority = n0 > n1 ? 0 : 1;
        const long keep = std::min(n0, n1);
        std::vector<int> majority_idx;
        for (size_t i = 0; i < v.y.size(); ++i)
            if (v.y[i] == majority) majority_idx.push_back(static_cast<int>(i));
        SplitMix64 rng(cfg.undersample_seed);
        for (size_t i = majority_idx.size() - 1; i > 0; --i)
            std::swap(majority_idx[i], majority_idx[rng.next() % (i + 1)]);
        majority_idx.resize(keep);
        std::sort(majority_idx.begin(), majority_idx.end());

        TrainView reduced;
        size_t mi = 0;
        for (size_t i = 0; i < v.y.size(); ++i) {
            const bool is_majority = v.y[i] == majority;
            if (is_majority) {
                if (mi < majority_idx.size() && majority_idx[mi] == static_cast<int>(i))
                    ++mi;
                else
                    continue;
            }
            reduced.x.push_back(std::move(v.x[i]));
            reduced.y.push_back(v.y[i]);
        }
        return reduced;
    }
    return v;
}

void train_bayes(Model& model, const TrainView& v, const TrainConfig& cfg) {
    const size_t d = model.subset.size();
    const double n = static_cast<double>(v.y.size());
    std::array<double, 2> count = {0, 0};
    for (int y : v.y) count[y] += 1;
    model.log_prior = {std::log(count[0] / n), std::log(count[1] / n)};

    model.gauss_mean.assign(d, {0, 0});
    model.gauss_var.assign(d, {0, 0});
    for (size_t i = 0; i < v.x.size(); ++i)
        for (size_t j = 0; j < d; ++j) model.gauss_mean[j][v.y[i]] += v.x[i][j];
    for (size_t j = 0; j < d; ++j)
        for (int c = 0; c < 2; ++c) model.gauss_mean[j][c] /= count[c];
    for (size_t i = 0; i < v.x.size(); ++i)
        for (size_t j = 0; j < d; ++j) {
            const double dev = v.x[i][j] - model.gauss_mean[j][v.y[i]];
            model.gauss_var[j][v.y[i]] += dev * dev;
        }
    for (size_t j = 0; j < d; ++j)
        for (int c = 0; c < 2; ++c)
            model.gauss_var[j][c] = std::max(model.gauss_var[j][c] / count[c], cfg.variance_floor);
}

double node_entropy(double n1, double n) {
    if (n <= 0) return 0;
    double h = 0;
    for (double k : {n1, n - n1}) {
        if (k <= 0) continue;
        const double p = k / n;
        h -= p * std::log(p);
    }
    return h;
}

int build_tree_node(Model& model, const TrainView& v, std::vector<int> members,
                    const TrainConfig& cfg) {
    TreeNode node;
    node.n_total = static_cast<double>(members.size());
    for (int i : members) node.n_mitosis += v.y[i];

    const bool pure = node.n_mitosis == 0 || node.n_mitosis == node.n_total;
    const int node_id = static_cast<int>(model.nodes.size());
    model.nodes.push_back(node);
    if (pure || members.size() < static_cast<size_t>(cfg.min_node_size)) return node_id;

    // Best information-gain split over midpoint thresholds; ties prefer the
    // lower feature index, then the lower threshold.
    const size_t d = model.subset.size();
    double best_gain = -1, best_threshold = 0;
    int best_feature = -1;
    std::vector<std::pair<double, int>> order(members.size());
    const double parent_h = node_entropy(node.n_mitosis, node.n_total);
    for (size_t f = 0; f < d; ++f) {
        for (size_t i = 0; i < members.size(); ++i)
            order[i] = {v.x[members[i]][f], v.y[members[i]]};
        std::sort(order.begin(), order.end());
        double left1 = 0;
        for (size_t i = 0; i + 1 < order.size(); ++i) {
            left1 += order[i].second;
            if (order[i].first == order[i + 1].first) continue;
            const double nl = static_cast<double>(i + 1), nr = node.n_total - nl;
            const double gain = parent_h - (nl * node_entropy(left1, nl) +
                                            nr * node_entropy(node.n_mitosis - left1, nr)) /
                                               node.n_total;
            if (gain > best_gain + 1e-15) {
                best_gain = gain;
                best_feature = static_cast<int>(f);
                best_threshold = (order[i].first + order[i + 1].first) / 2.0;
            }
        }
    }
    if (best_feature < 0) return node_id;  // all features constant here

    std::vector<int> left, right;
    for (int i : members)
        (v.x[i][best_feature] <= best_threshold ? left : right).push_back(i);
    members.clear();
    members.shrink_to_fit();

    const int left_id = build_tree_node(model, v, std::move(left), cfg);
    const int right_id = build_tree_node(model, v, std::move(right), cfg);
    model.nodes[node_id].feature = best_feature;
    model.nodes[node_id].threshold = best_threshold;
    model.nodes[node_id].left = left_id;
    model.nodes[node_id].right = right_id;
    return node_id;
}

void train_tree(Model& model, const TrainView& v, const TrainConfig& cfg) {
    std::vector<int> all(v.y.size());
    std::iota(all.begin(), all.end(), 0);
    build_tree_node(model, v, std::move(all), cfg);
}

// L2-regularized hinge-loss SVM by dual coordinate descent (fixed instance
// order), stopping on the relative duality gap. Features are standardized
// with training statistics and a constant bias feature is appended.
void train_svm(Model& model, const TrainView& v, const TrainConfig& cfg) {
    const size_t d = model.subset.size();
    const size_t n = v.x.size();
    const double c_cost = cfg.svm_cost;

    model.std_mean.assign(d, 0.0);
    model.std_scale.assign(d, 1.0);
    for (const auto& row : v.x)
        for (size_t j = 0; j < d; ++j) model.std_mean[j] += row[j];
    for (size_t j = 0; j < d; ++j) model.std_mean[j] /= static_cast<double>(n);
    std::vector<double> var(d, 0.0);
    for (const auto& row : v.x)
        for (size_t j = 0; j < d; ++j) {
            const double dev = row[j] - model.std_mean[j];
            var[j] += dev * dev;
        }
    for (size_t j = 0; j < d; ++j) {
        const double s = std::sqrt(var[j] / static_cast<double>(n));
        model.std_scale[j] = s < 1e-12 ? 1.0 : s;
    }

    std::vector<std::vector<double>> x(n);  // standardized + bias column
    for (size_t i = 0; i < n; ++i) {
        x[i].resize(d + 1);
        for (size_t j = 0; j < d; ++j)
            x[i][j] = (v.x[i][j] - model.std_mean[j]) / model.std_scale[j];
        x[i][d] = cfg.svm_bias;
    }
    std::vector<double> y(n);
    for (size_t i = 0; i < n; ++i) y[i] = v.y[i] == 1 ? 1.0 : -1.0;

    std::vector<double> q_diag(n, 0.0);
    for (size_t i = 0; i < n; ++i)
        for (double xv : x[i]) q_diag[i] += xv * xv;

    std::vector<double> alpha(n, 0.0), w(d + 1, 0.0);
    for (int epoch = 0; epoch < cfg.svm_max_epochs; ++epoch) {
        for (size_t i = 0; i < n; ++i) {
            if (q_diag[i] <= 0) continue;
            double margin = 0;
            for (size_t j = 0; j <= d; ++j) margin += w[j] * x[i][j];
            const double grad = y[i] * margin - 1.0;
            const double next = std::clamp(alpha[i] - grad / q_diag[i], 0.0, c_cost);
            const double delta = next - alpha[i];
            if (delta != 0.0) {
                for (size_t j = 0; j <= d; ++j) w[j] += delta * y[i] * x[i][j];
                alpha[i] = next;
            }
        }

        double w_norm2 = 0;
        for (double wv : w) w_norm2 += wv * wv;
        double hinge = 0, alpha_sum = 0;
        for (size_t i = 0; i < n; ++i) {
            double margin = 0;
            for (size_t j = 0; j <= d; ++j) margin += w[j] * x[i][j];
            hinge += std::max(0.0, 1.0 - y[i] * margin);
            alpha_sum += alpha[i];
        }
        const double primal = 0.5 * w_norm2 + c_cost * hinge;
        const double dual = alpha_sum - 0.5 * w_norm2;
        if (primal - dual <= cfg.svm_eps * std::max(1.0, std::abs(primal))) break;
    }
    model.svm_weights = std::move(w);
}

}  // namespace

Model train(ClassifierKind kind, const FeatureMatrix& data, const std::vector<int>& subset,
            const TrainConfig& cfg) {
    Model model;
    model.kind = kind;
    model.training_config = cfg;
    model.subset = subset.empty() ? [&] {
        std::vector<int> all(data.n_features());
        std::iota(all.begin(), all.end(), 0);
        return all;
    }()
                                  : subset;
    for (int s : model.subset) {
        if (s < 0 || s >= data.n_features())
            throw SchemaMismatchError("subset index " + std::to_string(s) + " out of range");
        model.feature_names.push_back(data.feature_names[s]);
    }

    const TrainView view = build_view(data, model.subset, cfg);
    switch (kind) {
        case ClassifierKind::Bayes: train_bayes(model, view, cfg); break;
        case ClassifierKind::Tree: train_tree(model, view, cfg); break;
        case ClassifierKind::LinearSvm: train_svm(model, view, cfg); break;
    }
    return model;
}

Prediction predict(const Model& model, std::span<const double> row,
                   const std::string& candidate_id) {
    for (int s : model.subset)
        if (s < 0 || s >= static_cast<int>(row.size()))
            throw SchemaMismatchError("row shorter than the model's subset indices");

    Prediction pred;
    pred.candidate_id = candidate_id;

    switch (model.kind) {
        case ClassifierKind::Bayes: {
            std::array<double, 2> log_joint = model.log_prior;
            for (size_t j = 0; j < model.subset.size(); ++j) {
                const double x = row[model.subset[j]];
                for (int c = 0; c < 2; ++c) {
                    const double var = model.gauss_var[j][c];
                    const double dev = x - model.gauss_mean[j][c];
                    log_joint[c] += -0.5 * std::log(2 * 3.14159265358979323846 * var) -
                                    dev * dev / (2 * var);
                }
            }
            // Posterior of class 1 via the stable logistic form.
            pred.score = 1.0 / (1.0 + std::exp(log_joint[0] - log_joint[1]));
            pred.label = pred.score > 0.5 ? 1 : 0;
            break;
        }
        case ClassifierKind::Tree: {
            int node = 0;
            while (model.nodes[node].feature >= 0) {
                const TreeNode& tn = model.nodes[node];
                node = row[model.subset[tn.feature]] <= tn.threshold ? tn.left : tn.right;
            }
            pred.score = model.nodes[node].n_mitosis / model.nodes[node].n_total;
            pred.label = pred.score > 0.5 ? 1 : 0;
            break;
        }
        case ClassifierKind::LinearSvm: {
            const size_t d = model.subset.size();
            double margin = model.svm_weights[d] * model.training_config.svm_bias;
            for (size_t j = 0; j < d; ++j)
                margin += model.svm_weights[j] *
                          ((row[model.subset[j]] - model.std_mean[j]) / model.std_scale[j]);
            pred.score = margin;
            pred.label = margin > 0 ? 1 : 0;
            break;
        }
    }
    return pred;
}

std::vector<Prediction> predict_all(const Model& model, const FeatureMatrix& data) {
    std::vector<Prediction> out;
    out.reserve(data.n_instances());
    for (int i = 0; i < data.n_instances(); ++i)
        out.push_back(predict(model, data.rows[i], data.ids[i]));
    return out;
}

namespace {

json config_to_json(const TrainConfig& cfg) {
    return {{"minNodeSize", cfg.min_node_size}, {"svmCost", cfg.svm_cost},
            {"svmEps", cfg.svm_eps},            {"svmBias", cfg.svm_bias},
            {"svmMaxEpochs", cfg.svm_max_epochs}, {"varianceFloor", cfg.variance_floor},
            {"undersample", cfg.undersample},   {"undersampleSeed", cfg.undersample_seed}};
}

TrainConfig config_from_json(const json& j) {
    TrainConfig cfg;
    cfg.min_node_size = j.value("minNodeSize", cfg.min_node_size);
    cfg.svm_cost = j.value("svmCost", cfg.svm_cost);
    cfg.svm_eps = j.value("svmEps", cfg.svm_eps);
    cfg.svm_bias = j.value("svmBias", cfg.svm_bias);
    cfg.svm_max_epochs = j.value("svmMaxEpochs", cfg.svm_max_epochs);
    cfg.variance_floor = j.value("varianceFloor", cfg.variance_floor);
    cfg.undersample = j.value("undersample", cfg.undersample);
    cfg.undersample_seed = j.value("undersampleSeed", cfg.undersample_seed);
    return cfg;
}

}  // namespace

void save_model(const Model& model, const std::filesystem::path& path) {
    json j;
    j["version"] = model.version;
    j["kind"] = classifier_kind_name(model.kind);
    j["subset"] = model.subset;
    j["featureNames"] = model.feature_names;
    j["trainingConfig"] = config_to_json(model.training_config);
    switch (model.kind) {
        case ClassifierKind::Bayes: {
            j["logPrior"] = model.log_prior;
            json means = json::array(), vars = json::array();
            for (const auto& m : model.gauss_mean) means.push_back(m);
            for (const auto& v : model.gauss_var) vars.push_back(v);
            j["gaussMean"] = means;
            j["gaussVar"] = vars;
            break;
        }
        case ClassifierKind::Tree: {
            json nodes = json::array();
            for (const auto& n : model.nodes)
                nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold},
                                 {"left", n.left},       {"right", n.right},
                                 {"nMitosis", n.n_mitosis}, {"nTotal", n.n_total}});
            j["nodes"] = nodes;
            break;
        }
        case ClassifierKind::LinearSvm:
            j["weights"] = model.svm_weights;
            j["stdMean"] = model.std_mean;
            j["stdScale"] = model.std_scale;
            break;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UnreadableFileError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

Model load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UnreadableFileError("cannot open " + path.string());
    json j = json::parse(in);

    Model model;
    model.version = j.at("version").get<int>();
    model.kind = parse_classifier_kind(j.at("kind").get<std::string>());
    model.subset = j.at("subset").get<std::vector<int>>();
    model.feature_names = j.at("featureNames").get<std::vector<std::string>>();
    model.training_config = config_from_json(j.at("trainingConfig"));
    switch (model.kind) {
        case ClassifierKind::Bayes: {
            model.log_prior = j.at("logPrior").get<std::array<double, 2>>();
            for (const auto& m : j.at("gaussMean"))
                model.gauss_mean.push_back(m.get<std::array<double, 2>>());
            for (const auto& v : j.at("gaussVar"))
                model.gauss_var.push_back(v.get<std::array<double, 2>>());
            break;
        }
        case ClassifierKind::Tree:
            for (const auto& n : j.at("nodes")) {
                TreeNode tn;
                tn.feature = n.at("feature").get<int>();
                tn.threshold = n.at("threshold").get<double>();
                tn.left = n.at("left").get<int>();
                tn.right = n.at("right").get<int>();
                tn.n_mitosis = n.at("nMitosis").get<double>();
                tn.n_total = n.at("nTotal").get<double>();
                model.nodes.push_back(tn);
            }
            break;
        case ClassifierKind::LinearSvm:
            model.svm_weights = j.at("weights").get<std::vector<double>>();
            model.std_mean = j.at("stdMean").get<std::vector<double>>();
            model.std_scale = j.at("stdScale").get<std::vector<double>>();
            break;
    }
    return model;
}

}  // namespace mitoscan
