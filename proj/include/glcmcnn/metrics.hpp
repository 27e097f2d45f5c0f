#ifndef GLCMCNN_METRICS_HPP
#define GLCMCNN_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "net.hpp"

namespace glcmcnn {

// Argmax of class probabilities vs label; ties break toward the lowest
// class index.
inline double accuracy(const std::vector<std::vector<double>>& predictions,
                       const std::vector<int>& labels) {
    if (predictions.size() != labels.size())
        throw ValidationError("predictions/labels length mismatch");
    if (predictions.empty()) throw ValidationError("empty prediction set");
    std::int64_t correct = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const auto& p = predictions[i];
        int arg = 0;
        for (std::size_t c = 1; c < p.size(); ++c)
            if (p[c] > p[arg]) arg = static_cast<int>(c);
        correct += (arg == labels[i]);
    }
    return static_cast<double>(correct) / predictions.size();
}

inline double mean_cross_entropy(const std::vector<std::vector<double>>& probabilities,
                                 const std::vector<int>& labels) {
    if (probabilities.size() != labels.size())
        throw ValidationError("probabilities/labels length mismatch");
    if (probabilities.empty()) throw ValidationError("empty prediction set");
    double acc = 0;
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
        const auto& row = probabilities[i];
        double s = std::accumulate(row.begin(), row.end(), 0.0);
        if (std::abs(s - 1.0) > 1e-6)
            throw ValidationError("probability row " + std::to_string(i) +
                                  " sums to " + std::to_string(s));
        if (labels[i] < 0 || labels[i] >= static_cast<int>(row.size()))
            throw ValidationError("label out of range");
        acc += -std::log(std::max(row[labels[i]], 1e-12));
    }
    return acc / probabilities.size();
}

// Mann-Whitney formulation with ties contributing 1/2; returns U/(n_pos*n_neg).
inline double auc_one_vs_others(const std::vector<double>& scores,
                                const std::vector<int>& labels, int positive_class) {
    if (scores.size() != labels.size())
        throw ValidationError("scores/labels length mismatch");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double pos_rank_sum = 0;
    std::int64_t n_pos = 0, n_neg = 0;
    std::size_t i = 0;
    double rank = 1; // 1-based, ties get the average rank
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        double avg_rank = rank + static_cast<double>(j - i - 1) / 2.0;
        for (std::size_t t = i; t < j; ++t) {
            if (labels[order[t]] == positive_class) {
                pos_rank_sum += avg_rank;
                ++n_pos;
            } else {
                ++n_neg;
            }
        }
        rank += static_cast<double>(j - i);
        i = j;
    }
    if (n_pos == 0 || n_neg == 0)
        throw ValidationError("AUC undefined: need both positive and negative examples");
    double u = pos_rank_sum - static_cast<double>(n_pos) * (n_pos + 1) / 2.0;
    return u / (static_cast<double>(n_pos) * n_neg);
}

struct FoldResult {
    int fold = 0;
    int test_count = 0;
    double loss = 0;
    double accuracy = 0;
    std::vector<double> auc; // NaN where undefined within the fold
};

struct EvalResult {
    double mean_loss = 0;  // sample-weighted across folds
    double accuracy = 0;   // sample-weighted across folds
    std::vector<double> auc; // per-class mean over folds where defined
    std::vector<FoldResult> folds;
};

template <typename S>
FoldResult evaluate_fold(DualBranchNet<S>& net, const std::vector<Sample<S>>& test_set,
                         int fold_index) {
    FoldResult r;
    r.fold = fold_index;
    r.test_count = static_cast<int>(test_set.size());
    std::vector<std::vector<double>> probs;
    std::vector<int> labels;
    for (const auto& s : test_set) {
        probs.push_back(predict_probabilities(net, s));
        labels.push_back(s.label);
    }
    r.loss = mean_cross_entropy(probs, labels);
    r.accuracy = accuracy(probs, labels);
    int k = net.config().num_classes;
    for (int c = 0; c < k; ++c) {
        std::vector<double> scores;
        for (const auto& p : probs) scores.push_back(p[c]);
        bool has_pos = false, has_neg = false;
        for (int l : labels) (l == c ? has_pos : has_neg) = true;
        r.auc.push_back(has_pos && has_neg
                            ? auc_one_vs_others(scores, labels, c)
                            : std::numeric_limits<double>::quiet_NaN());
    }
    return r;
}

// Trains one model per fold, tests on the held-out fold, aggregates.
template <typename S>
EvalResult cross_validate(const NetworkConfig& net_config, const std::string& manifest_path,
                          const std::vector<ManifestEntry>& entries, const PipelineConfig& pipe,
                          int k, const TrainOptions& opt,
                          std::vector<TrainReport>* reports_out = nullptr) {
    for (const auto& e : entries)
        if (e.fold < 0 || e.fold >= k)
            throw ValidationError("manifest entry " + e.id + " has fold " +
                                  std::to_string(e.fold) + " outside [0," + std::to_string(k) + ")");
    std::vector<Sample<S>> all = load_samples<S>(manifest_path, entries, pipe);

    EvalResult result;
    result.auc.assign(net_config.num_classes, 0.0);
    std::vector<int> auc_defined(net_config.num_classes, 0);
    double loss_sum = 0, correct_sum = 0;
    std::int64_t total = 0;

    for (int f = 0; f < k; ++f) {
        std::vector<Sample<S>> train_set, test_set;
        for (std::size_t i = 0; i < all.size(); ++i)
            (entries[i].fold == f ? test_set : train_set).push_back(all[i]);
        if (test_set.empty())
            throw ValidationError("fold " + std::to_string(f) + " has no test samples");
        NetworkConfig cfg = net_config;
        cfg.seed = net_config.seed + static_cast<std::uint64_t>(f);
        DualBranchNet<S> net(cfg);
        TrainOptions fold_opt = opt;
        fold_opt.seed = opt.seed + static_cast<std::uint64_t>(f);
        TrainReport report = train(net, train_set, test_set, fold_opt);
        if (reports_out) reports_out->push_back(report);

        FoldResult fr = evaluate_fold(net, test_set, f);
        loss_sum += fr.loss * fr.test_count;
        correct_sum += fr.accuracy * fr.test_count;
        total += fr.test_count;
        for (int c = 0; c < net_config.num_classes; ++c)
            if (!std::isnan(fr.auc[c])) {
                result.auc[c] += fr.auc[c];
                ++auc_defined[c];
            }
        result.folds.push_back(std::move(fr));
    }
    result.mean_loss = loss_sum / total;
    result.accuracy = correct_sum / total;
    for (int c = 0; c < net_config.num_classes; ++c)
        result.auc[c] = auc_defined[c] > 0
                            ? result.auc[c] / auc_defined[c]
                            : std::numeric_limits<double>::quiet_NaN();
    return result;
}

} // namespace glcmcnn

#endif // GLCMCNN_METRICS_HPP
