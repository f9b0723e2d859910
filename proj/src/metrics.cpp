#include "ppgbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ppgbench/errors.hpp"

namespace ppgbench {

std::optional<double> auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw ValidationError("auroc: scores and labels differ in length");
    std::size_t n_pos = 0, n_neg = 0;
    for (int y : labels) (y != 0 ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0) return std::nullopt;

    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&scores](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Midranks over tie groups; rank sum of positives gives the statistic.
    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j + 1 < idx.size() && scores[idx[j + 1]] == scores[idx[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k)
            if (labels[idx[k]] != 0) pos_rank_sum += midrank;
        i = j + 1;
    }
    const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
    return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

std::optional<double> macro_average(const std::vector<std::optional<double>>& values) {
    double acc = 0.0;
    std::size_t n = 0;
    for (const auto& v : values) {
        if (v) {
            acc += *v;
            ++n;
        }
    }
    if (n == 0) return std::nullopt;
    return acc / static_cast<double>(n);
}

std::optional<OperatingPoint> operating_point(const std::vector<double>& scores,
                                              const std::vector<int>& labels,
                                              const OperatingConstraint& constraint) {
    if (scores.size() != labels.size())
        throw ValidationError("operating_point: scores and labels differ in length");
    std::size_t n_pos = 0, n_neg = 0;
    for (int y : labels) (y != 0 ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0)
        throw ValidationError("operating_point: needs both classes present");

    std::vector<double> thresholds = scores;
    std::sort(thresholds.begin(), thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    thresholds.push_back(std::numeric_limits<double>::infinity());

    const bool constrain_spec = constraint.kind == OperatingConstraint::Kind::MinSpecificity;
    std::optional<OperatingPoint> best;
    for (double thr : thresholds) {
        std::size_t tp = 0, tn = 0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            const bool predicted_pos = scores[i] >= thr;
            if (labels[i] != 0 && predicted_pos) ++tp;
            if (labels[i] == 0 && !predicted_pos) ++tn;
        }
        const double sens = static_cast<double>(tp) / static_cast<double>(n_pos);
        const double spec = static_cast<double>(tn) / static_cast<double>(n_neg);
        const double constrained = constrain_spec ? spec : sens;
        const double free = constrain_spec ? sens : spec;
        if (constrained < constraint.value) continue;
        if (!best) {
            best = OperatingPoint{sens, spec, thr};
            continue;
        }
        const double best_free = constrain_spec ? best->sensitivity : best->specificity;
        const double best_constrained = constrain_spec ? best->specificity : best->sensitivity;
        if (free > best_free || (free == best_free && constrained > best_constrained) ||
            (free == best_free && constrained == best_constrained && thr < best->threshold)) {
            best = OperatingPoint{sens, spec, thr};
        }
    }
    return best;
}

double mae(const std::vector<double>& pred, const std::vector<double>& ref) {
    if (pred.size() != ref.size()) throw ValidationError("mae: length mismatch");
    if (pred.empty()) throw ValidationError("mae: empty input");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) acc += std::abs(pred[i] - ref[i]);
    return acc / static_cast<double>(pred.size());
}

BlandAltman bland_altman(const std::vector<double>& pred, const std::vector<double>& ref) {
    if (pred.size() != ref.size()) throw ValidationError("bland_altman: length mismatch");
    if (pred.size() < 2) throw ValidationError("bland_altman: needs at least 2 pairs");
    const auto n = static_cast<double>(pred.size());
    double bias = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) bias += pred[i] - ref[i];
    bias /= n;
    double ss = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - ref[i] - bias;
        ss += d * d;
    }
    const double sd = std::sqrt(ss / (n - 1.0));
    return {bias, bias - 1.96 * sd, bias + 1.96 * sd};
}

double median_baseline(std::vector<double> train_targets) {
    if (train_targets.empty()) throw ValidationError("median_baseline: empty input");
    std::sort(train_targets.begin(), train_targets.end());
    const std::size_t n = train_targets.size();
    if (n % 2 == 1) return train_targets[n / 2];
    return 0.5 * (train_targets[n / 2 - 1] + train_targets[n / 2]);
}

EvalReport evaluate(const TaskSpec& task, const Matrix& predictions, const Matrix& targets) {
    if (predictions.rows != targets.rows || predictions.cols != targets.cols)
        throw ValidationError("evaluate: prediction/target shape mismatch");
    if (predictions.cols != static_cast<std::size_t>(task.output_dim))
        throw ValidationError("evaluate: column count " + std::to_string(predictions.cols) +
                              " does not match task dim " + std::to_string(task.output_dim));

    EvalReport report;
    if (is_classification(task.kind)) {
        std::vector<std::optional<double>> aurocs;
        for (std::size_t j = 0; j < predictions.cols; ++j) {
            std::vector<double> s(predictions.rows);
            std::vector<int> y(predictions.rows);
            std::size_t n_pos = 0;
            for (std::size_t i = 0; i < predictions.rows; ++i) {
                s[i] = predictions.at(i, j);
                y[i] = targets.at(i, j) > 0.5 ? 1 : 0;
                n_pos += static_cast<std::size_t>(y[i]);
            }
            LabelMetrics lm;
            lm.label = task.output_names[j];
            lm.n_pos = n_pos;
            lm.n_neg = predictions.rows - n_pos;
            lm.auroc = auroc(s, y);
            if (lm.auroc) {
                if (auto op = operating_point(s, y, {OperatingConstraint::Kind::MinSpecificity, 0.8}))
                    lm.sens_at_spec80 = op->sensitivity;
                if (auto op = operating_point(s, y, {OperatingConstraint::Kind::MinSensitivity, 0.8}))
                    lm.spec_at_sens80 = op->specificity;
            }
            aurocs.push_back(lm.auroc);
            report.per_label.push_back(std::move(lm));
        }
        report.macro_auroc = macro_average(aurocs);
    } else {
        for (std::size_t j = 0; j < predictions.cols; ++j) {
            std::vector<double> p(predictions.rows), r(predictions.rows);
            for (std::size_t i = 0; i < predictions.rows; ++i) {
                p[i] = predictions.at(i, j);
                r[i] = targets.at(i, j);
            }
            const BlandAltman ba = bland_altman(p, r);
            report.regression.push_back({task.output_names[j], mae(p, r), ba.bias, ba.loa_low, ba.loa_high});
        }
    }
    return report;
}

}  // namespace ppgbench
