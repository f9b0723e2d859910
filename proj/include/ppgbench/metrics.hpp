#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ppgbench/tasks.hpp"
#include "ppgbench/tensor.hpp"

namespace ppgbench {

// Tie-corrected Mann-Whitney statistic; absent when either class is empty.
std::optional<double> auroc(const std::vector<double>& scores, const std::vector<int>& labels);

// Mean over defined entries only; absent if none defined (the table-dash
// convention, not zero-filling).
std::optional<double> macro_average(const std::vector<std::optional<double>>& values);

struct OperatingConstraint {
    enum class Kind { MinSpecificity, MinSensitivity };
    Kind kind = Kind::MinSpecificity;
    double value = 0.8;
};

struct OperatingPoint {
    double sensitivity = 0.0;
    double specificity = 0.0;
    double threshold = 0.0;  // decision rule: score >= threshold -> positive
};

// Scans thresholds at every distinct score plus +inf; among thresholds
// satisfying the constraint picks the one maximizing the free metric
// (ties: larger constrained metric, then lower threshold).
std::optional<OperatingPoint> operating_point(const std::vector<double>& scores,
                                              const std::vector<int>& labels,
                                              const OperatingConstraint& constraint);

double mae(const std::vector<double>& pred, const std::vector<double>& ref);

struct BlandAltman {
    double bias = 0.0;     // mean of pred - ref
    double loa_low = 0.0;  // bias - 1.96 * sample SD
    double loa_high = 0.0;
};

BlandAltman bland_altman(const std::vector<double>& pred, const std::vector<double>& ref);

// Median of the training targets (even count: mean of the two middle values);
// predicts that constant everywhere.
double median_baseline(std::vector<double> train_targets);

struct LabelMetrics {
    std::string label;
    std::optional<double> auroc;
    std::optional<double> sens_at_spec80;
    std::optional<double> spec_at_sens80;
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
    bool insufficient = false;  // set by stratified evaluation
};

struct RegressionMetrics {
    std::string name;
    double mae = 0.0;
    double bias = 0.0;
    double loa_low = 0.0;
    double loa_high = 0.0;
};

struct EvalReport {
    std::vector<LabelMetrics> per_label;
    std::optional<double> macro_auroc;
    std::vector<RegressionMetrics> regression;
    std::vector<RegressionMetrics> baseline_regression;  // median-baseline rows
};

// Classification: per-label AUROC plus both constrained operating points.
// Regression: MAE plus Bland-Altman agreement per output, first output first.
EvalReport evaluate(const TaskSpec& task, const Matrix& predictions, const Matrix& targets);

}  // namespace ppgbench
