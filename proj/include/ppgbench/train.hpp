#pragma once

#include <cstdint>
#include <vector>

#include "ppgbench/model.hpp"
#include "ppgbench/tasks.hpp"

namespace ppgbench {

enum class SelectionMetric { MacroAuroc, NegMae };

struct TrainConfig {
    double learning_rate = 0.001;
    int epochs = 50;
    int effective_batch = 512;  // reached via gradient accumulation
    int micro_batch = 32;       // must divide effective_batch
    double weight_decay = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;
    SelectionMetric selection_metric = SelectionMetric::MacroAuroc;
};

void validate_train_config(const TrainConfig& config);
SelectionMetric default_selection_metric(TaskKind kind);

// First and second moment accumulators, laid out in for_each_param order.
struct AdamwState {
    std::vector<std::vector<double>> m, v;
};

AdamwState init_adamw_state(const ModelState& model);

// Bias-corrected Adam moments with decoupled weight decay:
//   theta <- theta - lr * (m_hat / (sqrt(v_hat) + eps) + wd * theta)
void adamw_step(ModelState& params, const ModelGrads& grads, AdamwState& state,
                const TrainConfig& config, int step_index);

struct EpochStats {
    double train_loss = 0.0;
    double val_metric = 0.0;
};

struct TrainHistory {
    std::vector<EpochStats> epochs;
    int selected_epoch = 0;  // 1-based
    int total_steps = 0;     // optimizer steps across all epochs
};

// Per-segment normalization applied before the network everywhere.
std::vector<double> normalized_samples(const PpgSegment& segment);

// Shuffled micro-batches accumulated to effective_batch per optimizer step,
// per-epoch validation, best-validation snapshot returned (ties -> earliest
// epoch). Deterministic given config.seed. All training segments must share
// one length.
std::pair<ModelState, TrainHistory> train(const TrainConfig& config, const TaskSpec& task,
                                          const std::vector<TaskSample>& train_set,
                                          const std::vector<TaskSample>& validation_set);

// Sigmoid scores for classification tasks, raw outputs for regression.
// Segments may have different lengths.
Matrix predict(const ModelState& model, const std::vector<PpgSegment>& segments, const TaskSpec& task);

double validation_metric(const ModelState& model, const TaskSpec& task,
                         const std::vector<TaskSample>& samples, SelectionMetric metric);

}  // namespace ppgbench
