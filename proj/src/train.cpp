#include "ppgbench/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "ppgbench/errors.hpp"
#include "ppgbench/metrics.hpp"

namespace ppgbench {

void validate_train_config(const TrainConfig& c) {
    if (!(c.learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
    if (c.epochs < 1) throw ValidationError("epochs must be >= 1");
    if (c.effective_batch < 1 || c.micro_batch < 1)
        throw ValidationError("batch sizes must be >= 1");
    if (c.effective_batch % c.micro_batch != 0)
        throw ValidationError("effective_batch " + std::to_string(c.effective_batch) +
                              " not divisible by micro_batch " + std::to_string(c.micro_batch));
    if (c.weight_decay < 0.0) throw ValidationError("weight_decay must be >= 0");
    if (!(c.beta1 >= 0.0 && c.beta1 < 1.0 && c.beta2 >= 0.0 && c.beta2 < 1.0))
        throw ValidationError("betas must be in [0, 1)");
    if (!(c.epsilon > 0.0)) throw ValidationError("epsilon must be positive");
}

SelectionMetric default_selection_metric(TaskKind kind) {
    return is_classification(kind) ? SelectionMetric::MacroAuroc : SelectionMetric::NegMae;
}

AdamwState init_adamw_state(const ModelState& model) {
    AdamwState state;
    for_each_param(const_cast<ModelState&>(model), [&state](const char*, std::vector<double>& w) {
        state.m.emplace_back(w.size(), 0.0);
        state.v.emplace_back(w.size(), 0.0);
    });
    return state;
}

void adamw_step(ModelState& params, const ModelGrads& grads, AdamwState& state,
                const TrainConfig& config, int step_index) {
    if (step_index < 1) throw ValidationError("adamw_step: step_index must be >= 1");
    const double bc1 = 1.0 - std::pow(config.beta1, step_index);
    const double bc2 = 1.0 - std::pow(config.beta2, step_index);

    std::size_t slot = 0;
    auto& cgrads = const_cast<ModelGrads&>(grads);
    std::vector<std::vector<double>*> grad_arrays;
    for_each_param(cgrads, [&grad_arrays](const char*, std::vector<double>& w) {
        grad_arrays.push_back(&w);
    });

    for_each_param(params, [&](const char*, std::vector<double>& w) {
        std::vector<double>& m = state.m[slot];
        std::vector<double>& v = state.v[slot];
        const std::vector<double>& g = *grad_arrays[slot];
        if (g.size() != w.size()) throw ValidationError("adamw_step: gradient shape mismatch");
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
            v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            w[i] -= config.learning_rate *
                    (m_hat / (std::sqrt(v_hat) + config.epsilon) + config.weight_decay * w[i]);
        }
        ++slot;
    });
}

std::vector<double> normalized_samples(const PpgSegment& segment) {
    std::vector<double> x(segment.samples.begin(), segment.samples.end());
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= static_cast<double>(x.size());
    const double denom = std::sqrt(var + 1e-8);
    for (double& v : x) v = (v - mean) / denom;
    return x;
}

namespace {

Tensor1d assemble_batch(const std::vector<TaskSample>& samples, const std::vector<std::size_t>& order,
                        std::size_t begin, std::size_t end) {
    const std::size_t length = samples[order[begin]].segment.samples.size();
    Tensor1d batch(end - begin, 1, length);
    for (std::size_t i = begin; i < end; ++i) {
        const PpgSegment& seg = samples[order[i]].segment;
        if (seg.samples.size() != length)
            throw ValidationError("train: segments of differing lengths in one batch (" +
                                  std::to_string(seg.samples.size()) + " vs " + std::to_string(length) +
                                  "); preprocess to a common length first");
        const std::vector<double> x = normalized_samples(seg);
        std::copy(x.begin(), x.end(), batch.row(i - begin, 0));
    }
    return batch;
}

Matrix assemble_targets(const std::vector<TaskSample>& samples, const std::vector<std::size_t>& order,
                        std::size_t begin, std::size_t end, int output_dim) {
    Matrix targets(end - begin, static_cast<std::size_t>(output_dim));
    for (std::size_t i = begin; i < end; ++i) {
        const std::vector<double>& t = samples[order[i]].target;
        if (t.size() != static_cast<std::size_t>(output_dim))
            throw ValidationError("train: target dimension mismatch");
        std::copy(t.begin(), t.end(), targets.data.begin() + (i - begin) * targets.cols);
    }
    return targets;
}

void accumulate_weighted(ModelGrads& total, const ModelGrads& part, double weight) {
    auto& cpart = const_cast<ModelGrads&>(part);
    std::vector<const std::vector<double>*> parts;
    for_each_param(cpart, [&parts](const char*, std::vector<double>& w) { parts.push_back(&w); });
    std::size_t slot = 0;
    for_each_param(total, [&](const char*, std::vector<double>& w) {
        const std::vector<double>& p = *parts[slot++];
        for (std::size_t i = 0; i < w.size(); ++i) w[i] += weight * p[i];
    });
}

}  // namespace

Matrix predict(const ModelState& model, const std::vector<PpgSegment>& segments, const TaskSpec& task) {
    if (model.output_dim != task.output_dim)
        throw ValidationError("predict: model output_dim " + std::to_string(model.output_dim) +
                              " does not match task dim " + std::to_string(task.output_dim));
    Matrix scores(segments.size(), static_cast<std::size_t>(task.output_dim));
    for (std::size_t i = 0; i < segments.size(); ++i) {
        Tensor1d input(1, 1, segments[i].samples.size());
        const std::vector<double> x = normalized_samples(segments[i]);
        std::copy(x.begin(), x.end(), input.row(0, 0));
        const Matrix logits = forward(model, input);
        for (std::size_t j = 0; j < scores.cols; ++j) {
            const double z = logits.at(0, j);
            scores.at(i, j) = is_classification(task.kind)
                                  ? 1.0 / (1.0 + std::exp(-z))
                                  : z * model.output_scale[j] + model.output_offset[j];
        }
    }
    return scores;
}

double validation_metric(const ModelState& model, const TaskSpec& task,
                         const std::vector<TaskSample>& samples, SelectionMetric metric) {
    std::vector<PpgSegment> segments;
    segments.reserve(samples.size());
    for (const TaskSample& s : samples) segments.push_back(s.segment);
    const Matrix scores = predict(model, segments, task);

    if (metric == SelectionMetric::MacroAuroc) {
        std::vector<std::optional<double>> per_label(static_cast<std::size_t>(task.output_dim));
        for (std::size_t j = 0; j < per_label.size(); ++j) {
            std::vector<double> s(samples.size());
            std::vector<int> y(samples.size());
            for (std::size_t i = 0; i < samples.size(); ++i) {
                s[i] = scores.at(i, j);
                y[i] = samples[i].target[j] > 0.5 ? 1 : 0;
            }
            per_label[j] = auroc(s, y);
        }
        const auto macro = macro_average(per_label);
        // All-degenerate validation labels give no signal; rank as worst.
        return macro ? *macro : 0.0;
    }

    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        for (std::size_t j = 0; j < scores.cols; ++j) {
            acc += std::abs(scores.at(i, j) - samples[i].target[j]);
            ++n;
        }
    }
    return -(acc / static_cast<double>(n));
}

std::pair<ModelState, TrainHistory> train(const TrainConfig& config, const TaskSpec& task,
                                          const std::vector<TaskSample>& train_set,
                                          const std::vector<TaskSample>& validation_set) {
    validate_train_config(config);
    if (train_set.empty()) throw ValidationError("train: empty training set");
    if (validation_set.empty()) throw ValidationError("train: empty validation set");

    ModelState model = init_model(task.output_dim, config.seed);
    AdamwState opt_state = init_adamw_state(model);
    const LossKind loss_kind =
        is_classification(task.kind) ? LossKind::BceWithLogits : LossKind::Mse;

    // Regression trains against standardized targets; the affine head in the
    // model maps network outputs back to physical units at prediction time.
    std::vector<TaskSample> working = train_set;
    if (!is_classification(task.kind)) {
        const auto dim = static_cast<std::size_t>(task.output_dim);
        std::vector<double> mean(dim, 0.0), var(dim, 0.0);
        for (const TaskSample& s : train_set)
            for (std::size_t j = 0; j < dim; ++j) mean[j] += s.target[j];
        for (std::size_t j = 0; j < dim; ++j) mean[j] /= static_cast<double>(train_set.size());
        for (const TaskSample& s : train_set)
            for (std::size_t j = 0; j < dim; ++j)
                var[j] += (s.target[j] - mean[j]) * (s.target[j] - mean[j]);
        for (std::size_t j = 0; j < dim; ++j) {
            var[j] /= static_cast<double>(train_set.size());
            model.output_offset[j] = mean[j];
            model.output_scale[j] = std::sqrt(var[j] + 1e-8);
        }
        for (TaskSample& s : working)
            for (std::size_t j = 0; j < dim; ++j)
                s.target[j] = (s.target[j] - model.output_offset[j]) / model.output_scale[j];
    }

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 shuffle_rng(config.seed ^ 0x5DEECE66Dull);

    TrainHistory history;
    ModelState best_model = model;
    double best_metric = -std::numeric_limits<double>::infinity();
    int step_index = 0;

    const std::size_t n = train_set.size();
    const auto effective = static_cast<std::size_t>(config.effective_batch);
    const auto micro = static_cast<std::size_t>(config.micro_batch);

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        double epoch_loss = 0.0;
        std::size_t epoch_samples = 0;
        for (std::size_t chunk_begin = 0; chunk_begin < n; chunk_begin += effective) {
            const std::size_t chunk_end = std::min(n, chunk_begin + effective);
            const auto chunk_size = static_cast<double>(chunk_end - chunk_begin);

            ModelGrads total = zero_grads(model);
            for (std::size_t mb = chunk_begin; mb < chunk_end; mb += micro) {
                const std::size_t mb_end = std::min(chunk_end, mb + micro);
                const Tensor1d batch = assemble_batch(working, order, mb, mb_end);
                const Matrix targets = assemble_targets(working, order, mb, mb_end, task.output_dim);
                auto [loss, grads] = backward(model, batch, targets, loss_kind);
                if (!std::isfinite(loss))
                    throw RuntimeAbort("NaN loss at epoch " + std::to_string(epoch) + ", step " +
                                       std::to_string(step_index + 1));
                // micro-batch means weighted to the exact chunk mean
                accumulate_weighted(total, grads, static_cast<double>(mb_end - mb) / chunk_size);
                epoch_loss += loss * static_cast<double>(mb_end - mb);
                epoch_samples += mb_end - mb;
            }
            adamw_step(model, total, opt_state, config, ++step_index);
        }

        const double val = validation_metric(model, task, validation_set, config.selection_metric);
        history.epochs.push_back({epoch_loss / static_cast<double>(epoch_samples), val});
        if (val > best_metric) {
            best_metric = val;
            best_model = model;
            history.selected_epoch = epoch;
        }
    }
    history.total_steps = step_index;
    return {std::move(best_model), std::move(history)};
}

}  // namespace ppgbench
