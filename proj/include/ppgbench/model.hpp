#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ppgbench/tensor.hpp"

namespace ppgbench {

// Architecture "lenet1d_v1":
//   conv(16ch, k7, same) -> relu -> maxpool(4)
//   conv(32ch, k7, same) -> relu -> maxpool(4)
//   global average pool -> dense(64) -> relu -> dense(output_dim)
// Global average pooling decouples the output from the input length, so a
// model trained at one segment length runs on any other above the minimum.
inline constexpr const char* kArchitectureId = "lenet1d_v1";
inline constexpr std::size_t kMinInputLength = 16;  // two maxpool(4) stages

struct ConvLayer {
    int out_ch = 0, in_ch = 0, kernel = 0;
    std::vector<double> weight;  // (out_ch, in_ch, kernel)
    std::vector<double> bias;    // (out_ch)
};

struct DenseLayer {
    int out_f = 0, in_f = 0;
    std::vector<double> weight;  // (out_f, in_f)
    std::vector<double> bias;    // (out_f)
};

struct ModelState {
    std::string architecture = kArchitectureId;
    int output_dim = 0;
    ConvLayer conv1, conv2;
    DenseLayer fc1, fc2;
    // Fixed affine output head for regression targets: training standardizes
    // targets to unit scale, prediction maps the network output back. Not
    // touched by the optimizer. Identity for classification.
    std::vector<double> output_offset, output_scale;
};

// Same shapes as the parameters they differentiate.
using ModelGrads = ModelState;

// Fan-in-scaled uniform weights (+-sqrt(1/fan_in)), zero biases.
ModelState init_model(int output_dim, std::uint64_t seed);

// Fixed visiting order; the order defines checkpoint layout and the
// optimizer-state layout.
template <typename Model, typename Fn>
void for_each_param(Model& model, Fn&& fn) {
    fn("conv1.weight", model.conv1.weight);
    fn("conv1.bias", model.conv1.bias);
    fn("conv2.weight", model.conv2.weight);
    fn("conv2.bias", model.conv2.bias);
    fn("fc1.weight", model.fc1.weight);
    fn("fc1.bias", model.fc1.bias);
    fn("fc2.weight", model.fc2.weight);
    fn("fc2.bias", model.fc2.bias);
}

struct ForwardCache {
    Tensor1d input, h1, p1, h2, p2;
    std::vector<std::size_t> argmax1, argmax2;
    Matrix gap, hidden;
};

// Raw logits, shape (batch, output_dim). Throws on inputs shorter than
// kMinInputLength or on a non-finite result.
Matrix forward(const ModelState& model, const Tensor1d& batch);
Matrix forward(const ModelState& model, const Tensor1d& batch, ForwardCache& cache);

enum class LossKind { BceWithLogits, Mse };

double bce_with_logits(const Matrix& logits, const Matrix& targets);
double mse_loss(const Matrix& pred, const Matrix& targets);

// Loss value plus d(loss)/d(parameter) for every parameter.
std::pair<double, ModelGrads> backward(const ModelState& model, const Tensor1d& batch,
                                       const Matrix& targets, LossKind loss_kind);

ModelGrads zero_grads(const ModelState& model);

// Checkpoint container: magic + version, length-prefixed JSON header
// (architecture, shapes, caller metadata), then binary64 LE tensor data.
void save_checkpoint(const std::filesystem::path& path, const ModelState& model,
                     const nlohmann::json& metadata);

struct Checkpoint {
    ModelState model;
    nlohmann::json metadata;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ppgbench
