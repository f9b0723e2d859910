#include "ppgbench/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "ppgbench/errors.hpp"

namespace ppgbench {

namespace {

constexpr int kConv1Ch = 16;
constexpr int kConv2Ch = 32;
constexpr int kKernel = 7;
constexpr int kHidden = 64;
constexpr int kPool = 4;

void check_finite(const double* data, std::size_t n, const char* what) {
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(data[i]))
            throw RuntimeAbort(std::string("non-finite value in ") + what);
    }
}

// y[b,oc,t] = bias[oc] + sum_{ic,k} w[oc,ic,k] * x[b,ic,t+k-pad]
void conv1d_same(const ConvLayer& layer, const Tensor1d& x, Tensor1d& y) {
    const int pad = (layer.kernel - 1) / 2;
    const auto L = static_cast<std::ptrdiff_t>(x.length);
    for (std::size_t b = 0; b < x.batch; ++b) {
        for (int oc = 0; oc < layer.out_ch; ++oc) {
            double* out = y.row(b, static_cast<std::size_t>(oc));
            std::fill(out, out + L, layer.bias[static_cast<std::size_t>(oc)]);
            for (int ic = 0; ic < layer.in_ch; ++ic) {
                const double* in = x.row(b, static_cast<std::size_t>(ic));
                const double* w =
                    layer.weight.data() + (static_cast<std::size_t>(oc) * layer.in_ch + ic) * layer.kernel;
                for (int k = 0; k < layer.kernel; ++k) {
                    const std::ptrdiff_t shift = k - pad;
                    const std::ptrdiff_t t0 = std::max<std::ptrdiff_t>(0, -shift);
                    const std::ptrdiff_t t1 = std::min<std::ptrdiff_t>(L, L - shift);
                    const double wk = w[k];
                    const double* src = in + shift;
                    for (std::ptrdiff_t t = t0; t < t1; ++t) out[t] += wk * src[t];
                }
            }
        }
    }
}

// dW[oc,ic,k] = sum_{b,t} dy[b,oc,t] * x[b,ic,t+k-pad];  db[oc] = sum dy
// dx[b,ic,t+k-pad] += w[oc,ic,k] * dy[b,oc,t]   (skipped when dx == nullptr)
void conv1d_same_backward(const ConvLayer& layer, const Tensor1d& x, const Tensor1d& dy,
                          ConvLayer& dlayer, Tensor1d* dx) {
    const int pad = (layer.kernel - 1) / 2;
    const auto L = static_cast<std::ptrdiff_t>(x.length);
    for (std::size_t b = 0; b < x.batch; ++b) {
        for (int oc = 0; oc < layer.out_ch; ++oc) {
            const double* g = dy.row(b, static_cast<std::size_t>(oc));
            double gsum = 0.0;
            for (std::ptrdiff_t t = 0; t < L; ++t) gsum += g[t];
            dlayer.bias[static_cast<std::size_t>(oc)] += gsum;
            for (int ic = 0; ic < layer.in_ch; ++ic) {
                const double* in = x.row(b, static_cast<std::size_t>(ic));
                const std::size_t wbase =
                    (static_cast<std::size_t>(oc) * layer.in_ch + ic) * layer.kernel;
                for (int k = 0; k < layer.kernel; ++k) {
                    const std::ptrdiff_t shift = k - pad;
                    const std::ptrdiff_t t0 = std::max<std::ptrdiff_t>(0, -shift);
                    const std::ptrdiff_t t1 = std::min<std::ptrdiff_t>(L, L - shift);
                    const double* src = in + shift;
                    double acc = 0.0;
                    for (std::ptrdiff_t t = t0; t < t1; ++t) acc += g[t] * src[t];
                    dlayer.weight[wbase + static_cast<std::size_t>(k)] += acc;
                }
                if (dx) {
                    double* dst = dx->row(b, static_cast<std::size_t>(ic));
                    for (int k = 0; k < layer.kernel; ++k) {
                        const std::ptrdiff_t shift = k - pad;
                        const std::ptrdiff_t t0 = std::max<std::ptrdiff_t>(0, -shift);
                        const std::ptrdiff_t t1 = std::min<std::ptrdiff_t>(L, L - shift);
                        const double wk = layer.weight[wbase + static_cast<std::size_t>(k)];
                        for (std::ptrdiff_t t = t0; t < t1; ++t) dst[t + shift] += wk * g[t];
                    }
                }
            }
        }
    }
}

void relu_inplace(Tensor1d& x) {
    for (double& v : x.data) v = v > 0.0 ? v : 0.0;
}

void maxpool4(const Tensor1d& x, Tensor1d& y, std::vector<std::size_t>& argmax) {
    const std::size_t out_len = x.length / kPool;
    argmax.resize(x.batch * x.channels * out_len);
    std::size_t ai = 0;
    for (std::size_t b = 0; b < x.batch; ++b) {
        for (std::size_t c = 0; c < x.channels; ++c) {
            const double* in = x.row(b, c);
            double* out = y.row(b, c);
            for (std::size_t j = 0; j < out_len; ++j) {
                std::size_t best = j * kPool;
                double best_v = in[best];
                for (std::size_t k = 1; k < kPool; ++k) {
                    if (in[j * kPool + k] > best_v) {
                        best_v = in[j * kPool + k];
                        best = j * kPool + k;
                    }
                }
                out[j] = best_v;
                argmax[ai++] = best;
            }
        }
    }
}

void maxpool4_backward(const Tensor1d& dy, const std::vector<std::size_t>& argmax, Tensor1d& dx) {
    std::size_t ai = 0;
    for (std::size_t b = 0; b < dy.batch; ++b) {
        for (std::size_t c = 0; c < dy.channels; ++c) {
            const double* g = dy.row(b, c);
            double* dst = dx.row(b, c);
            for (std::size_t j = 0; j < dy.length; ++j) dst[argmax[ai++]] += g[j];
        }
    }
}

void dense_forward(const DenseLayer& layer, const Matrix& x, Matrix& y) {
    for (std::size_t b = 0; b < x.rows; ++b) {
        for (int o = 0; o < layer.out_f; ++o) {
            const double* w = layer.weight.data() + static_cast<std::size_t>(o) * layer.in_f;
            double acc = layer.bias[static_cast<std::size_t>(o)];
            const double* in = x.data.data() + b * x.cols;
            for (int i = 0; i < layer.in_f; ++i) acc += w[i] * in[i];
            y.at(b, static_cast<std::size_t>(o)) = acc;
        }
    }
}

void dense_backward(const DenseLayer& layer, const Matrix& x, const Matrix& dy, DenseLayer& dlayer,
                    Matrix& dx) {
    for (std::size_t b = 0; b < x.rows; ++b) {
        const double* in = x.data.data() + b * x.cols;
        double* din = dx.data.data() + b * dx.cols;
        for (int o = 0; o < layer.out_f; ++o) {
            const double g = dy.at(b, static_cast<std::size_t>(o));
            dlayer.bias[static_cast<std::size_t>(o)] += g;
            double* dw = dlayer.weight.data() + static_cast<std::size_t>(o) * layer.in_f;
            const double* w = layer.weight.data() + static_cast<std::size_t>(o) * layer.in_f;
            for (int i = 0; i < layer.in_f; ++i) {
                dw[i] += g * in[i];
                din[i] += g * w[i];
            }
        }
    }
}

Matrix forward_impl(const ModelState& model, const Tensor1d& batch, ForwardCache* cache) {
    if (model.architecture != kArchitectureId)
        throw ValidationError("unknown architecture '" + model.architecture + "'");
    if (batch.channels != 1) throw ValidationError("forward: expected single-channel input");
    if (batch.length < kMinInputLength)
        throw ValidationError("forward: input length " + std::to_string(batch.length) +
                              " below minimum " + std::to_string(kMinInputLength));
    // ReLU would silently zero a NaN, so catch the entry points here.
    check_finite(batch.data.data(), batch.data.size(), "input batch");
    for_each_param(const_cast<ModelState&>(model), [](const char* name, std::vector<double>& w) {
        check_finite(w.data(), w.size(), name);
    });

    ForwardCache local;
    ForwardCache& c = cache ? *cache : local;

    const std::size_t B = batch.batch;
    const std::size_t L = batch.length;
    const std::size_t L1 = L / kPool;
    const std::size_t L2 = L1 / kPool;

    c.h1 = Tensor1d(B, static_cast<std::size_t>(kConv1Ch), L);
    conv1d_same(model.conv1, batch, c.h1);
    relu_inplace(c.h1);
    c.p1 = Tensor1d(B, static_cast<std::size_t>(kConv1Ch), L1);
    maxpool4(c.h1, c.p1, c.argmax1);

    c.h2 = Tensor1d(B, static_cast<std::size_t>(kConv2Ch), L1);
    conv1d_same(model.conv2, c.p1, c.h2);
    relu_inplace(c.h2);
    c.p2 = Tensor1d(B, static_cast<std::size_t>(kConv2Ch), L2);
    maxpool4(c.h2, c.p2, c.argmax2);

    c.gap = Matrix(B, static_cast<std::size_t>(kConv2Ch));
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t ch = 0; ch < static_cast<std::size_t>(kConv2Ch); ++ch) {
            const double* in = c.p2.row(b, ch);
            double acc = 0.0;
            for (std::size_t t = 0; t < L2; ++t) acc += in[t];
            c.gap.at(b, ch) = acc / static_cast<double>(L2);
        }
    }

    c.hidden = Matrix(B, static_cast<std::size_t>(kHidden));
    dense_forward(model.fc1, c.gap, c.hidden);
    for (double& v : c.hidden.data) v = v > 0.0 ? v : 0.0;

    Matrix logits(B, static_cast<std::size_t>(model.output_dim));
    dense_forward(model.fc2, c.hidden, logits);
    check_finite(logits.data.data(), logits.data.size(), "logits");
    return logits;
}

}  // namespace

ModelState init_model(int output_dim, std::uint64_t seed) {
    if (output_dim < 1) throw ValidationError("init_model: output_dim must be >= 1");
    std::mt19937_64 engine(seed);
    auto uniform_pm = [&engine](double scale) {
        const double u = static_cast<double>(engine() >> 11) * 0x1.0p-53;  // [0,1)
        return (2.0 * u - 1.0) * scale;
    };
    auto fill = [&uniform_pm](std::vector<double>& w, int fan_in) {
        const double scale = std::sqrt(1.0 / static_cast<double>(fan_in));
        for (double& v : w) v = uniform_pm(scale);
    };

    ModelState m;
    m.output_dim = output_dim;
    m.conv1 = {kConv1Ch, 1, kKernel, std::vector<double>(kConv1Ch * 1 * kKernel),
               std::vector<double>(kConv1Ch, 0.0)};
    fill(m.conv1.weight, 1 * kKernel);
    m.conv2 = {kConv2Ch, kConv1Ch, kKernel, std::vector<double>(kConv2Ch * kConv1Ch * kKernel),
               std::vector<double>(kConv2Ch, 0.0)};
    fill(m.conv2.weight, kConv1Ch * kKernel);
    m.fc1 = {kHidden, kConv2Ch, std::vector<double>(static_cast<std::size_t>(kHidden) * kConv2Ch),
             std::vector<double>(kHidden, 0.0)};
    fill(m.fc1.weight, kConv2Ch);
    m.fc2 = {output_dim, kHidden, std::vector<double>(static_cast<std::size_t>(output_dim) * kHidden),
             std::vector<double>(static_cast<std::size_t>(output_dim), 0.0)};
    fill(m.fc2.weight, kHidden);
    m.output_offset.assign(static_cast<std::size_t>(output_dim), 0.0);
    m.output_scale.assign(static_cast<std::size_t>(output_dim), 1.0);
    return m;
}

Matrix forward(const ModelState& model, const Tensor1d& batch) { return forward_impl(model, batch, nullptr); }

Matrix forward(const ModelState& model, const Tensor1d& batch, ForwardCache& cache) {
    return forward_impl(model, batch, &cache);
}

double bce_with_logits(const Matrix& logits, const Matrix& targets) {
    if (logits.rows != targets.rows || logits.cols != targets.cols)
        throw ValidationError("bce_with_logits: shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < logits.data.size(); ++i) {
        const double z = logits.data[i];
        const double t = targets.data[i];
        acc += std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::abs(z)));
    }
    return acc / static_cast<double>(logits.data.size());
}

double mse_loss(const Matrix& pred, const Matrix& targets) {
    if (pred.rows != targets.rows || pred.cols != targets.cols)
        throw ValidationError("mse_loss: shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const double d = pred.data[i] - targets.data[i];
        acc += d * d;
    }
    return acc / static_cast<double>(pred.data.size());
}

ModelGrads zero_grads(const ModelState& model) {
    ModelGrads g = model;
    for_each_param(g, [](const char*, std::vector<double>& w) { std::fill(w.begin(), w.end(), 0.0); });
    return g;
}

std::pair<double, ModelGrads> backward(const ModelState& model, const Tensor1d& batch,
                                       const Matrix& targets, LossKind loss_kind) {
    ForwardCache cache;
    const Matrix logits = forward(model, batch, cache);
    if (logits.rows != targets.rows || logits.cols != targets.cols)
        throw ValidationError("backward: target shape mismatch");

    const double n_elem = static_cast<double>(logits.data.size());
    double loss = 0.0;
    Matrix dlogits(logits.rows, logits.cols);
    if (loss_kind == LossKind::BceWithLogits) {
        loss = bce_with_logits(logits, targets);
        for (std::size_t i = 0; i < logits.data.size(); ++i) {
            const double sig = 1.0 / (1.0 + std::exp(-logits.data[i]));
            dlogits.data[i] = (sig - targets.data[i]) / n_elem;
        }
    } else {
        loss = mse_loss(logits, targets);
        for (std::size_t i = 0; i < logits.data.size(); ++i)
            dlogits.data[i] = 2.0 * (logits.data[i] - targets.data[i]) / n_elem;
    }
    if (!std::isfinite(loss)) throw RuntimeAbort("non-finite loss");

    ModelGrads grads = zero_grads(model);
    const std::size_t B = batch.batch;
    const std::size_t L = batch.length;
    const std::size_t L1 = L / kPool;
    const std::size_t L2 = L1 / kPool;

    // dense2
    Matrix dhidden(B, static_cast<std::size_t>(kHidden));
    dense_backward(model.fc2, cache.hidden, dlogits, grads.fc2, dhidden);
    for (std::size_t i = 0; i < dhidden.data.size(); ++i)
        if (cache.hidden.data[i] <= 0.0) dhidden.data[i] = 0.0;

    // dense1
    Matrix dgap(B, static_cast<std::size_t>(kConv2Ch));
    dense_backward(model.fc1, cache.gap, dhidden, grads.fc1, dgap);

    // global average pool
    Tensor1d dp2(B, static_cast<std::size_t>(kConv2Ch), L2);
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t ch = 0; ch < static_cast<std::size_t>(kConv2Ch); ++ch) {
            const double g = dgap.at(b, ch) / static_cast<double>(L2);
            double* dst = dp2.row(b, ch);
            for (std::size_t t = 0; t < L2; ++t) dst[t] = g;
        }
    }

    // pool2 + relu2
    Tensor1d dh2(B, static_cast<std::size_t>(kConv2Ch), L1);
    maxpool4_backward(dp2, cache.argmax2, dh2);
    for (std::size_t i = 0; i < dh2.data.size(); ++i)
        if (cache.h2.data[i] <= 0.0) dh2.data[i] = 0.0;

    // conv2
    Tensor1d dp1(B, static_cast<std::size_t>(kConv1Ch), L1);
    conv1d_same_backward(model.conv2, cache.p1, dh2, grads.conv2, &dp1);

    // pool1 + relu1
    Tensor1d dh1(B, static_cast<std::size_t>(kConv1Ch), L);
    maxpool4_backward(dp1, cache.argmax1, dh1);
    for (std::size_t i = 0; i < dh1.data.size(); ++i)
        if (cache.h1.data[i] <= 0.0) dh1.data[i] = 0.0;

    // conv1; the input gradient is never needed
    conv1d_same_backward(model.conv1, batch, dh1, grads.conv1, nullptr);

    for_each_param(grads, [](const char* name, std::vector<double>& w) {
        check_finite(w.data(), w.size(), name);
    });
    return {loss, std::move(grads)};
}

namespace {

constexpr char kMagic[8] = {'P', 'P', 'G', 'B', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kCheckpointVersion = 1;

static_assert(sizeof(double) == 8);

void swap_if_big_endian(std::vector<double>& values) {
    if constexpr (std::endian::native == std::endian::big) {
        for (double& v : values) {
            std::uint64_t bits;
            std::memcpy(&bits, &v, 8);
            bits = __builtin_bswap64(bits);
            std::memcpy(&v, &bits, 8);
        }
    }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelState& model,
                     const nlohmann::json& metadata) {
    nlohmann::json header;
    header["format_version"] = kCheckpointVersion;
    header["architecture"] = model.architecture;
    header["output_dim"] = model.output_dim;
    header["output_offset"] = model.output_offset;
    header["output_scale"] = model.output_scale;
    header["metadata"] = metadata;
    nlohmann::json tensors = nlohmann::json::array();
    for_each_param(const_cast<ModelState&>(model), [&tensors](const char* name, std::vector<double>& w) {
        tensors.push_back({{"name", name}, {"size", w.size()}});
    });
    header["tensors"] = tensors;
    const std::string header_text = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw RuntimeAbort("cannot open checkpoint for writing: " + path.string());
    out.write(kMagic, sizeof(kMagic));
    const std::uint32_t version = kCheckpointVersion;
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    const std::uint64_t header_len = header_text.size();
    out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
    out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
    for_each_param(const_cast<ModelState&>(model), [&out](const char*, std::vector<double>& w) {
        std::vector<double> wire = w;
        swap_if_big_endian(wire);
        out.write(reinterpret_cast<const char*>(wire.data()), static_cast<std::streamsize>(wire.size() * 8));
    });
    if (!out.good()) throw RuntimeAbort("I/O failure writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open checkpoint: " + path.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw ValidationError("not a checkpoint file: " + path.string());
    std::uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (version != kCheckpointVersion)
        throw ValidationError("unsupported checkpoint version " + std::to_string(version));
    std::uint64_t header_len = 0;
    in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
    std::string header_text(header_len, '\0');
    in.read(header_text.data(), static_cast<std::streamsize>(header_len));
    if (!in) throw ValidationError("truncated checkpoint header: " + path.string());

    nlohmann::json header = nlohmann::json::parse(header_text);
    Checkpoint ckpt;
    ckpt.metadata = header.value("metadata", nlohmann::json::object());
    const std::string arch = header.value("architecture", "");
    if (arch != kArchitectureId)
        throw ValidationError("checkpoint architecture '" + arch + "' not supported");
    const int output_dim = header.value("output_dim", 0);
    ckpt.model = init_model(output_dim, 0);
    if (header.contains("output_offset"))
        ckpt.model.output_offset = header["output_offset"].get<std::vector<double>>();
    if (header.contains("output_scale"))
        ckpt.model.output_scale = header["output_scale"].get<std::vector<double>>();
    if (ckpt.model.output_offset.size() != static_cast<std::size_t>(output_dim) ||
        ckpt.model.output_scale.size() != static_cast<std::size_t>(output_dim))
        throw ValidationError("checkpoint output head size mismatch");

    std::size_t tensor_idx = 0;
    const auto& tensors = header["tensors"];
    for_each_param(ckpt.model, [&](const char* name, std::vector<double>& w) {
        if (tensor_idx >= tensors.size())
            throw ValidationError("checkpoint missing tensor '" + std::string(name) + "'");
        const auto& entry = tensors[tensor_idx++];
        if (entry.value("name", "") != name || entry.value("size", std::size_t{0}) != w.size())
            throw ValidationError("checkpoint tensor mismatch at '" + std::string(name) + "'");
        in.read(reinterpret_cast<char*>(w.data()), static_cast<std::streamsize>(w.size() * 8));
        swap_if_big_endian(w);
    });
    if (!in) throw ValidationError("truncated checkpoint data: " + path.string());
    return ckpt;
}

}  // namespace ppgbench
