#pragma once

#include "jess/neural/kernels.hpp"
#include "jess/neural/tensor.hpp"
#include "jess/rng.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace jess::neural {

// Fixed hourglass geometry: conv(k5 s3) from in_channels to 8, dense 32 then
// 128, transposed conv back out. With time_len 50 the conv output length is
// 16 and the flattened size 8*16 = 128 = fc2.
struct HourglassConfig {
    int in_channels = 1;
    int out_channels = 1;
    int conv_channels = 8;
    int kernel = 5;
    int stride = 3;
    int time_len = 50;
    int fc1 = 32;
    int fc2 = 128;
    bool second_batchnorm = true; // conv -> BN -> ReLU -> BN when true

    int conv_out_len() const { return (time_len - kernel) / stride + 1; }
    int flatten_size() const { return conv_channels * conv_out_len(); }

    void validate() const;

    nlohmann::json to_json() const;
    static HourglassConfig from_json(const nlohmann::json& j);
};

struct ModelWeights {
    Tensor conv_w, conv_b;
    Tensor bn1_gamma, bn1_beta, bn1_mean, bn1_var;
    Tensor bn2_gamma, bn2_beta, bn2_mean, bn2_var;
    Tensor fc1_w, fc1_b;
    Tensor fc2_w, fc2_b;
    Tensor tconv_w, tconv_b;

    static ModelWeights init(const HourglassConfig& cfg, Rng& rng);

    // Trainable parameters, fixed order (running statistics excluded).
    std::vector<Tensor*> params();
    std::vector<const Tensor*> params() const;

    // Every field in serialization order.
    std::vector<const Tensor*> fields() const;
    std::vector<Tensor*> fields();

    void validate_shapes(const HourglassConfig& cfg) const;
};

enum class Mode { Train, Infer };

// Intermediate activations kept for the backward pass.
struct ForwardCache {
    Tensor x;
    Tensor conv_out;
    Tensor bn1_out, bn1_mean, bn1_var;
    Tensor relu1_out;
    Tensor bn2_out, bn2_mean, bn2_var;
    Tensor fc1_out, relu2_out;
    Tensor fc2_out, relu3_out;
    Tensor tconv_out;
    Tensor sigmoid_out;
};

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

// x: (B, in_channels, time_len) -> (B, out_channels, time_len).
// Train mode normalizes with batch statistics; infer mode uses the stored
// running statistics. The forward pass itself never mutates the weights.
Tensor hourglass_forward(const HourglassConfig& cfg, const ModelWeights& w, const Tensor& x,
                         Mode mode, ForwardCache* cache = nullptr);

// Momentum update of the running batch-norm statistics from a train-mode
// forward cache.
void update_running_stats(const HourglassConfig& cfg, ModelWeights& w, const ForwardCache& cache);

// Gradients of 0.5-free MSE-style upstream gy w.r.t. every trainable
// parameter (order of ModelWeights::params()); optionally w.r.t. the input.
std::vector<Tensor> hourglass_backward(const HourglassConfig& cfg, const ModelWeights& w,
                                       const ForwardCache& cache, const Tensor& gy,
                                       Tensor* gx = nullptr);

struct AdamState {
    double lr = 5e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int64_t step = 0;
    std::vector<Tensor> m, v;

    static AdamState for_weights(const ModelWeights& w, double lr);
};

void adam_update(AdamState& adam, std::vector<Tensor*> params, const std::vector<Tensor>& grads);

double mse_loss(const Tensor& pred, const Tensor& target);

// One forward/backward/Adam update; returns the batch MSE before the update.
// Throws DivergenceError when the loss is not finite.
double train_step(const HourglassConfig& cfg, ModelWeights& w, AdamState& adam,
                  const Tensor& batch_x, const Tensor& batch_y);

// On-disk model format: magic "JESSW001", u32 little-endian length of a UTF-8
// JSON metadata block (which includes the config), then each field of
// ModelWeights as raw little-endian float32 in declaration order.
inline constexpr char kWeightsMagic[8] = {'J', 'E', 'S', 'S', 'W', '0', '0', '1'};

struct LoadedModel {
    nlohmann::json meta;
    HourglassConfig config;
    ModelWeights weights;
};

void save_weights(const std::filesystem::path& path, const nlohmann::json& meta,
                  const HourglassConfig& cfg, const ModelWeights& w);
LoadedModel load_weights(const std::filesystem::path& path);

} // namespace jess::neural
