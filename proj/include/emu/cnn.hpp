#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <vector>

#include "emu/dataset.hpp"
#include "emu/netcore.hpp"
#include "emu/training.hpp"

namespace emu {

inline constexpr int kKernelCount = 3;
inline constexpr int kKernelSize = 2;

/// The small convolutional network: one 3x3 input map, three 2x2 kernels
/// with sigmoid activation, bias-free 2x2 average pooling down to one value
/// per kernel, and a dense layer from the pooled triple to one output.
struct CnnParams {
    std::array<Grid2D, kKernelCount> kernels;  // each kKernelSize x kKernelSize
    std::array<double, kKernelCount> conv_biases{};
    Activation conv_activation = Activation::sigmoid;
    PoolSpec pool{};
    std::vector<double> dense_weights;  // one weight per pooled map
    double dense_bias = 0.0;
    Activation dense_transfer = Activation::linear;

    bool operator==(const CnnParams&) const = default;
};

/// Zero-valued parameters with the canonical shapes.
CnnParams make_cnn_params();

struct TrainingSample {
    FeatureMap input;     // 3x3, normalized
    double target = 0.0;  // normalized fleet size
    int year = 0;
};

struct CnnForwardCache {
    CnnParams params;  // snapshot of the params used; backward rejects stale caches
    FeatureMap input;
    std::array<Grid2D, kKernelCount> conv_pre;   // pre-activation conv maps
    std::array<Grid2D, kKernelCount> conv_act;   // after activation
    std::array<double, kKernelCount> pooled{};   // the flattened vector z
    double dense_pre = 0.0;
    double output = 0.0;
};

struct CnnGradients {
    std::array<Grid2D, kKernelCount> kernels;
    std::array<double, kKernelCount> conv_biases{};
    std::vector<double> dense_weights;
    double dense_bias = 0.0;
};

CnnForwardCache cnn_forward(const CnnParams& params, const FeatureMap& input);

/// Per-sample loss: 0.5 * (prediction - target)^2.
double cnn_loss(double prediction, double target);

/// Analytic gradients of cnn_loss w.r.t. every parameter. The cache must
/// come from cnn_forward with exactly these params.
CnnGradients cnn_backward(const CnnParams& params, const CnnForwardCache& cache,
                          double target);

/// p <- p - learning_rate * g for every parameter; returns the new params.
CnnParams sgd_step(const CnnParams& params, const CnnGradients& grads,
                   double learning_rate);

struct CnnTrainResult {
    CnnParams params;
    MseTrace trace;
};

/// Per-sample stochastic gradient descent: within each epoch, every sample
/// triggers forward, backward and an immediate parameter update.
CnnTrainResult train_cnn(std::span<const TrainingSample> samples,
                         const TrainConfig& config);

struct FleetPrediction {
    int year = 0;
    long long trains = 0;

    bool operator==(const FleetPrediction&) const = default;
};

/// Denormalized network output rounded half away from zero to whole trains.
long long to_trains(double normalized_output, const ValueRange& target_range);

std::vector<FleetPrediction> cnn_predict(const CnnParams& params,
                                         std::span<const YearRecord> records,
                                         const NormalizationSpec& spec);

/// Line-based checkpoint ("format=cnn-ckpt-v1"), reals at 17 significant
/// digits so load(save(p)) == p bit-exactly.
void save_checkpoint(const CnnParams& params, std::ostream& out);
CnnParams load_cnn_checkpoint(std::istream& in);

}  // namespace emu
