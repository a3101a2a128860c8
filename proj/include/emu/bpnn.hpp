#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <vector>

#include "emu/cnn.hpp"
#include "emu/dataset.hpp"
#include "emu/training.hpp"

namespace emu {

inline constexpr int kMlpInputs = 9;
inline constexpr int kMlpHidden = 8;

/// The fully connected baseline: 9 inputs, 8 sigmoid hidden units, one
/// linear output.
struct MlpParams {
    std::array<std::array<double, kMlpInputs>, kMlpHidden> w_hidden{};
    std::array<double, kMlpHidden> b_hidden{};
    std::array<double, kMlpHidden> w_out{};
    double b_out = 0.0;
    Activation hidden_activation = Activation::sigmoid;
    Activation out_transfer = Activation::linear;

    bool operator==(const MlpParams&) const = default;
};

struct MlpSample {
    std::array<double, kMlpInputs> input{};  // normalized indices
    double target = 0.0;                     // normalized fleet size
    int year = 0;
};

struct MlpForwardCache {
    std::array<double, kMlpInputs> input{};
    std::array<double, kMlpHidden> hidden_pre{};
    std::array<double, kMlpHidden> hidden_act{};
    double out_pre = 0.0;
    double output = 0.0;
};

MlpForwardCache mlp_forward(const MlpParams& params, std::span<const double> input);

struct MlpGradients {
    std::array<std::array<double, kMlpInputs>, kMlpHidden> w_hidden{};
    std::array<double, kMlpHidden> b_hidden{};
    std::array<double, kMlpHidden> w_out{};
    double b_out = 0.0;
};

/// Mean over the batch of the per-sample losses 0.5*(p-a)^2. The batch
/// update descends on this quantity (= half the epoch MSE).
double mlp_batch_loss(const MlpParams& params, std::span<const MlpSample> samples);

/// Analytic gradient of mlp_batch_loss.
MlpGradients mlp_batch_gradient(const MlpParams& params,
                                std::span<const MlpSample> samples);

/// Epoch MSE: mean of (p-a)^2 over the samples.
double mlp_mse(const MlpParams& params, std::span<const MlpSample> samples);

enum class UpdateMode { batch, per_sample };

struct MlpTrainResult {
    MlpParams params;
    MseTrace trace;
};

/// Gradient descent training. In batch mode every epoch applies one update
/// with the averaged gradient; per_sample mode updates after each sample.
MlpTrainResult train_bpnn(std::span<const MlpSample> samples,
                          const TrainConfig& config,
                          UpdateMode mode = UpdateMode::batch);

std::vector<FleetPrediction> mlp_predict(const MlpParams& params,
                                         std::span<const YearRecord> records,
                                         const NormalizationSpec& spec);

/// Checkpoint ("format=mlp-ckpt-v1") mirroring the cnn layout.
void save_checkpoint(const MlpParams& params, std::ostream& out);
MlpParams load_mlp_checkpoint(std::istream& in);

}  // namespace emu
