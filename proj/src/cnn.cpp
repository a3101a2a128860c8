#include "emu/cnn.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <string>

#include "checkpoint_io.hpp"
#include "emu/errors.hpp"

namespace emu {

namespace {

constexpr std::string_view kCnnFormatLine = "format=cnn-ckpt-v1";

void check_params(const CnnParams& p) {
    for (const auto& k : p.kernels)
        if (k.rows() != kKernelSize || k.cols() != kKernelSize)
            throw ShapeError("CnnParams: kernels must be 2x2");
    if (p.dense_weights.size() != kKernelCount)
        throw ShapeError("CnnParams: dense_weights length must equal kernel count");
}

}  // namespace

CnnParams make_cnn_params() {
    CnnParams p;
    for (auto& k : p.kernels) k = Grid2D(kKernelSize, kKernelSize, 0.0);
    p.dense_weights.assign(kKernelCount, 0.0);
    return p;
}

CnnForwardCache cnn_forward(const CnnParams& params, const FeatureMap& input) {
    check_params(params);
    if (input.rows() != 3 || input.cols() != 3)
        throw ShapeError("cnn_forward: input map must be 3x3");

    CnnForwardCache cache;
    cache.params = params;
    cache.input = input;
    for (int j = 0; j < kKernelCount; ++j) {
        cache.conv_pre[j] = conv2d_valid(input, params.kernels[j], params.conv_biases[j]);
        cache.conv_act[j] = apply_activation(cache.conv_pre[j], params.conv_activation);
        const Grid2D pooled = pool(cache.conv_act[j], params.pool);
        if (pooled.rows() != 1 || pooled.cols() != 1)
            throw ShapeError("cnn_forward: pooling must reduce each map to one value");
        cache.pooled[j] = pooled.at(0, 0);
    }
    cache.dense_pre = params.dense_bias;
    for (int j = 0; j < kKernelCount; ++j)
        cache.dense_pre += params.dense_weights[j] * cache.pooled[j];
    cache.output = activate(params.dense_transfer, cache.dense_pre);
    return cache;
}

double cnn_loss(double prediction, double target) {
    const double d = prediction - target;
    return 0.5 * d * d;
}

CnnGradients cnn_backward(const CnnParams& params, const CnnForwardCache& cache,
                          double target) {
    if (!(cache.params == params))
        throw ValidationError("cnn_backward: cache is stale (params changed since forward)");
    if (params.pool.mode != PoolMode::average)
        throw ValidationError("cnn_backward: only average pooling is trainable");

    CnnGradients g;
    g.dense_weights.assign(kKernelCount, 0.0);
    for (auto& k : g.kernels) k = Grid2D(kKernelSize, kKernelSize, 0.0);

    // d(loss)/d(dense_pre) through the output transfer
    const double residual = cache.output - target;
    const double delta_out =
        residual * activate_derivative(params.dense_transfer, cache.dense_pre);

    g.dense_bias = delta_out;
    for (int j = 0; j < kKernelCount; ++j)
        g.dense_weights[j] = delta_out * cache.pooled[j];

    const double window_area =
        static_cast<double>(params.pool.window) * params.pool.window;
    for (int j = 0; j < kKernelCount; ++j) {
        const double delta_pooled = delta_out * params.dense_weights[j];
        const Grid2D& pre = cache.conv_pre[j];
        // average pooling spreads the delta uniformly over its window;
        // the activation then scales by its derivative at each cell
        double bias_grad = 0.0;
        for (int p = 0; p < pre.rows(); ++p) {
            for (int q = 0; q < pre.cols(); ++q) {
                const double delta_act = delta_pooled / window_area;
                const double delta_pre =
                    delta_act * activate_derivative(params.conv_activation, pre.at(p, q));
                bias_grad += delta_pre;
                for (int u = 0; u < kKernelSize; ++u)
                    for (int v = 0; v < kKernelSize; ++v)
                        g.kernels[j].at(u, v) += delta_pre * cache.input.at(p + u, q + v);
            }
        }
        g.conv_biases[j] = bias_grad;
    }
    return g;
}

CnnParams sgd_step(const CnnParams& params, const CnnGradients& grads,
                   double learning_rate) {
    auto check = [](double g, const std::string& name) {
        if (!std::isfinite(g))
            throw NumericError("sgd_step: non-finite gradient for " + name);
    };

    CnnParams next = params;
    for (int j = 0; j < kKernelCount; ++j) {
        for (int u = 0; u < kKernelSize; ++u) {
            for (int v = 0; v < kKernelSize; ++v) {
                check(grads.kernels[j].at(u, v), "kernel." + std::to_string(j) + ".row." +
                                                     std::to_string(u) + ".col." +
                                                     std::to_string(v));
                next.kernels[j].at(u, v) -= learning_rate * grads.kernels[j].at(u, v);
            }
        }
        check(grads.conv_biases[j], "conv_bias." + std::to_string(j));
        next.conv_biases[j] -= learning_rate * grads.conv_biases[j];
    }
    for (int j = 0; j < kKernelCount; ++j) {
        check(grads.dense_weights[j], "dense_w." + std::to_string(j));
        next.dense_weights[j] -= learning_rate * grads.dense_weights[j];
    }
    check(grads.dense_bias, "dense_b");
    next.dense_bias -= learning_rate * grads.dense_bias;
    return next;
}

namespace {

double epoch_mse(const CnnParams& params, std::span<const TrainingSample> samples) {
    double acc = 0.0;
    for (const auto& s : samples) {
        const double d = cnn_forward(params, s.input).output - s.target;
        acc += d * d;
    }
    return acc / static_cast<double>(samples.size());
}

}  // namespace

CnnTrainResult train_cnn(std::span<const TrainingSample> samples,
                         const TrainConfig& config) {
    if (samples.empty())
        throw ValidationError("train_cnn: no training samples");
    if (config.learning_rate < 0.0)
        throw DomainError("train_cnn: learning_rate must be >= 0");
    if (config.epochs < 0)
        throw DomainError("train_cnn: epochs must be >= 0");

    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> init(-config.init_scale, config.init_scale);

    CnnParams params = make_cnn_params();
    for (auto& kernel : params.kernels)
        for (double& w : kernel.values()) w = init(rng);
    for (double& b : params.conv_biases) b = init(rng);
    for (double& w : params.dense_weights) w = init(rng);
    params.dense_bias = init(rng);

    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    CnnTrainResult result;
    result.trace.reserve(static_cast<std::size_t>(config.epochs));
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        if (config.sample_order == SampleOrder::shuffled_per_epoch)
            std::shuffle(order.begin(), order.end(), rng);
        for (const std::size_t i : order) {
            const CnnForwardCache cache = cnn_forward(params, samples[i].input);
            const CnnGradients grads = cnn_backward(params, cache, samples[i].target);
            params = sgd_step(params, grads, config.learning_rate);
        }
        result.trace.push_back(epoch_mse(params, samples));
    }
    result.params = std::move(params);
    return result;
}

long long to_trains(double normalized_output, const ValueRange& target_range) {
    const double trains = denormalize(normalized_output, target_range);
    if (!std::isfinite(trains))
        throw NumericError("to_trains: non-finite prediction");
    return std::llround(trains);
}

std::vector<FleetPrediction> cnn_predict(const CnnParams& params,
                                         std::span<const YearRecord> records,
                                         const NormalizationSpec& spec) {
    std::vector<FleetPrediction> out;
    out.reserve(records.size());
    for (const auto& rec : records) {
        const FeatureMap input = assemble_feature_map(rec, spec);
        const double y = cnn_forward(params, input).output;
        out.push_back({rec.year, to_trains(y, spec.target)});
    }
    return out;
}

void save_checkpoint(const CnnParams& params, std::ostream& out) {
    check_params(params);
    std::string buf;
    buf.append(kCnnFormatLine);
    buf.push_back('\n');
    for (int j = 0; j < kKernelCount; ++j) {
        for (int r = 0; r < kKernelSize; ++r) {
            buf.append("kernel." + std::to_string(j) + ".row." + std::to_string(r) + "=");
            for (int c = 0; c < kKernelSize; ++c) {
                buf.push_back(' ');
                detail::append_real17(buf, params.kernels[j].at(r, c));
            }
            buf.push_back('\n');
        }
    }
    for (int j = 0; j < kKernelCount; ++j) {
        buf.append("conv_bias." + std::to_string(j) + "= ");
        detail::append_real17(buf, params.conv_biases[j]);
        buf.push_back('\n');
    }
    buf.append("dense_w=");
    for (const double w : params.dense_weights) {
        buf.push_back(' ');
        detail::append_real17(buf, w);
    }
    buf.push_back('\n');
    buf.append("dense_b= ");
    detail::append_real17(buf, params.dense_bias);
    buf.push_back('\n');
    buf.append("conv_act=").append(to_string(params.conv_activation));
    buf.push_back('\n');
    buf.append("dense_act=").append(to_string(params.dense_transfer));
    buf.push_back('\n');
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

CnnParams load_cnn_checkpoint(std::istream& in) {
    detail::CkptReader reader{in};
    const std::string header = reader.next_line();
    if (header != kCnnFormatLine)
        throw ParseError("line 1: expected '" + std::string(kCnnFormatLine) + "', got '" +
                         header + "'");

    CnnParams params = make_cnn_params();
    for (int j = 0; j < kKernelCount; ++j) {
        for (int r = 0; r < kKernelSize; ++r) {
            const auto vals = reader.values_line(
                "kernel." + std::to_string(j) + ".row." + std::to_string(r), kKernelSize);
            for (int c = 0; c < kKernelSize; ++c) params.kernels[j].at(r, c) = vals[c];
        }
    }
    for (int j = 0; j < kKernelCount; ++j)
        params.conv_biases[j] = reader.values_line("conv_bias." + std::to_string(j), 1)[0];
    const auto dense = reader.values_line("dense_w", kKernelCount);
    std::copy(dense.begin(), dense.end(), params.dense_weights.begin());
    params.dense_bias = reader.values_line("dense_b", 1)[0];
    params.conv_activation = activation_from_string(reader.text_line("conv_act"));
    params.dense_transfer = activation_from_string(reader.text_line("dense_act"));
    return params;
}

}  // namespace emu
