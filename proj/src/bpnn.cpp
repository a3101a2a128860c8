#include "emu/bpnn.hpp"

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

constexpr std::string_view kMlpFormatLine = "format=mlp-ckpt-v1";

}  // namespace

MlpForwardCache mlp_forward(const MlpParams& params, std::span<const double> input) {
    if (input.size() != kMlpInputs)
        throw ShapeError("mlp_forward: input length must be " + std::to_string(kMlpInputs));

    MlpForwardCache cache;
    std::copy(input.begin(), input.end(), cache.input.begin());
    for (int h = 0; h < kMlpHidden; ++h) {
        double acc = params.b_hidden[h];
        for (int i = 0; i < kMlpInputs; ++i) acc += params.w_hidden[h][i] * input[i];
        cache.hidden_pre[h] = acc;
        cache.hidden_act[h] = activate(params.hidden_activation, acc);
    }
    cache.out_pre = params.b_out;
    for (int h = 0; h < kMlpHidden; ++h)
        cache.out_pre += params.w_out[h] * cache.hidden_act[h];
    cache.output = activate(params.out_transfer, cache.out_pre);
    return cache;
}

double mlp_batch_loss(const MlpParams& params, std::span<const MlpSample> samples) {
    if (samples.empty())
        throw ValidationError("mlp_batch_loss: no samples");
    double acc = 0.0;
    for (const auto& s : samples)
        acc += cnn_loss(mlp_forward(params, s.input).output, s.target);
    return acc / static_cast<double>(samples.size());
}

double mlp_mse(const MlpParams& params, std::span<const MlpSample> samples) {
    if (samples.empty())
        throw ValidationError("mlp_mse: no samples");
    double acc = 0.0;
    for (const auto& s : samples) {
        const double d = mlp_forward(params, s.input).output - s.target;
        acc += d * d;
    }
    return acc / static_cast<double>(samples.size());
}

namespace {

// Gradient of cnn_loss(output, target) for one sample, accumulated into g
// with the given weight.
void accumulate_sample_gradient(const MlpParams& params, const MlpForwardCache& cache,
                                double target, double weight, MlpGradients& g) {
    const double residual = cache.output - target;
    const double delta_out =
        weight * residual * activate_derivative(params.out_transfer, cache.out_pre);

    g.b_out += delta_out;
    for (int h = 0; h < kMlpHidden; ++h) {
        g.w_out[h] += delta_out * cache.hidden_act[h];
        const double delta_hidden =
            delta_out * params.w_out[h] *
            activate_derivative(params.hidden_activation, cache.hidden_pre[h]);
        g.b_hidden[h] += delta_hidden;
        for (int i = 0; i < kMlpInputs; ++i)
            g.w_hidden[h][i] += delta_hidden * cache.input[i];
    }
}

void apply_step(MlpParams& params, const MlpGradients& g, double lr) {
    auto check = [](double v, const std::string& name) {
        if (!std::isfinite(v))
            throw NumericError("train_bpnn: non-finite gradient for " + name);
    };
    for (int h = 0; h < kMlpHidden; ++h) {
        for (int i = 0; i < kMlpInputs; ++i) {
            check(g.w_hidden[h][i],
                  "w_hidden.row." + std::to_string(h) + ".col." + std::to_string(i));
            params.w_hidden[h][i] -= lr * g.w_hidden[h][i];
        }
        check(g.b_hidden[h], "b_hidden." + std::to_string(h));
        params.b_hidden[h] -= lr * g.b_hidden[h];
        check(g.w_out[h], "w_out." + std::to_string(h));
        params.w_out[h] -= lr * g.w_out[h];
    }
    check(g.b_out, "b_out");
    params.b_out -= lr * g.b_out;
}

}  // namespace

MlpGradients mlp_batch_gradient(const MlpParams& params,
                                std::span<const MlpSample> samples) {
    if (samples.empty())
        throw ValidationError("mlp_batch_gradient: no samples");
    MlpGradients g;
    const double weight = 1.0 / static_cast<double>(samples.size());
    for (const auto& s : samples) {
        const MlpForwardCache cache = mlp_forward(params, s.input);
        accumulate_sample_gradient(params, cache, s.target, weight, g);
    }
    return g;
}

MlpTrainResult train_bpnn(std::span<const MlpSample> samples, const TrainConfig& config,
                          UpdateMode mode) {
    if (samples.empty())
        throw ValidationError("train_bpnn: no training samples");
    if (config.learning_rate < 0.0)
        throw DomainError("train_bpnn: learning_rate must be >= 0");
    if (config.epochs < 0)
        throw DomainError("train_bpnn: epochs must be >= 0");

    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> init(-config.init_scale, config.init_scale);

    MlpParams params;
    for (auto& row : params.w_hidden)
        for (double& w : row) w = init(rng);
    for (double& b : params.b_hidden) b = init(rng);
    for (double& w : params.w_out) w = init(rng);
    params.b_out = init(rng);

    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    MlpTrainResult result;
    result.trace.reserve(static_cast<std::size_t>(config.epochs));
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        if (config.sample_order == SampleOrder::shuffled_per_epoch)
            std::shuffle(order.begin(), order.end(), rng);
        if (mode == UpdateMode::batch) {
            const MlpGradients g = mlp_batch_gradient(params, samples);
            apply_step(params, g, config.learning_rate);
        } else {
            for (const std::size_t i : order) {
                MlpGradients g;
                const MlpForwardCache cache = mlp_forward(params, samples[i].input);
                accumulate_sample_gradient(params, cache, samples[i].target, 1.0, g);
                apply_step(params, g, config.learning_rate);
            }
        }
        result.trace.push_back(mlp_mse(params, samples));
    }
    result.params = params;
    return result;
}

std::vector<FleetPrediction> mlp_predict(const MlpParams& params,
                                         std::span<const YearRecord> records,
                                         const NormalizationSpec& spec) {
    std::vector<FleetPrediction> out;
    out.reserve(records.size());
    for (const auto& rec : records) {
        std::array<double, kMlpInputs> input{};
        for (int i = 0; i < kIndexCount; ++i)
            input[i] = normalize(rec.indices[i], spec.features[i]);
        const double y = mlp_forward(params, input).output;
        out.push_back({rec.year, to_trains(y, spec.target)});
    }
    return out;
}

void save_checkpoint(const MlpParams& params, std::ostream& out) {
    std::string buf;
    buf.append(kMlpFormatLine);
    buf.push_back('\n');
    for (int h = 0; h < kMlpHidden; ++h) {
        buf.append("w_hidden.row." + std::to_string(h) + "=");
        for (int i = 0; i < kMlpInputs; ++i) {
            buf.push_back(' ');
            detail::append_real17(buf, params.w_hidden[h][i]);
        }
        buf.push_back('\n');
    }
    buf.append("b_hidden=");
    for (const double b : params.b_hidden) {
        buf.push_back(' ');
        detail::append_real17(buf, b);
    }
    buf.push_back('\n');
    buf.append("w_out=");
    for (const double w : params.w_out) {
        buf.push_back(' ');
        detail::append_real17(buf, w);
    }
    buf.push_back('\n');
    buf.append("b_out= ");
    detail::append_real17(buf, params.b_out);
    buf.push_back('\n');
    buf.append("hidden_act=").append(to_string(params.hidden_activation));
    buf.push_back('\n');
    buf.append("out_act=").append(to_string(params.out_transfer));
    buf.push_back('\n');
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

MlpParams load_mlp_checkpoint(std::istream& in) {
    detail::CkptReader reader{in};
    const std::string header = reader.next_line();
    if (header != kMlpFormatLine)
        throw ParseError("line 1: expected '" + std::string(kMlpFormatLine) + "', got '" +
                         header + "'");

    MlpParams params;
    for (int h = 0; h < kMlpHidden; ++h) {
        const auto vals =
            reader.values_line("w_hidden.row." + std::to_string(h), kMlpInputs);
        std::copy(vals.begin(), vals.end(), params.w_hidden[h].begin());
    }
    auto vals = reader.values_line("b_hidden", kMlpHidden);
    std::copy(vals.begin(), vals.end(), params.b_hidden.begin());
    vals = reader.values_line("w_out", kMlpHidden);
    std::copy(vals.begin(), vals.end(), params.w_out.begin());
    params.b_out = reader.values_line("b_out", 1)[0];
    params.hidden_activation = activation_from_string(reader.text_line("hidden_act"));
    params.out_transfer = activation_from_string(reader.text_line("out_act"));
    return params;
}

}  // namespace emu
