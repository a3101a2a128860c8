#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace emu {

enum class SampleOrder { chronological, shuffled_per_epoch };

std::string_view to_string(SampleOrder o);
SampleOrder sample_order_from_string(std::string_view name);

struct TrainConfig {
    double learning_rate = 0.5;
    int epochs = 100;
    std::uint64_t seed = 0;
    double init_scale = 0.5;  // parameters start uniform(-init_scale, init_scale)
    SampleOrder sample_order = SampleOrder::chronological;

    bool operator==(const TrainConfig&) const = default;
};

/// Mean squared error over the training samples after each epoch, evaluated
/// with the epoch-end parameters. Not monotone under per-sample updates.
using MseTrace = std::vector<double>;

}  // namespace emu
