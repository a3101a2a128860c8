#include "emu/training.hpp"

#include <string>

#include "emu/errors.hpp"

namespace emu {

std::string_view to_string(SampleOrder o) {
    return o == SampleOrder::chronological ? "chronological" : "shuffled-per-epoch";
}

SampleOrder sample_order_from_string(std::string_view name) {
    if (name == "chronological") return SampleOrder::chronological;
    if (name == "shuffled-per-epoch") return SampleOrder::shuffled_per_epoch;
    throw ParseError("unknown sample order: " + std::string(name));
}

}  // namespace emu
