#include "emu/activation.hpp"

#include <cmath>

#include "emu/errors.hpp"

namespace emu {

double activate(Activation f, double x) {
    switch (f) {
        case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-x));
        case Activation::tanh: return std::tanh(x);
        case Activation::relu: return x > 0.0 ? x : 0.0;
        case Activation::linear: return x;
    }
    throw DomainError("unknown activation");
}

double activate_derivative(Activation f, double x) {
    switch (f) {
        case Activation::sigmoid: {
            const double y = activate(Activation::sigmoid, x);
            return y * (1.0 - y);
        }
        case Activation::tanh: {
            const double y = std::tanh(x);
            return 1.0 - y * y;
        }
        case Activation::relu:
            return x > 0.0 ? 1.0 : 0.0;
        case Activation::linear:
            return 1.0;
    }
    throw DomainError("unknown activation");
}

std::string_view to_string(Activation f) {
    switch (f) {
        case Activation::sigmoid: return "sigmoid";
        case Activation::tanh: return "tanh";
        case Activation::relu: return "relu";
        case Activation::linear: return "linear";
    }
    throw DomainError("unknown activation");
}

Activation activation_from_string(std::string_view name) {
    if (name == "sigmoid") return Activation::sigmoid;
    if (name == "tanh") return Activation::tanh;
    if (name == "relu") return Activation::relu;
    if (name == "linear") return Activation::linear;
    throw ParseError("unknown activation name: " + std::string(name));
}

}  // namespace emu
