#pragma once

#include <string_view>

namespace emu {

enum class Activation { sigmoid, tanh, relu, linear };

double activate(Activation f, double x);

/// Derivative at pre-activation x. relu's derivative at exactly 0 is 0.
double activate_derivative(Activation f, double x);

std::string_view to_string(Activation f);
Activation activation_from_string(std::string_view name);

}  // namespace emu
