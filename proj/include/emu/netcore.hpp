#pragma once

#include <functional>
#include <span>
#include <vector>

#include "emu/activation.hpp"
#include "emu/grid.hpp"

namespace emu {

/// Valid (unpadded) stride-1 2-D convolution in the cross-correlation
/// convention: out[p,q] = sum_{u,v} input[p+u, q+v] * kernel[u,v] + bias.
/// The kernel is not flipped. For an r x r input and c x c kernel the
/// output is (r-c+1) x (r-c+1).
Grid2D conv2d_valid(const Grid2D& input, const Grid2D& kernel, double bias);

/// Elementwise activation over a grid.
Grid2D apply_activation(const Grid2D& map, Activation f);

enum class PoolMode { average, max };

struct PoolSpec {
    int window = 2;
    PoolMode mode = PoolMode::average;
    double bias = 0.0;

    bool operator==(const PoolSpec&) const = default;
};

/// Non-overlapping window pooling; the window must tile the map exactly.
/// Each tile is replaced by its mean (average) or maximum (max), plus bias.
Grid2D pool(const Grid2D& map, const PoolSpec& spec);

/// transfer(dot(weights, z) + bias). Lengths must match.
double dense_forward(std::span<const double> z, std::span<const double> weights,
                     double bias, Activation transfer);

/// Central-difference gradient of `loss` at `params`:
/// g_i = (loss(p + eps*e_i) - loss(p - eps*e_i)) / (2*eps).
/// Independent of any analytic backward pass; used as the gradient oracle.
std::vector<double> finite_diff_gradient(
    const std::function<double(std::span<const double>)>& loss,
    std::span<const double> params, double eps = 1e-5);

}  // namespace emu
