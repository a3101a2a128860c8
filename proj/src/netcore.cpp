#include "emu/netcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "emu/errors.hpp"

namespace emu {

double grid_mean(const Grid2D& g) {
    double sum = 0.0;
    for (double v : g.values()) sum += v;
    return sum / static_cast<double>(g.values().size());
}

Grid2D conv2d_valid(const Grid2D& input, const Grid2D& kernel, double bias) {
    if (kernel.rows() > input.rows() || kernel.cols() > input.cols())
        throw ShapeError("conv2d_valid: kernel larger than input");

    const int out_rows = input.rows() - kernel.rows() + 1;
    const int out_cols = input.cols() - kernel.cols() + 1;
    Grid2D out(out_rows, out_cols);
    for (int p = 0; p < out_rows; ++p) {
        for (int q = 0; q < out_cols; ++q) {
            double acc = bias;
            for (int u = 0; u < kernel.rows(); ++u)
                for (int v = 0; v < kernel.cols(); ++v)
                    acc += input.at(p + u, q + v) * kernel.at(u, v);
            out.at(p, q) = acc;
        }
    }
    return out;
}

Grid2D apply_activation(const Grid2D& map, Activation f) {
    Grid2D out = map;
    for (double& v : out.values()) v = activate(f, v);
    return out;
}

Grid2D pool(const Grid2D& map, const PoolSpec& spec) {
    if (spec.window <= 0)
        throw ShapeError("pool: window must be positive");
    if (map.rows() % spec.window != 0 || map.cols() % spec.window != 0)
        throw ShapeError("pool: window " + std::to_string(spec.window) +
                         " does not tile a " + std::to_string(map.rows()) + "x" +
                         std::to_string(map.cols()) + " map");

    const int out_rows = map.rows() / spec.window;
    const int out_cols = map.cols() / spec.window;
    const double tile_size = static_cast<double>(spec.window) * spec.window;
    Grid2D out(out_rows, out_cols);
    for (int p = 0; p < out_rows; ++p) {
        for (int q = 0; q < out_cols; ++q) {
            double acc = spec.mode == PoolMode::max
                             ? -std::numeric_limits<double>::infinity()
                             : 0.0;
            for (int u = 0; u < spec.window; ++u) {
                for (int v = 0; v < spec.window; ++v) {
                    const double x = map.at(p * spec.window + u, q * spec.window + v);
                    if (spec.mode == PoolMode::max)
                        acc = std::max(acc, x);
                    else
                        acc += x;
                }
            }
            if (spec.mode == PoolMode::average) acc /= tile_size;
            out.at(p, q) = acc + spec.bias;
        }
    }
    return out;
}

double dense_forward(std::span<const double> z, std::span<const double> weights,
                     double bias, Activation transfer) {
    if (z.size() != weights.size())
        throw ShapeError("dense_forward: vector lengths differ (" +
                         std::to_string(z.size()) + " vs " +
                         std::to_string(weights.size()) + ")");
    double acc = bias;
    for (std::size_t i = 0; i < z.size(); ++i) acc += weights[i] * z[i];
    return activate(transfer, acc);
}

std::vector<double> finite_diff_gradient(
    const std::function<double(std::span<const double>)>& loss,
    std::span<const double> params, double eps) {
    if (!(eps > 0.0))
        throw DomainError("finite_diff_gradient: eps must be positive");

    std::vector<double> point(params.begin(), params.end());
    std::vector<double> grad(point.size());
    for (std::size_t i = 0; i < point.size(); ++i) {
        const double saved = point[i];
        point[i] = saved + eps;
        const double up = loss(point);
        point[i] = saved - eps;
        const double down = loss(point);
        point[i] = saved;
        if (!std::isfinite(up) || !std::isfinite(down))
            throw NumericError("finite_diff_gradient: non-finite loss at coordinate " +
                               std::to_string(i));
        grad[i] = (up - down) / (2.0 * eps);
    }
    return grad;
}

}  // namespace emu
