#pragma once

#include <initializer_list>
#include <vector>

#include "emu/errors.hpp"

namespace emu {

/// Dense row-major 2-D grid of doubles. Value type; cheap to copy at the
/// sizes this library works with (3x3 inputs, 2x2 kernels).
class Grid2D {
public:
    Grid2D() = default;

    Grid2D(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols) {
        check_shape(rows, cols);
        values_.assign(static_cast<std::size_t>(rows) * cols, fill);
    }

    Grid2D(int rows, int cols, std::vector<double> values)
        : rows_(rows), cols_(cols), values_(std::move(values)) {
        check_shape(rows, cols);
        if (values_.size() != static_cast<std::size_t>(rows) * cols)
            throw ShapeError("Grid2D: value count does not match rows*cols");
    }

    /// Build from row literals: Grid2D{{1,2},{3,4}}.
    Grid2D(std::initializer_list<std::initializer_list<double>> rows) {
        rows_ = static_cast<int>(rows.size());
        cols_ = rows_ > 0 ? static_cast<int>(rows.begin()->size()) : 0;
        check_shape(rows_, cols_);
        values_.reserve(static_cast<std::size_t>(rows_) * cols_);
        for (const auto& row : rows) {
            if (static_cast<int>(row.size()) != cols_)
                throw ShapeError("Grid2D: ragged row literal");
            values_.insert(values_.end(), row.begin(), row.end());
        }
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double at(int r, int c) const { return values_[index(r, c)]; }
    double& at(int r, int c) { return values_[index(r, c)]; }

    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    bool operator==(const Grid2D&) const = default;

private:
    static void check_shape(int rows, int cols) {
        if (rows <= 0 || cols <= 0)
            throw ShapeError("Grid2D: dimensions must be positive");
    }

    std::size_t index(int r, int c) const {
        return static_cast<std::size_t>(r) * cols_ + c;
    }

    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> values_;
};

double grid_mean(const Grid2D& g);

}  // namespace emu
