#pragma once

#include <span>
#include <string_view>

namespace emu {

/// Brown's one-parameter exponential smoothing order. Double smoothing
/// yields forecasts linear in the horizon, triple yields quadratic.
enum class SmoothingOrder { Single = 1, Double = 2, Triple = 3 };

std::string_view to_string(SmoothingOrder o);
SmoothingOrder smoothing_order_from_string(std::string_view name);

/// Fitted smoothing state. forecast(m) = a + b*m + (c/2)*m^2.
struct SmoothingModel {
    SmoothingOrder order = SmoothingOrder::Double;
    double alpha = 0.5;
    double s1 = 0.0, s2 = 0.0, s3 = 0.0;  // final smoothed statistics
    double a = 0.0, b = 0.0, c = 0.0;     // forecast polynomial coefficients

    bool operator==(const SmoothingModel&) const = default;
};

/// Run Brown's recursions left to right over the series. All smoothed
/// statistics are initialized to the first observation. Requires
/// series.size() >= 3 and alpha in (0,1).
SmoothingModel fit_smoothing(std::span<const double> series, SmoothingOrder order,
                             double alpha);

/// Forecast `horizon` steps past the end of the fitted series (horizon >= 1).
double forecast(const SmoothingModel& model, int horizon);

/// Pick alpha from the grid minimizing the sum of squared deviations between
/// forecast(1..reference.size()) and the reference values. Ties break toward
/// the smaller alpha. The default grid is {0.01, 0.02, ..., 0.99}.
double fit_alpha(std::span<const double> series, SmoothingOrder order,
                 std::span<const double> reference);
double fit_alpha(std::span<const double> series, SmoothingOrder order,
                 std::span<const double> reference, std::span<const double> grid);

}  // namespace emu
