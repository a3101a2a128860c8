#include "emu/smoothing.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "emu/errors.hpp"

namespace emu {

std::string_view to_string(SmoothingOrder o) {
    switch (o) {
        case SmoothingOrder::Single: return "single";
        case SmoothingOrder::Double: return "double";
        case SmoothingOrder::Triple: return "triple";
    }
    throw DomainError("unknown smoothing order");
}

SmoothingOrder smoothing_order_from_string(std::string_view name) {
    if (name == "single") return SmoothingOrder::Single;
    if (name == "double") return SmoothingOrder::Double;
    if (name == "triple") return SmoothingOrder::Triple;
    throw ParseError("unknown smoothing order: " + std::string(name));
}

SmoothingModel fit_smoothing(std::span<const double> series, SmoothingOrder order,
                             double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw DomainError("fit_smoothing: alpha must lie in (0,1)");
    if (series.size() < 3)
        throw ValidationError("fit_smoothing: need at least 3 observations");

    SmoothingModel m;
    m.order = order;
    m.alpha = alpha;
    m.s1 = m.s2 = m.s3 = series.front();
    for (const double x : series) {
        m.s1 = alpha * x + (1.0 - alpha) * m.s1;
        m.s2 = alpha * m.s1 + (1.0 - alpha) * m.s2;
        m.s3 = alpha * m.s2 + (1.0 - alpha) * m.s3;
    }

    const double one_minus = 1.0 - alpha;
    switch (order) {
        case SmoothingOrder::Single:
            m.a = m.s1;
            break;
        case SmoothingOrder::Double:
            m.a = 2.0 * m.s1 - m.s2;
            m.b = alpha / one_minus * (m.s1 - m.s2);
            break;
        case SmoothingOrder::Triple:
            m.a = 3.0 * m.s1 - 3.0 * m.s2 + m.s3;
            m.b = alpha / (2.0 * one_minus * one_minus) *
                  ((6.0 - 5.0 * alpha) * m.s1 - 2.0 * (5.0 - 4.0 * alpha) * m.s2 +
                   (4.0 - 3.0 * alpha) * m.s3);
            m.c = alpha * alpha / (one_minus * one_minus) * (m.s1 - 2.0 * m.s2 + m.s3);
            break;
    }
    return m;
}

double forecast(const SmoothingModel& model, int horizon) {
    if (horizon < 1)
        throw DomainError("forecast: horizon must be >= 1");
    const double m = horizon;
    return model.a + model.b * m + 0.5 * model.c * m * m;
}

double fit_alpha(std::span<const double> series, SmoothingOrder order,
                 std::span<const double> reference, std::span<const double> grid) {
    if (reference.empty())
        throw ValidationError("fit_alpha: reference is empty");
    if (grid.empty())
        throw ValidationError("fit_alpha: alpha grid is empty");

    double best_alpha = grid.front();
    double best_sse = std::numeric_limits<double>::infinity();
    for (const double alpha : grid) {
        const SmoothingModel m = fit_smoothing(series, order, alpha);
        double sse = 0.0;
        for (std::size_t h = 0; h < reference.size(); ++h) {
            const double d = forecast(m, static_cast<int>(h) + 1) - reference[h];
            sse += d * d;
        }
        if (sse < best_sse) {  // strict: ties keep the smaller alpha
            best_sse = sse;
            best_alpha = alpha;
        }
    }
    return best_alpha;
}

double fit_alpha(std::span<const double> series, SmoothingOrder order,
                 std::span<const double> reference) {
    std::vector<double> grid;
    grid.reserve(99);
    for (int k = 1; k <= 99; ++k) grid.push_back(k / 100.0);
    return fit_alpha(series, order, reference, grid);
}

}  // namespace emu
