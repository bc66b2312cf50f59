#pragma once

#include "spectral_lab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace spectral_lab {

/// Ordinary least-squares line y = intercept + slope * x.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    double max_abs_residual = 0.0;
    /// d(slope)/d(y_i); lets callers propagate per-point uncertainties.
    std::vector<double> slope_weights;
};

inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n != y.size())
        throw FitError("fit_line: x and y lengths differ");
    if (n < 3)
        throw FitError("fit_line: need at least 3 points");
    double xm = 0.0;
    double ym = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        xm += x[i];
        ym += y[i];
    }
    xm /= static_cast<double>(n);
    ym /= static_cast<double>(n);
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - xm) * (x[i] - xm);
        sxy += (x[i] - xm) * (y[i] - ym);
    }
    if (!(sxx > 0.0))
        throw FitError("fit_line: abscissae are degenerate");

    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = ym - fit.slope * xm;
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (fit.intercept + fit.slope * x[i]);
        ssr += r * r;
        fit.max_abs_residual = std::max(fit.max_abs_residual, std::abs(r));
    }
    fit.slope_stderr = std::sqrt(ssr / static_cast<double>(n - 2) / sxx);
    fit.slope_weights.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        fit.slope_weights[i] = (x[i] - xm) / sxx;
    return fit;
}

} // namespace spectral_lab
