/*
 * scaling.hpp: Steinmann scaling degree of smeared two-point functions
 *
 * The scaled functional is
 *
 *   W_lambda(f) = lambda^-2 int drho(m0^2) smeared_free(lambda m0, f),
 *
 * and the scaling degree is estimated as the negative log-log slope of
 * |W_lambda| against lambda over the smallest-lambda window of a geometric
 * grid lambda_k = base^-k. A free field has degree 2; a measure of finite
 * total mass can never exceed 2, so classify() treats a fitted degree above
 * 2 + 3 stderr for such a measure as a numerical failure.
 */
#pragma once

#include "spectral_lab/errors.hpp"
#include "spectral_lab/kernel.hpp"
#include "spectral_lab/linear_fit.hpp"
#include "spectral_lab/measure.hpp"
#include "spectral_lab/parallel.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace spectral_lab {

struct ScalingGridSpec {
    int k_min = 4;
    int k_max = 14;
    int fit_k_min = 9;
    double base = 2.0;
    unsigned threads = 1;

    std::size_t size() const { return static_cast<std::size_t>(k_max - k_min + 1); }
    std::size_t fit_size() const { return static_cast<std::size_t>(k_max - fit_k_min + 1); }
    double lambda(int k) const { return std::pow(base, -k); }
};

/// Returns a description of the first problem with the grid, or empty.
inline std::string check_grid_spec(const ScalingGridSpec& g) {
    if (!(g.base > 1.0) || !std::isfinite(g.base))
        return "grid base must be > 1";
    if (g.k_min < 0)
        return "grid k_min must be >= 0 (lambda <= 1)";
    if (g.k_max < g.k_min || g.size() < 8)
        return "grid needs >= 8 lambdas";
    if ((g.k_max - g.k_min) * std::log10(g.base) < 3.0 - 1e-12)
        return "grid must span >= 3 decades in lambda";
    if (g.fit_k_min < g.k_min || g.fit_k_min > g.k_max || g.fit_size() < 5)
        return "fit window needs >= 5 grid points inside the grid";
    return {};
}

struct ScalingGrid {
    std::vector<double> lambdas; ///< strictly decreasing, geometric
    std::vector<double> values;
    std::vector<double> abs_errors;
};

struct ScalingFit {
    double degree = 0.0;
    double std_error = 0.0;
    double residual = 0.0; ///< max |log W - fitted line| over the window
    std::size_t points = 0;
};

enum class SingularityKind { FreeLike, SatisfiesSingularityHypothesis };

inline std::string_view to_string(SingularityKind k) {
    return k == SingularityKind::FreeLike ? "FreeLike" : "SatisfiesSingularityHypothesis";
}

struct SingularityVerdict {
    SingularityKind kind = SingularityKind::FreeLike;
    bool sigma_mass_finite = true;
    double degree = 0.0;
    double margin = 0.0;
    ScalingFit fit;
};

/// W_lambda(f) for 0 < lambda <= 1; lambda = 1 is kl_two_point.
inline Evaluation scaled_value(const SpectralMeasure& m, const TestFunction& f, double lambda) {
    if (!(lambda > 0.0 && lambda <= 1.0))
        throw DomainError("scaled_value: lambda must lie in (0, 1]");
    const Evaluation e = detail::scaled_pairing(m, f, lambda);
    const double factor = 1.0 / (lambda * lambda);
    return {e.value * factor, e.abs_error * factor};
}

inline ScalingGrid evaluate_scaling_grid(const SpectralMeasure& m, const TestFunction& f,
                                         const ScalingGridSpec& spec = {}) {
    if (auto problem = check_grid_spec(spec); !problem.empty())
        throw DomainError(problem);
    ScalingGrid grid;
    const std::size_t n = spec.size();
    grid.lambdas.resize(n);
    grid.values.resize(n);
    grid.abs_errors.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        grid.lambdas[i] = spec.lambda(spec.k_min + static_cast<int>(i));
    detail::parallel_for(n, spec.threads, [&](std::size_t i) {
        const Evaluation e = scaled_value(m, f, grid.lambdas[i]);
        grid.values[i] = e.value;
        grid.abs_errors[i] = e.abs_error;
    });
    return grid;
}

/// Least-squares log-log slope over the fit window. The reported stderr
/// combines the regression error with the quadrature error carried through
/// the slope weights.
inline ScalingFit fit_scaling_degree(const ScalingGrid& grid, const ScalingGridSpec& spec = {}) {
    const std::size_t n = grid.lambdas.size();
    if (grid.values.size() != n || grid.abs_errors.size() != n)
        throw FitError("scaling grid columns have different lengths");
    const std::size_t first = static_cast<std::size_t>(spec.fit_k_min - spec.k_min);
    if (first >= n || n - first < 5)
        throw FitError("fit uses >= 5 grid points");

    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> rel;
    const double sign = grid.values[first] < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = first; i < n; ++i) {
        const double v = grid.values[i];
        if (!std::isfinite(v) || v == 0.0 || (v < 0.0) != (sign < 0.0))
            throw FitError("degree undetectable with this probe: values cross zero");
        if (grid.abs_errors[i] * 10.0 >= std::abs(v))
            throw FitError("degree undetectable with this probe: values below quadrature noise");
        x.push_back(std::log(grid.lambdas[i]));
        y.push_back(std::log(std::abs(v)));
        rel.push_back(std::max(grid.abs_errors[i] / std::abs(v),
                               4.0 * std::numeric_limits<double>::epsilon()));
    }
    const LineFit line = fit_line(x, y);
    double quad_var = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        quad_var += line.slope_weights[i] * line.slope_weights[i] * rel[i] * rel[i];

    ScalingFit fit;
    fit.degree = -line.slope;
    fit.std_error = std::sqrt(line.slope_stderr * line.slope_stderr + quad_var);
    fit.residual = line.max_abs_residual;
    fit.points = x.size();
    return fit;
}

inline ScalingFit estimate_scaling_degree(const SpectralMeasure& m, const TestFunction& f,
                                          const ScalingGridSpec& spec = {}) {
    return fit_scaling_degree(evaluate_scaling_grid(m, f, spec), spec);
}

/// Verdict from an already computed fit; throws InconsistencyError when a
/// finite-mass measure fits above 2 + 3 stderr.
inline SingularityVerdict classify_fit(const SpectralMeasure& m, const ScalingFit& fit) {
    SingularityVerdict v;
    v.fit = fit;
    v.degree = fit.degree;
    v.margin = 3.0 * fit.std_error;
    v.kind = fit.degree > 2.0 + v.margin ? SingularityKind::SatisfiesSingularityHypothesis
                                         : SingularityKind::FreeLike;
    v.sigma_mass_finite = continuum_mass(m.continuum()).finite();
    // atoms are finitely many with finite weights, so the total is finite
    // exactly when the continuum is
    if (v.sigma_mass_finite && v.kind == SingularityKind::SatisfiesSingularityHypothesis)
        throw InconsistencyError("finite total spectral mass but fitted degree " +
                                 detail::fmt_num(fit.degree) + " > 2 + " + detail::fmt_num(v.margin) +
                                 ": numerical pipeline failure");
    return v;
}

inline SingularityVerdict classify(const SpectralMeasure& m, const TestFunction& f,
                                   const ScalingGridSpec& spec = {}) {
    return classify_fit(m, estimate_scaling_degree(m, f, spec));
}

} // namespace spectral_lab
