/*
 * ftscale.hpp: position-space growth of Fourier transforms of |p|^lambda
 *
 * For a shell probe f_r of unit mass concentrated at |x| = r the pairing
 *
 *   <F(|p|^lambda), f_r> = <|p|^lambda, f~_r> = Omega_s int_0^inf p^(lambda+s-1) f~_r(p) dp
 *
 * scales as r^(-lambda-s). When lambda + s <= 0 the integral diverges at the
 * origin and is regularized by subtracting the first k Taylor terms of f~_r
 * (in p^2) on |p| <= 1 and adding back their exactly integrated contribution
 *
 *   sum_{j<k} c_j / (lambda + s + 2j).
 *
 * Probes are built in Fourier space: a uniform point pair / ring / sphere of
 * radius r (f~ = cos, J0, sinc of p r) smeared radially either by a Gaussian
 * of width kappa r or by a compactly supported order-8 B-spline of half-width
 * kappa r. Both families are self-similar in r.
 */
#pragma once

#include "spectral_lab/errors.hpp"
#include "spectral_lab/kernel.hpp"
#include "spectral_lab/linear_fit.hpp"
#include "spectral_lab/quadrature.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace spectral_lab {

enum class ShellKind { Gaussian, Bump };

inline std::string_view to_string(ShellKind k) { return k == ShellKind::Gaussian ? "gaussian" : "bump"; }

struct PowerLawSpec {
    double pl_exponent = -2.0;
    int space_dim = 3;
    int regularization_order = 0;
    ShellKind shell = ShellKind::Gaussian;
    double relative_width = 0.1;
};

/// max(0, ceil((-lambda - s) / 2)): Taylor subtractions needed at p = 0.
inline int minimum_regularization_order(double pl_exponent, int space_dim) {
    return std::max(0, static_cast<int>(std::ceil((-pl_exponent - space_dim) / 2.0)));
}

/// Returns a description of the first problem with the spec, or empty.
inline std::string check_power_law_spec(const PowerLawSpec& spec) {
    if (spec.space_dim < 1 || spec.space_dim > 3)
        return "space_dim must be 1, 2 or 3";
    if (!std::isfinite(spec.pl_exponent))
        return "pl_exponent must be finite";
    if (!(spec.relative_width > 0.0 && spec.relative_width < 1.0))
        return "relative_width must lie in (0, 1)";
    if (spec.shell == ShellKind::Bump && spec.space_dim == 2)
        return "bump shells have a closed-form transform only for space_dim 1 or 3";
    const int need = minimum_regularization_order(spec.pl_exponent, spec.space_dim);
    if (spec.regularization_order < need)
        return "regularization_order " + std::to_string(spec.regularization_order) +
               " violates regularization_order >= max(0, ceil((-pl_exponent - space_dim)/2)) = " +
               std::to_string(need);
    const double a = spec.pl_exponent + spec.space_dim;
    for (int j = 0; j <= spec.regularization_order; ++j)
        if (a + 2.0 * j == 0.0)
            return "pl_exponent + space_dim + 2j = 0 for j = " + std::to_string(j) +
                   ": |p|^pl_exponent sits on a pole of its regularization";
    return {};
}

namespace detail {

inline constexpr int kBsplineOrder = 8;
inline constexpr int kSeriesTerms = 40;

struct ShellTransform {
    ShellKind kind;
    int dim;
    double r;
    double sigma; // Gaussian width
    double h;     // B-spline knot spacing

    ShellTransform(const PowerLawSpec& spec, double radius)
        : kind(spec.shell), dim(spec.space_dim), r(radius), sigma(spec.relative_width * radius),
          h(2.0 * spec.relative_width * radius / kBsplineOrder) {}

    /// Largest radius carrying probe mass.
    double reach() const { return kind == ShellKind::Gaussian ? r + 5.0 * sigma : r + 0.5 * kBsplineOrder * h; }

    double shell(double x) const {
        switch (dim) {
        case 1:
            return std::cos(x);
        case 2:
            return std::cyl_bessel_j(0.0, x);
        default:
            return x == 0.0 ? 1.0 : std::sin(x) / x;
        }
    }

    double envelope(double p) const {
        if (kind == ShellKind::Gaussian)
            return std::exp(-0.5 * sigma * sigma * p * p);
        const double x = 0.5 * p * h;
        const double sinc = x == 0.0 ? 1.0 : std::sin(x) / x;
        return std::pow(sinc, kBsplineOrder);
    }

    double operator()(double p) const { return envelope(p) * shell(p * r); }

    /// Taylor coefficients of f~ in powers of p^2.
    std::vector<double> series() const {
        std::vector<double> a(kSeriesTerms);
        a[0] = 1.0;
        for (int n = 1; n < kSeriesTerms; ++n) {
            const double nn = n;
            switch (dim) {
            case 1:
                a[n] = -a[n - 1] * r * r / ((2 * nn - 1) * (2 * nn));
                break;
            case 2:
                a[n] = -a[n - 1] * (r * r / 4.0) / (nn * nn);
                break;
            default:
                a[n] = -a[n - 1] * r * r / ((2 * nn) * (2 * nn + 1));
                break;
            }
        }
        return multiply(a, envelope_series());
    }

    std::vector<double> envelope_series() const {
        std::vector<double> b(kSeriesTerms, 0.0);
        b[0] = 1.0;
        if (kind == ShellKind::Gaussian) {
            for (int n = 1; n < kSeriesTerms; ++n)
                b[n] = b[n - 1] * (-0.5 * sigma * sigma) / n;
            return b;
        }
        std::vector<double> base(kSeriesTerms, 0.0);
        base[0] = 1.0;
        const double hh = 0.25 * h * h;
        for (int n = 1; n < kSeriesTerms; ++n)
            base[n] = -base[n - 1] * hh / ((2.0 * n) * (2.0 * n + 1));
        for (int power = 0; power < kBsplineOrder; ++power)
            b = multiply(b, base);
        return b;
    }

    static std::vector<double> multiply(const std::vector<double>& x, const std::vector<double>& y) {
        std::vector<double> out(x.size(), 0.0);
        for (std::size_t i = 0; i < x.size(); ++i)
            for (std::size_t j = 0; i + j < out.size(); ++j)
                out[i + j] += x[i] * y[j];
        return out;
    }
};

} // namespace detail

/// Regularized pairing <|p|^lambda, f~_r> in s dimensions.
inline Evaluation smeared_power_ft(const PowerLawSpec& spec, double probe_radius) {
    if (auto problem = check_power_law_spec(spec); !problem.empty())
        throw DomainError(problem);
    if (!(probe_radius > 0.0) || !std::isfinite(probe_radius))
        throw DomainError("smeared_power_ft: probe_radius must be > 0");

    const detail::ShellTransform ft(spec, probe_radius);
    const double a = spec.pl_exponent + spec.space_dim - 1.0; // radial power
    const int k = spec.regularization_order;
    const std::vector<double> c = ft.series();
    const double solid_angle = spec.space_dim == 1   ? 2.0
                               : spec.space_dim == 2 ? 2.0 * std::numbers::pi
                                                     : 4.0 * std::numbers::pi;

    // Below p_series the subtracted transform is summed from its Taylor tail,
    // which avoids cancelling f~ against the polynomial.
    const double p_series = 0.5 / ft.reach();
    auto subtracted = [&](double p) {
        const double p2 = p * p;
        if (p < p_series) {
            double sum = 0.0;
            double pw = std::pow(p2, k);
            for (int j = k; j < detail::kSeriesTerms; ++j) {
                sum += c[j] * pw;
                pw *= p2;
            }
            return sum;
        }
        double poly = 0.0;
        double pw = 1.0;
        for (int j = 0; j < k; ++j) {
            poly += c[j] * pw;
            pw *= p2;
        }
        return ft(p) - poly;
    };

    QuadratureOptions q;
    q.rel_tol = 1e-11;
    q.abs_tol = 1e-13 * std::pow(probe_radius, -(spec.pl_exponent + spec.space_dim));
    q.max_subdivisions = 4000;
    const double half_period = std::numbers::pi / probe_radius;

    // [0, 1]: subtracted integrand
    std::vector<double> inner{0.0};
    if (p_series < 1.0)
        inner.push_back(p_series);
    for (double p = half_period; p < 1.0; p += half_period)
        if (p > inner.back())
            inner.push_back(p);
    inner.push_back(1.0);
    const auto i1 = integrate([&](double p) { return std::pow(p, a) * subtracted(p); },
                              std::span<const double>(inner), q);

    // [1, p_max]: raw integrand, then an envelope bound on the remainder
    double p_max = 0.0;
    double tail = 0.0;
    if (spec.shell == ShellKind::Gaussian) {
        p_max = std::max(2.0, 12.0 / ft.sigma);
    } else {
        const double n = detail::kBsplineOrder;
        p_max = std::max(2.0, (2.0 / ft.h) * std::pow(10.0, 13.0 / n));
        tail = std::pow(2.0 / ft.h, n) * std::pow(p_max, a - n + 1.0) / (n - a - 1.0);
    }
    std::vector<double> outer{1.0};
    for (double p = 1.0 + half_period; p < p_max; p += half_period)
        outer.push_back(p);
    outer.push_back(p_max);
    const auto i2 = integrate([&](double p) { return std::pow(p, a) * ft(p); },
                              std::span<const double>(outer), q);

    double exact = 0.0;
    for (int j = 0; j < k; ++j)
        exact += c[j] / (spec.pl_exponent + spec.space_dim + 2.0 * j);

    Evaluation out;
    out.value = solid_angle * (i1.value + i2.value + exact);
    out.abs_error = solid_angle * (i1.abs_error + i2.abs_error + std::abs(tail));
    return out;
}

struct ExponentFit {
    double fitted_exponent = 0.0;
    double std_error = 0.0;
    std::vector<double> probe_radii;
    std::vector<double> pairings;
    std::vector<double> abs_errors;
};

inline double expected_position_exponent(const PowerLawSpec& spec) {
    return -spec.pl_exponent - spec.space_dim;
}

inline std::vector<double> default_probe_radii() {
    std::vector<double> radii;
    for (int i = 0; i < 8; ++i)
        radii.push_back(std::pow(10.0, 2.0 * i / 7.0));
    return radii;
}

namespace detail {

inline void check_probe_radii(std::span<const double> radii) {
    if (radii.size() < 6)
        throw DomainError("fit_position_exponent: needs >= 6 radii");
    for (std::size_t i = 1; i < radii.size(); ++i)
        if (!(radii[i] > radii[i - 1]))
            throw DomainError("fit_position_exponent: radii must be strictly ascending");
    if (!(radii.front() > 0.0) || radii.back() < 10.0 * radii.front())
        throw DomainError("fit_position_exponent: radii must be positive and span >= 1 decade");
}

} // namespace detail

/// Slope of log|pairing| against log r from already evaluated pairings.
inline ExponentFit fit_exponent_from(std::span<const double> radii, std::span<const Evaluation> pairings) {
    detail::check_probe_radii(radii);
    if (pairings.size() != radii.size())
        throw FitError("fit_position_exponent: radii and pairings differ in length");
    ExponentFit fit;
    fit.probe_radii.assign(radii.begin(), radii.end());
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> rel;
    for (std::size_t i = 0; i < radii.size(); ++i) {
        const Evaluation& e = pairings[i];
        if (e.value == 0.0 || !std::isfinite(e.value) || (e.value < 0.0) != (pairings.front().value < 0.0))
            throw FitError("fit_position_exponent: pairing changes sign across radii");
        fit.pairings.push_back(e.value);
        fit.abs_errors.push_back(e.abs_error);
        x.push_back(std::log(radii[i]));
        y.push_back(std::log(std::abs(e.value)));
        rel.push_back(std::max(e.abs_error / std::abs(e.value), 4.0 * std::numeric_limits<double>::epsilon()));
    }
    const LineFit line = fit_line(x, y);
    double quad_var = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        quad_var += line.slope_weights[i] * line.slope_weights[i] * rel[i] * rel[i];
    fit.fitted_exponent = line.slope;
    fit.std_error = std::sqrt(line.slope_stderr * line.slope_stderr + quad_var);
    return fit;
}

/// Slope of log|pairing| against log r over self-similar probes.
inline ExponentFit fit_position_exponent(const PowerLawSpec& spec, std::span<const double> radii) {
    detail::check_probe_radii(radii);
    std::vector<Evaluation> pairings;
    for (double r : radii)
        pairings.push_back(smeared_power_ft(spec, r));
    return fit_exponent_from(radii, pairings);
}

} // namespace spectral_lab
