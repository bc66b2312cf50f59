/*
 * kernel.hpp: free two-point functions and Kallen-Lehmann pairings
 *
 *   free_two_point_spacelike(m, r) = m K1(m r) / (4 pi^2 r)      (m > 0)
 *                                  = 1 / (4 pi^2 r^2)             (m = 0)
 *
 *   smeared_free(m, f) = int d^3p / w(p) f~(w(p), p),  w(p) = sqrt(p^2 + m^2)
 *
 *   kl_two_point(rho, f) = int drho(m0^2) smeared_free(m0, f)
 *
 * Test functions are 4D Gaussians given directly by their Fourier transform
 *
 *   f~(p0, p) = A exp(-w^2 (p0^2 + |p|^2) / 4) exp(i (p0 c0 - p.c)),
 *
 * so only one radial quadrature is needed per mass: the angular integral of
 * exp(-i p.c) is sinc(|p| |c|). Pairings report the real part, which is the
 * whole value for probes centred at the origin.
 */
#pragma once

#include "spectral_lab/errors.hpp"
#include "spectral_lab/measure.hpp"
#include "spectral_lab/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

namespace spectral_lab {

struct Evaluation {
    double value = 0.0;
    double abs_error = 0.0;
};

class TestFunction {
  public:
    TestFunction() = default;
    TestFunction(double width, double amplitude = 1.0, std::array<double, 4> center = {})
        : center_(center), width_(width), amplitude_(amplitude) {
        if (!(width > 0.0) || !std::isfinite(width))
            throw DomainError("test function width must be > 0");
        if (!std::isfinite(amplitude))
            throw DomainError("test function amplitude must be finite");
        for (double c : center)
            if (!std::isfinite(c))
                throw DomainError("test function center must be finite");
    }

    const std::array<double, 4>& center() const { return center_; }
    double width() const { return width_; }
    double amplitude() const { return amplitude_; }

    /// |c|, the spatial distance of the center from the origin.
    double spatial_offset() const {
        return std::hypot(center_[1], center_[2], center_[3]);
    }

    std::complex<double> fourier(double p0, const std::array<double, 3>& p) const {
        const double p_sq = p0 * p0 + p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
        const double phase = p0 * center_[0] - (p[0] * center_[1] + p[1] * center_[2] + p[2] * center_[3]);
        return amplitude_ * std::exp(-width_ * width_ * p_sq / 4.0) * std::polar(1.0, phase);
    }

    /// Natural size of a smeared free pairing: smeared_free(0, f) for c = 0.
    double pairing_scale() const {
        return 4.0 * std::numbers::pi * std::abs(amplitude_) / (width_ * width_);
    }

    friend bool operator==(const TestFunction&, const TestFunction&) = default;

  private:
    std::array<double, 4> center_{};
    double width_ = 1.0;
    double amplitude_ = 1.0;
};

inline QuadratureOptions kernel_quadrature() {
    QuadratureOptions q;
    q.abs_tol = 1e-10;
    q.rel_tol = 1e-9;
    q.max_subdivisions = 2000;
    return q;
}

/// Equal-time free two-point function at spatial separation r > 0.
inline Evaluation free_two_point_spacelike(double mass, double r) {
    if (!(r > 0.0) || !std::isfinite(r))
        throw DomainError("free_two_point_spacelike: r must be > 0");
    if (!(mass >= 0.0) || !std::isfinite(mass))
        throw DomainError("free_two_point_spacelike: mass must be >= 0");
    constexpr double four_pi_sq = 4.0 * std::numbers::pi * std::numbers::pi;
    constexpr double eps = std::numeric_limits<double>::epsilon();
    if (mass == 0.0) {
        const double v = 1.0 / (four_pi_sq * r * r);
        return {v, 4.0 * eps * v};
    }
    const double v = mass * std::cyl_bessel_k(1.0, mass * r) / (four_pi_sq * r);
    // libstdc++'s K_nu is accurate to a few tens of ulps over this range
    return {v, 64.0 * eps * std::abs(v)};
}

namespace detail {

/// Radial integrand of smeared_free: 4 pi p^2 / w Re f~(w, p) averaged over
/// directions.
inline double smeared_integrand(double p, double mass, const TestFunction& f) {
    const double omega = std::sqrt(p * p + mass * mass);
    const double w = f.width();
    const double envelope = std::exp(-w * w * (omega * omega + p * p) / 4.0);
    if (envelope == 0.0)
        return 0.0;
    double angular = 1.0;
    const double x = p * f.spatial_offset();
    if (x != 0.0)
        angular = std::sin(x) / x;
    const double temporal = f.center()[0] == 0.0 ? 1.0 : std::cos(omega * f.center()[0]);
    const double ratio = omega > 0.0 ? p / omega : 1.0; // p^2 / w written as p * (p / w)
    return 4.0 * std::numbers::pi * f.amplitude() * p * ratio * envelope * angular * temporal;
}

/// Bound on |smeared_free(mass, f)|: pairing_scale * exp(-w^2 m^2 / 4).
inline double pairing_envelope(double mass, const TestFunction& f) {
    const double w = f.width();
    return f.pairing_scale() * std::exp(-w * w * mass * mass / 4.0);
}

} // namespace detail

/// int d^3p / sqrt(p^2 + m^2) f~(sqrt(p^2 + m^2), p) by radial quadrature.
inline Evaluation smeared_free(double mass, const TestFunction& f,
                               const QuadratureOptions& q = kernel_quadrature()) {
    if (!(mass >= 0.0) || !std::isfinite(mass))
        throw DomainError("smeared_free: mass must be >= 0");
    if (f.amplitude() == 0.0)
        return {0.0, 0.0};
    // exp(-w^2 p^2 / 2) < e^-72 beyond p = 12 / w
    const double p_max = 12.0 / f.width();
    std::vector<double> bps{0.0};
    if (mass > 0.0 && mass < p_max)
        bps.push_back(mass);
    // resolve the oscillations of a displaced probe
    const double freq = f.spatial_offset() + std::abs(f.center()[0]);
    if (freq > 0.0) {
        const double step = std::numbers::pi / freq;
        for (double p = step; p < p_max; p += step)
            if (p > bps.back())
                bps.push_back(p);
    }
    bps.push_back(p_max);
    std::sort(bps.begin(), bps.end());
    QuadratureOptions opts = q;
    opts.abs_tol = q.abs_tol * detail::pairing_envelope(mass, f);
    const auto r = integrate([&](double p) { return detail::smeared_integrand(p, mass, f); },
                             std::span<const double>(bps), opts);
    return {r.value, r.abs_error};
}

namespace detail {

/// int drho(s) smeared_free(lambda sqrt(s), f); the continuum part is done in
/// u = lambda^2 s so the range is lambda-uniform.
inline Evaluation scaled_pairing(const SpectralMeasure& m, const TestFunction& f, double lambda,
                                 const QuadratureOptions& q = kernel_quadrature()) {
    Evaluation out;
    for (const auto& atom : m.atoms()) {
        if (atom.weight == 0.0)
            continue;
        const Evaluation e = smeared_free(lambda * std::sqrt(atom.mass_sq), f, q);
        out.value += atom.weight * e.value;
        out.abs_error += atom.weight * e.abs_error;
    }
    if (f.amplitude() == 0.0)
        return out;

    const double lambda_sq = lambda * lambda;
    const double w = f.width();
    for (const auto& term : m.continuum().terms()) {
        // inner errors are tracked relative to the envelope bound, whose own
        // outer integral is cheap
        double inner_ratio = 0.0;
        auto integrand = [&](double u) {
            const double rho = term(u / lambda_sq);
            if (rho == 0.0)
                return 0.0;
            const double mu = std::sqrt(u);
            const Evaluation e = smeared_free(mu, f, q);
            const double env = pairing_envelope(mu, f);
            if (env > 0.0)
                inner_ratio = std::max(inner_ratio, e.abs_error / env);
            return rho * e.value / lambda_sq;
        };
        auto envelope = [&](double u) {
            return term(u / lambda_sq) * f.pairing_scale() * std::exp(-w * w * u / 4.0) / lambda_sq;
        };
        QuadratureOptions opts = q;
        opts.abs_tol = q.abs_tol * f.pairing_scale();
        QuadratureResult r;
        QuadratureResult env;
        // two scales: the density varies over lambda^2 * tail_scale,
        // smeared_free(sqrt(u)) decays over 4 / w^2; geometric breakpoints
        // bridge them so no panel is blind to either
        const double lo = term.support().lo * lambda_sq;
        const double hi = term.support().hi * lambda_sq;
        const double probe_scale = 4.0 / (w * w);
        std::vector<double> bps;
        for (double b : term.breakpoints())
            bps.push_back(b * lambda_sq);
        for (double step = lambda_sq * term.tail_scale(); step < probe_scale; step *= 8.0)
            bps.push_back(lo + step);
        for (double step = probe_scale; lo + step < hi; step *= 8.0) {
            bps.push_back(lo + step);
            if (!term.support().bounded())
                break;
        }
        std::sort(bps.begin(), bps.end());
        bps.erase(std::unique(bps.begin(), bps.end()), bps.end());
        std::erase_if(bps, [&](double x) { return x < lo || x > hi; });
        try {
            r = integrate(integrand, std::span<const double>(bps), opts);
            env = integrate(envelope, std::span<const double>(bps), opts);
            if (!term.support().bounded()) {
                opts.scale = probe_scale;
                const auto r_tail = integrate(integrand, bps.back(), kInfinity, opts);
                const auto env_tail = integrate(envelope, bps.back(), kInfinity, opts);
                r.value += r_tail.value;
                r.abs_error += r_tail.abs_error;
                env.value += env_tail.value;
                env.abs_error += env_tail.abs_error;
            }
        } catch (const QuadratureError& e) {
            throw DivergenceError(std::string("measure/test-function pairing divergent: ") + e.what());
        }
        if (!std::isfinite(r.value))
            throw DivergenceError("measure/test-function pairing divergent: non-finite outer integral");
        out.value += r.value;
        out.abs_error += r.abs_error + inner_ratio * (env.value + env.abs_error);
    }
    return out;
}

} // namespace detail

/// Smeared Kallen-Lehmann two-point function W(f) = int drho smeared_free.
inline Evaluation kl_two_point(const SpectralMeasure& m, const TestFunction& f) {
    return detail::scaled_pairing(m, f, 1.0);
}

} // namespace spectral_lab
