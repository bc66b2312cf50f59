/*
 * schwinger.hpp: dipole energies in the massive-boson picture of the
 * Schwinger model and the finite-energy / confinement verdict.
 *
 * The dipole state built from a profile g has vacuum-relative energy
 *
 *   E = (pi/2) int g'(x)^2 dx + (e^2/2) int g(x)^2 dx,
 *
 * with boson mass m = e / sqrt(pi). g is 1 on [0, R], 0 outside
 * (-eps, R + eps), and ramps in between (linear, or cubic smoothstep).
 * For linear ramps E = pi/eps + (e^2/2)(R + 2 eps/3).
 */
#pragma once

#include "spectral_lab/errors.hpp"
#include "spectral_lab/linear_fit.hpp"
#include "spectral_lab/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string_view>
#include <vector>

namespace spectral_lab {

enum class RampShape { Linear, Smoothstep };

class DipoleProfile {
  public:
    DipoleProfile(double R, double epsilon, RampShape ramp = RampShape::Linear)
        : R_(R), epsilon_(epsilon), ramp_(ramp) {
        if (!(R > 0.0) || !std::isfinite(R))
            throw DomainError("dipole profile: R must be > 0");
        if (!(epsilon > 0.0) || !std::isfinite(epsilon))
            throw DomainError("dipole profile: epsilon must be > 0");
    }

    double R() const { return R_; }
    double epsilon() const { return epsilon_; }
    RampShape ramp() const { return ramp_; }
    double support_length() const { return R_ + 2.0 * epsilon_; }

    /// g(x)
    double operator()(double x) const {
        if (x <= -epsilon_ || x >= R_ + epsilon_)
            return 0.0;
        if (x >= 0.0 && x <= R_)
            return 1.0;
        const double t = x < 0.0 ? (x + epsilon_) / epsilon_ : (R_ + epsilon_ - x) / epsilon_;
        return ramp_value(t);
    }

    /// g'(x), taken as 0 at the corners.
    double derivative(double x) const {
        if (x <= -epsilon_ || x >= R_ + epsilon_ || (x >= 0.0 && x <= R_))
            return 0.0;
        if (x < 0.0)
            return ramp_slope((x + epsilon_) / epsilon_) / epsilon_;
        return -ramp_slope((R_ + epsilon_ - x) / epsilon_) / epsilon_;
    }

    std::array<double, 4> breakpoints() const { return {-epsilon_, 0.0, R_, R_ + epsilon_}; }

  private:
    double ramp_value(double t) const {
        return ramp_ == RampShape::Linear ? t : t * t * (3.0 - 2.0 * t);
    }
    double ramp_slope(double t) const { return ramp_ == RampShape::Linear ? 1.0 : 6.0 * t * (1.0 - t); }

    double R_;
    double epsilon_;
    RampShape ramp_;
};

inline DipoleProfile dipole_profile(double R, double epsilon, RampShape ramp = RampShape::Linear) {
    return {R, epsilon, ramp};
}

/// Dynamically generated boson mass e / sqrt(pi).
inline double photon_mass(double e) {
    if (!(e >= 0.0) || !std::isfinite(e))
        throw DomainError("photon_mass: coupling must be >= 0");
    return e / std::sqrt(std::numbers::pi);
}

struct EnergyReport {
    double energy = 0.0;
    double gradient_part = 0.0;
    double mass_part = 0.0;
    double coupling_e = 0.0;
    double photon_mass = 0.0;
    double quadrature_error = 0.0;
};

inline EnergyReport dipole_energy(double e, const DipoleProfile& g) {
    if (!(e >= 0.0) || !std::isfinite(e))
        throw DomainError("dipole_energy: coupling must be >= 0");
    QuadratureOptions q;
    q.abs_tol = 1e-15;
    q.rel_tol = 1e-13;
    const auto bps = g.breakpoints();
    const auto grad = integrate([&](double x) { return g.derivative(x) * g.derivative(x); },
                                std::span<const double>(bps), q);
    const auto mass = integrate([&](double x) { return g(x) * g(x); }, std::span<const double>(bps), q);

    EnergyReport r;
    r.coupling_e = e;
    r.photon_mass = photon_mass(e);
    r.gradient_part = 0.5 * std::numbers::pi * grad.value;
    r.mass_part = 0.5 * e * e * mass.value;
    r.energy = r.gradient_part + r.mass_part;
    r.quadrature_error = 0.5 * std::numbers::pi * grad.abs_error + 0.5 * e * e * mass.abs_error;
    return r;
}

/// Closed form for linear ramps.
inline double linear_ramp_energy(double e, double R, double epsilon) {
    return std::numbers::pi / epsilon + 0.5 * e * e * (R + 2.0 * epsilon / 3.0);
}

/// Closed form for either ramp; the smoothstep ramp has int g'^2 = 1.2 / eps
/// and int g^2 = 13 eps / 35 per ramp.
inline double ramp_energy(double e, double R, double epsilon, RampShape ramp) {
    if (ramp == RampShape::Linear)
        return linear_ramp_energy(e, R, epsilon);
    return 1.2 * std::numbers::pi / epsilon + 0.5 * e * e * (R + 26.0 * epsilon / 35.0);
}

inline std::string_view to_string(RampShape r) { return r == RampShape::Linear ? "linear" : "smoothstep"; }

enum class ConfinementKind { Confined, FiniteEnergy };

inline std::string_view to_string(ConfinementKind k) {
    return k == ConfinementKind::Confined ? "Confined" : "FiniteEnergy";
}

struct ConfinementVerdict {
    ConfinementKind kind = ConfinementKind::FiniteEnergy;
    double growth_slope = 0.0;
    double slope_stderr = 0.0;
    double upper_slope = 0.0; ///< slope over the upper half of the grid
    double lower_slope = 0.0;
    std::vector<double> energies;
};

inline std::vector<double> default_R_grid() {
    std::vector<double> grid;
    for (int i = 1; i <= 10; ++i)
        grid.push_back(10.0 * i);
    return grid;
}

/// Linear-growth test on E(R). Confined when the overall slope and the slope
/// over the upper half of the grid both exceed 3 stderr and growth has not
/// slowed to below half the lower-half slope (a divergent limsup rather than a
/// saturating curve).
inline ConfinementVerdict confinement_verdict_from(std::span<const double> R_grid,
                                                   std::span<const double> energies) {
    const std::size_t n = R_grid.size();
    if (energies.size() != n)
        throw FitError("confinement: R grid and energies differ in length");
    if (n < 5)
        throw DomainError("confinement: R grid needs >= 5 points");
    for (std::size_t i = 1; i < n; ++i)
        if (!(R_grid[i] > R_grid[i - 1]))
            throw DomainError("confinement: R grid must be strictly ascending");
    if (!(R_grid.front() > 0.0) || R_grid.back() < 10.0 * R_grid.front())
        throw DomainError("confinement: R grid must be positive and span >= 1 decade");

    double scale = 0.0;
    for (double E : energies) {
        if (!std::isfinite(E))
            throw FitError("confinement: non-finite energy");
        scale = std::max(scale, std::abs(E));
    }
    const double noise = 16.0 * std::numeric_limits<double>::epsilon() * scale;
    for (std::size_t i = 1; i < n; ++i)
        if (energies[i] < energies[i - 1] - noise)
            throw FitError("confinement fit degenerate: energies are not monotone in R");

    auto fit = [&](std::size_t from, std::size_t count) {
        LineFit f = fit_line(R_grid.subspan(from, count), energies.subspan(from, count));
        const double span = R_grid[from + count - 1] - R_grid[from];
        f.slope_stderr = std::max(f.slope_stderr, noise / span);
        return f;
    };
    const std::size_t half = (n + 1) / 2;
    const LineFit all = fit(0, n);
    const LineFit lower = fit(0, half);
    const LineFit upper = fit(n - half, half);

    ConfinementVerdict v;
    v.growth_slope = all.slope;
    v.slope_stderr = all.slope_stderr;
    v.lower_slope = lower.slope;
    v.upper_slope = upper.slope;
    v.energies.assign(energies.begin(), energies.end());
    const bool grows = all.slope > 3.0 * all.slope_stderr;
    const bool keeps_growing = upper.slope > 3.0 * upper.slope_stderr && upper.slope >= 0.5 * lower.slope;
    v.kind = grows && keeps_growing ? ConfinementKind::Confined : ConfinementKind::FiniteEnergy;
    return v;
}

inline ConfinementVerdict confinement_verdict(double e, double epsilon, std::span<const double> R_grid,
                                              RampShape ramp = RampShape::Linear) {
    std::vector<double> energies;
    energies.reserve(R_grid.size());
    for (double R : R_grid)
        energies.push_back(dipole_energy(e, dipole_profile(R, epsilon, ramp)).energy);
    return confinement_verdict_from(R_grid, energies);
}

} // namespace spectral_lab
