#include "spectral_lab/schwinger.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

using namespace spectral_lab;

namespace {

constexpr double kPi = std::numbers::pi;

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

std::vector<double> grid_10_to_100() {
    std::vector<double> R;
    for (int i = 1; i <= 10; ++i)
        R.push_back(10.0 * i);
    return R;
}

} // namespace

TEST(Profile, ShapeValues) {
    const auto g = dipole_profile(1.0, 1.0);
    EXPECT_EQ(g(0.5), 1.0);
    EXPECT_EQ(g(-0.5), 0.5);
    EXPECT_EQ(g(1.5), 0.5);
    EXPECT_EQ(g(2.0), 0.0);
    EXPECT_EQ(g(-1.0), 0.0);
    EXPECT_NEAR(dipole_profile(10.0, 0.1).support_length(), 10.2, 1e-15);
    const auto s = dipole_profile(1.0, 1.0, RampShape::Smoothstep);
    EXPECT_EQ(s(-0.5), 0.5);
    EXPECT_EQ(s(0.0), 1.0);
    for (double x = -1.5; x <= 2.5; x += 0.01) {
        EXPECT_GE(g(x), 0.0);
        EXPECT_LE(g(x), 1.0);
        EXPECT_GE(s(x), 0.0);
        EXPECT_LE(s(x), 1.0);
    }
}

TEST(Profile, SquareIntegralAgainstBoost) {
    const auto g = dipole_profile(10.0, 1.0);
    using boost::math::quadrature::gauss_kronrod;
    double total = 0.0;
    const std::array<double, 4> bps{-1.0, 0.0, 10.0, 11.0};
    for (std::size_t i = 0; i + 1 < bps.size(); ++i)
        total += gauss_kronrod<double, 31>::integrate([&](double x) { return g(x) * g(x); }, bps[i], bps[i + 1]);
    EXPECT_NEAR(total, 10.0 + 2.0 / 3.0, 1e-13);
}

TEST(Profile, DomainErrors) {
    EXPECT_THROW(dipole_profile(0.0, 1.0), DomainError);
    EXPECT_THROW(dipole_profile(1.0, 0.0), DomainError);
    EXPECT_THROW(dipole_profile(-1.0, 1.0), DomainError);
    EXPECT_THROW(dipole_profile(1.0, std::nan("")), DomainError);
}

TEST(PhotonMass, Values) {
    EXPECT_NEAR(photon_mass(std::sqrt(kPi)), 1.0, 1e-15);
    EXPECT_EQ(photon_mass(0.0), 0.0);
    EXPECT_NEAR(photon_mass(1.0), 0.5641895835477563, 1e-15);
    EXPECT_THROW(photon_mass(-1.0), DomainError);
}

TEST(Energy, Examples) {
    const auto r = dipole_energy(1.0, dipole_profile(10.0, 1.0));
    EXPECT_NEAR(r.energy, kPi + 0.5 * (10.0 + 2.0 / 3.0), 1e-12);
    EXPECT_NEAR(r.energy, 8.47492598692312615, 1e-12);
    for (double R : {1.0, 10.0, 1000.0})
        EXPECT_NEAR(dipole_energy(0.0, dipole_profile(R, 1.0)).energy, kPi, 1e-13);
    const auto m = dipole_energy(std::sqrt(kPi), dipole_profile(10.0, 1.0));
    EXPECT_NEAR(m.photon_mass, 1.0, 1e-15);
    EXPECT_NEAR(m.mass_part, 0.5 * kPi * (10.0 + 2.0 / 3.0), 1e-12);
    EXPECT_THROW(dipole_energy(-1.0, dipole_profile(1.0, 1.0)), DomainError);
}

TEST(Energy, ClosedFormAcrossParameterBox) {
    for (double e : {0.0, 0.5, 1.0, 2.0})
        for (double R : {1.0, 3.0, 10.0, 40.0, 100.0})
            for (double eps : {0.1, 0.7, 2.0, 5.0})
                for (RampShape ramp : {RampShape::Linear, RampShape::Smoothstep}) {
                    const auto r = dipole_energy(e, dipole_profile(R, eps, ramp));
                    EXPECT_LT(rel(r.energy, ramp_energy(e, R, eps, ramp)), 1e-8)
                        << e << " " << R << " " << eps << " " << to_string(ramp);
                    EXPECT_LE(std::abs(r.energy - r.gradient_part - r.mass_part), 1e-12);
                    EXPECT_GE(r.gradient_part, 0.0);
                    EXPECT_GE(r.mass_part, 0.0);
                }
}

TEST(Energy, Monotonicity) {
    double prev = 0.0;
    for (double R = 1.0; R <= 50.0; R += 7.0) {
        const double E = dipole_energy(0.7, dipole_profile(R, 1.0)).energy;
        EXPECT_GT(E, prev);
        prev = E;
    }
    double prev_grad = std::numeric_limits<double>::infinity();
    double prev_mass = 0.0;
    for (double eps = 0.1; eps <= 5.0; eps *= 1.5) {
        const auto r = dipole_energy(1.0, dipole_profile(10.0, eps));
        EXPECT_LT(r.gradient_part, prev_grad);
        EXPECT_GT(r.mass_part, prev_mass);
        prev_grad = r.gradient_part;
        prev_mass = r.mass_part;
    }
}

TEST(Confinement, UnitCouplingIsConfined) {
    const auto R = grid_10_to_100();
    const auto v = confinement_verdict(1.0, 1.0, R);
    EXPECT_EQ(v.kind, ConfinementKind::Confined);
    EXPECT_NEAR(v.growth_slope, 0.5, 0.005);
    EXPECT_GT(v.growth_slope, 3.0 * v.slope_stderr);
    EXPECT_EQ(v.energies.size(), R.size());
}

TEST(Confinement, SlopeIsHalfCouplingSquared) {
    const auto R = default_R_grid();
    for (double e : {0.06, 0.3, 1.0, 2.0})
        for (RampShape ramp : {RampShape::Linear, RampShape::Smoothstep}) {
            const auto v = confinement_verdict(e, 1.0, R, ramp);
            EXPECT_EQ(v.kind, ConfinementKind::Confined) << e;
            EXPECT_NEAR(v.growth_slope, 0.5 * e * e, 0.01 * 0.5 * e * e) << e;
        }
}

TEST(Confinement, ZeroCouplingHasFiniteEnergy) {
    const auto v = confinement_verdict(0.0, 1.0, default_R_grid());
    EXPECT_EQ(v.kind, ConfinementKind::FiniteEnergy);
}

TEST(Confinement, BoundedSyntheticEnergy) {
    const auto R = grid_10_to_100();
    std::vector<double> E;
    for (double r : R)
        E.push_back(1.0 - 1.0 / r);
    EXPECT_EQ(confinement_verdict_from(R, E).kind, ConfinementKind::FiniteEnergy);
    std::vector<double> lin;
    for (double r : R)
        lin.push_back(2.0 + 0.01 * r);
    EXPECT_EQ(confinement_verdict_from(R, lin).kind, ConfinementKind::Confined);
}

TEST(Confinement, GridValidation) {
    const std::vector<double> short_grid{10.0, 100.0};
    EXPECT_THROW(confinement_verdict(1.0, 1.0, short_grid), DomainError);
    const std::vector<double> narrow{10.0, 11.0, 12.0, 13.0, 14.0};
    EXPECT_THROW(confinement_verdict(1.0, 1.0, narrow), DomainError);
    const std::vector<double> unsorted{10.0, 30.0, 20.0, 50.0, 100.0};
    EXPECT_THROW(confinement_verdict(1.0, 1.0, unsorted), DomainError);
    const auto R = grid_10_to_100();
    std::vector<double> down;
    for (double r : R)
        down.push_back(-r);
    EXPECT_THROW(confinement_verdict_from(R, down), FitError);
}
