#include "spectral_lab/ftscale.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace spectral_lab;

namespace {

constexpr double kPi = std::numbers::pi;

PowerLawSpec law(double lambda, int s, ShellKind shell = ShellKind::Gaussian) {
    PowerLawSpec p;
    p.pl_exponent = lambda;
    p.space_dim = s;
    p.regularization_order = minimum_regularization_order(lambda, s);
    p.shell = shell;
    return p;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

} // namespace

// Position-space transforms: -pi |x| (s = 1, p^-2), 2 pi^2 / |x| (s = 3,
// p^-2), -pi^2 |x| (s = 3, p^-4). Against a unit shell of radius r smeared
// with radial variance v these give -pi r, 2 pi^2 / r and -pi^2 (r + v / r)
// up to terms of order exp(-1 / (2 kappa^2)).
TEST(SmearedPowerFt, ExactPairings) {
    for (double r : {1.0, 3.7}) {
        EXPECT_LT(rel(smeared_power_ft(law(-2, 1), r).value, -kPi * r), 1e-9) << r;
        EXPECT_LT(rel(smeared_power_ft(law(-2, 3), r).value, 2.0 * kPi * kPi / r), 1e-9) << r;
        const double kappa = 0.1;
        EXPECT_LT(rel(smeared_power_ft(law(-4, 3), r).value, -kPi * kPi * r * (1.0 + kappa * kappa)), 1e-9) << r;
        // order-8 B-spline with knot spacing h = 2 kappa r / 8 has variance 8 h^2 / 12
        const double h = 2.0 * kappa / 8.0;
        EXPECT_LT(rel(smeared_power_ft(law(-4, 3, ShellKind::Bump), r).value,
                      -kPi * kPi * r * (1.0 + 8.0 * h * h / 12.0)),
                  1e-9)
            << r;
        EXPECT_LT(rel(smeared_power_ft(law(-2, 1, ShellKind::Bump), r).value, -kPi * r), 1e-9) << r;
    }
}

TEST(SmearedPowerFt, OneDimensionalGrowthIsLinear) {
    const double ratio = smeared_power_ft(law(-2, 1), 2.0).value / smeared_power_ft(law(-2, 1), 1.0).value;
    EXPECT_NEAR(ratio, 2.0, 1e-9);
}

TEST(SmearedPowerFt, DeltaAtOriginMissesNarrowShells) {
    // F(1) is a point mass at x = 0; the shell's density there is ~exp(-1/(2 kappa^2))
    double prev = kInfinity;
    for (double kappa : {0.6, 0.4, 0.25, 0.1}) {
        PowerLawSpec p = law(0.0, 3);
        p.relative_width = kappa;
        const double v = std::abs(smeared_power_ft(p, 1.0).value);
        EXPECT_LT(v, prev) << kappa;
        prev = v;
    }
    EXPECT_LT(prev, 1e-9);
}

TEST(SmearedPowerFt, ExtraSubtractionsDoNotChangePairings) {
    for (auto base : {law(-2, 1), law(-2, 3), law(-4, 3), law(-1, 2)}) {
        const double ref = smeared_power_ft(base, 2.0).value;
        for (int extra = 1; extra <= 3; ++extra) {
            PowerLawSpec p = base;
            p.regularization_order += extra;
            EXPECT_LT(rel(smeared_power_ft(p, 2.0).value, ref), 1e-9) << base.pl_exponent << " " << extra;
        }
    }
}

TEST(SmearedPowerFt, Validation) {
    PowerLawSpec p = law(-4, 3);
    p.regularization_order = 0;
    try {
        smeared_power_ft(p, 1.0);
        FAIL();
    } catch (const DomainError& e) {
        EXPECT_NE(std::string(e.what()).find("regularization_order >= max(0, ceil((-pl_exponent - space_dim)/2))"),
                  std::string::npos)
            << e.what();
    }
    EXPECT_THROW(smeared_power_ft(law(-2, 3), 0.0), DomainError);
    EXPECT_THROW(smeared_power_ft(law(-2, 2, ShellKind::Bump), 1.0), DomainError);
    EXPECT_THROW(smeared_power_ft(law(-2, 4), 1.0), DomainError);
    // lambda + s + 2j = 0 is a pole of the regularized family
    EXPECT_NE(check_power_law_spec(law(-3, 1)).find("pole"), std::string::npos);
    EXPECT_NE(check_power_law_spec(law(-3, 3)).find("pole"), std::string::npos);
    PowerLawSpec wide = law(-2, 3);
    wide.relative_width = 1.5;
    EXPECT_FALSE(check_power_law_spec(wide).empty());
    EXPECT_EQ(minimum_regularization_order(-4, 3), 1);
    EXPECT_EQ(minimum_regularization_order(-2, 1), 1);
    EXPECT_EQ(minimum_regularization_order(-2, 3), 0);
    EXPECT_EQ(minimum_regularization_order(-7, 1), 3);
}

TEST(FitPositionExponent, SupportedTable) {
    const auto radii = default_probe_radii();
    const std::vector<std::pair<PowerLawSpec, double>> table{
        {law(-2, 1), 1.0}, {law(-2, 3), -1.0}, {law(-4, 3), 1.0}, {law(-1, 2), -1.0}};
    for (const auto& [spec, expected] : table) {
        const auto fit = fit_position_exponent(spec, radii);
        EXPECT_NEAR(fit.fitted_exponent, expected, 0.05) << spec.pl_exponent << " " << spec.space_dim;
        EXPECT_NEAR(fit.fitted_exponent + spec.pl_exponent + spec.space_dim, 0.0, 0.05);
        EXPECT_EQ(expected_position_exponent(spec), expected);
        EXPECT_EQ(fit.probe_radii.size(), radii.size());
        EXPECT_GE(fit.std_error, 0.0);
    }
}

TEST(FitPositionExponent, ShellShapeInvariance) {
    const auto radii = default_probe_radii();
    for (auto [lambda, s] : {std::pair{-2.0, 1}, std::pair{-2.0, 3}, std::pair{-4.0, 3}}) {
        const double g = fit_position_exponent(law(lambda, s), radii).fitted_exponent;
        const double b = fit_position_exponent(law(lambda, s, ShellKind::Bump), radii).fitted_exponent;
        EXPECT_LT(std::abs(g - b), 0.05) << lambda << " " << s;
    }
}

TEST(FitPositionExponent, RadiusAndSignChecks) {
    const std::vector<double> few{1, 2, 4, 8, 16};
    EXPECT_THROW(fit_position_exponent(law(-2, 3), few), DomainError);
    const std::vector<double> narrow{1, 1.2, 1.4, 1.6, 1.8, 2.0};
    EXPECT_THROW(fit_position_exponent(law(-2, 3), narrow), DomainError);
    const std::vector<double> radii{1, 2, 4, 8, 16, 32};
    std::vector<Evaluation> pairings;
    for (double r : radii)
        pairings.push_back({1.0 / r, 0.0});
    EXPECT_NEAR(fit_exponent_from(radii, pairings).fitted_exponent, -1.0, 1e-12);
    pairings[3].value = -pairings[3].value;
    EXPECT_THROW(fit_exponent_from(radii, pairings), FitError);
}
