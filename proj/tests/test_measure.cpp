#include "spectral_lab/measure.hpp"
#include "spectral_lab/random_measure.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace spectral_lab;

namespace {

SpectralMeasure atom_plus_box(double weight, double density, double lo, double hi) {
    return SpectralMeasure({{1.0, weight}}, ContinuousDensity{DensityTerm::constant(density, lo, hi)});
}

SpectralMeasure flat_unbounded() {
    return SpectralMeasure({}, ContinuousDensity{DensityTerm::constant(1.0, 0.0, kInfinity)});
}

} // namespace

TEST(TotalMass, SingleAtom) {
    const auto t = total_mass(SpectralMeasure::free_field(2.5));
    EXPECT_EQ(t.value, 1.0);
    EXPECT_TRUE(t.finite());
}

TEST(TotalMass, Empty) { EXPECT_EQ(total_mass(SpectralMeasure{}).value, 0.0); }

TEST(TotalMass, AtomPlusBox) {
    const auto t = total_mass(atom_plus_box(0.6, 0.4, 1.0, 2.0));
    EXPECT_NEAR(t.value, 1.0, 1e-10);
    EXPECT_LE(t.quadrature_error, 1e-10);
}

TEST(TotalMass, FlatUnboundedDiverges) {
    const auto t = total_mass(flat_unbounded());
    EXPECT_FALSE(t.finite());
    EXPECT_EQ(t.value, kInfinity);
}

TEST(TotalMass, ClosedFormFamilies) {
    // s^-2 on [1, inf) has mass 1; 3 s e^{-s/2} has 3 * 2^2 * Gamma(2) = 12
    const SpectralMeasure power({}, ContinuousDensity{DensityTerm::power(1.0, -2.0, 1.0, kInfinity)});
    EXPECT_NEAR(total_mass(power).value, 1.0, 1e-10);
    const SpectralMeasure cut({}, ContinuousDensity{DensityTerm::exp_cutoff(3.0, 1.0, 2.0, 0.0)});
    EXPECT_NEAR(total_mass(cut).value, 12.0, 1e-9);
    const SpectralMeasure bump({}, ContinuousDensity{DensityTerm::bump(0.7, 3.0, 8.0)});
    EXPECT_NEAR(total_mass(bump).value, 0.7, 1e-10);
    const SpectralMeasure tab({}, ContinuousDensity{DensityTerm::tabulated({0.0, 1.0, 3.0}, {0.0, 2.0, 0.0})});
    EXPECT_NEAR(total_mass(tab).value, 3.0, 1e-12);
    // s^-1/2 on [1, inf) and s^0 diverge; s^-1 diverges logarithmically
    for (double a : {-0.5, 0.0, -1.0}) {
        const SpectralMeasure m({}, ContinuousDensity{DensityTerm::power(1.0, a, 1.0, kInfinity)});
        EXPECT_FALSE(total_mass(m).finite()) << a;
    }
}

TEST(TotalMass, Additive) {
    const SpectralMeasure a({{1.0, 0.3}}, ContinuousDensity{DensityTerm::bump(0.2, 2.0, 5.0)});
    const SpectralMeasure b({{4.0, 0.1}}, ContinuousDensity{DensityTerm::exp_cutoff(1.0, 0.5, 3.0, 1.0)});
    EXPECT_NEAR(total_mass(a + b).value, total_mass(a).value + total_mass(b).value, 1e-10);
    const SpectralMeasure merged = SpectralMeasure::free_field(1.0, 0.25) + SpectralMeasure::free_field(1.0, 0.5);
    ASSERT_EQ(merged.atoms().size(), 1u);
    EXPECT_EQ(merged.atoms()[0].weight, 0.75);
}

TEST(Decompose, FreeField) {
    const auto d = decompose(SpectralMeasure::free_field(1.0));
    ASSERT_EQ(d.atoms.size(), 1u);
    EXPECT_EQ(d.atoms[0], (SpectralAtom{1.0, 1.0}));
    EXPECT_TRUE(d.continuum.terms().empty());
    EXPECT_EQ(continuum_mass(d.continuum).value, 0.0);
}

TEST(Decompose, PureContinuum) {
    const auto m = SpectralMeasure({}, ContinuousDensity{DensityTerm::constant(0.4, 2.0, 3.0)});
    const auto d = decompose(m);
    EXPECT_TRUE(d.atoms.empty());
    EXPECT_EQ(z_at(m, 1.0), 0.0);
}

TEST(Decompose, RoundTrip) {
    const auto m = atom_plus_box(0.6, 0.4, 2.0, 3.0);
    const auto d = decompose(m);
    const auto back = compose(d.atoms, d.continuum);
    EXPECT_EQ(back, m);
    for (double s = 0.0; s <= 4.0; s += 0.125)
        EXPECT_NEAR(back.continuum()(s), m.continuum()(s), 1e-12) << s;
}

TEST(ZAt, Lookups) {
    EXPECT_EQ(z_at(SpectralMeasure::free_field(1.0), 1.0), 1.0);
    const SpectralMeasure two({{1.0, 0.6}, {4.0, 0.2}});
    EXPECT_EQ(z_at(two, 4.0), 0.2);
    EXPECT_EQ(z_at(two, 2.0), 0.0);
    EXPECT_EQ(z_at(two, 4.0 + 1e-12), 0.2);
    EXPECT_THROW(z_at(two, 2.5, 2.0), AmbiguityError);
    EXPECT_THROW(z_at(two, 1.0, 0.0), DomainError);
}

TEST(SumRule, Verdicts) {
    const auto free = check_etcr_sum_rule(SpectralMeasure::free_field(1.0));
    EXPECT_EQ(free.status, SumRuleStatus::Holds);

    const auto mixed = atom_plus_box(0.6, 0.4, 1.0, 2.0);
    EXPECT_EQ(check_etcr_sum_rule(mixed).status, SumRuleStatus::Holds);
    // with the sum rule Z cannot exceed one
    EXPECT_LE(z_at(mixed, 1.0), 1.0);

    EXPECT_EQ(check_etcr_sum_rule(flat_unbounded()).status, SumRuleStatus::Divergent);
    const auto fails = check_etcr_sum_rule(atom_plus_box(0.6, 0.5, 1.0, 2.0));
    EXPECT_EQ(fails.status, SumRuleStatus::Fails);
    EXPECT_NEAR(fails.total.value, 1.1, 1e-10);
    EXPECT_THROW(check_etcr_sum_rule(mixed, 0.0), DomainError);
}

TEST(SumRule, ImpliesZAtMostOne) {
    for (std::uint64_t i = 0; i < 20; ++i) {
        const SpectralMeasure m = random_finite_measure(11, i);
        const double total = total_mass(m).value;
        const SpectralMeasure normalized = m.scaled(1.0 / total);
        ASSERT_EQ(check_etcr_sum_rule(normalized, 1e-9).status, SumRuleStatus::Holds);
        for (const auto& a : normalized.atoms())
            EXPECT_LE(a.weight, 1.0 + 1e-12);
    }
}

TEST(Renormalize, Cases) {
    const auto free = SpectralMeasure::free_field(1.0);
    EXPECT_EQ(renormalize(free), free);

    const auto half = atom_plus_box(0.5, 0.5, 2.0, 3.0);
    const auto g = renormalize(half);
    EXPECT_NEAR(total_mass(g).value, 2.0, 1e-10);
    EXPECT_EQ(z_at(g, 1.0), 1.0);

    const auto pure = SpectralMeasure({}, ContinuousDensity{DensityTerm::constant(1.0, 2.0, 3.0)});
    try {
        renormalize(pure);
        FAIL();
    } catch (const DomainError& e) {
        EXPECT_STREQ(e.what(), "renormalization undefined at Z=0");
    }
    EXPECT_THROW(renormalize(half, 7.0), DomainError);
}

TEST(Renormalize, TotalIsInverseZ) {
    for (std::uint64_t i = 0; i < 20; ++i) {
        SpectralMeasure m = random_finite_measure(3, i);
        m = m.scaled(1.0 / total_mass(m).value);
        double Z = m.atoms()[0].weight;
        double lightest = m.atoms()[0].mass_sq;
        for (const auto& a : m.atoms())
            if (a.mass_sq < lightest) {
                lightest = a.mass_sq;
                Z = a.weight;
            }
        EXPECT_NEAR(total_mass(renormalize(m)).value, 1.0 / Z, 1e-10 / Z) << i;
    }
}

TEST(Invariants, AtomsAndDensities) {
    EXPECT_THROW(SpectralMeasure({{1.0, -0.1}}), DomainError);
    EXPECT_THROW(SpectralMeasure({{-1.0, 0.1}}), DomainError);
    EXPECT_THROW(SpectralMeasure({{1.0, 0.1}, {1.0, 0.2}}), DomainError);
    EXPECT_THROW(DensityTerm::constant(-1.0, 0.0, 1.0), DomainError);
    EXPECT_THROW(DensityTerm::constant(1.0, 2.0, 1.0), DomainError);
    EXPECT_THROW(DensityTerm::bump(1.0, 0.0, kInfinity), DomainError);
    EXPECT_THROW(DensityTerm::tabulated({0.0, 1.0}, {1.0, -1.0}), DomainError);
    EXPECT_THROW(DensityTerm::tabulated({1.0, 0.0}, {1.0, 1.0}), DomainError);
    const DensityTerm box = DensityTerm::constant(2.0, 1.0, 2.0);
    EXPECT_EQ(box(0.5), 0.0);
    EXPECT_EQ(box(1.5), 2.0);
    EXPECT_EQ(box(2.5), 0.0);
}

TEST(PolyBound, CertificatesHoldOnGrid) {
    const std::vector<DensityTerm> terms{
        DensityTerm::constant(1.0, 0.0, kInfinity), DensityTerm::power(2.0, 1.5, 1.0, kInfinity),
        DensityTerm::power(1.0, -1.0, 1.0, kInfinity), DensityTerm::exp_cutoff(1.0, 2.0, 5.0, 0.0),
        DensityTerm::bump(3.0, 1.0, 4.0)};
    for (const auto& t : terms) {
        const ContinuousDensity d{t};
        const PolyBound b = d.poly_bound();
        EXPECT_FALSE(find_poly_bound_violation(d, b).has_value()) << t.family_name();
    }
}

TEST(PolyBound, DeclaredBoundIsChecked) {
    EXPECT_NO_THROW(ContinuousDensity({DensityTerm::constant(1.0, 0.0, kInfinity)}, PolyBound{1.0, 1}));
    // int_0^L s ds = L^2 / 2 outgrows C (1 + L)
    EXPECT_THROW(ContinuousDensity({DensityTerm::power(1.0, 1.0, 0.0, kInfinity)}, PolyBound{10.0, 1}),
                 DomainError);
    EXPECT_THROW(ContinuousDensity({DensityTerm::constant(1.0, 0.0, 1.0)}, PolyBound{0.0, 0}), DomainError);
}

TEST(RandomMeasure, SeededAndFinite) {
    for (std::uint64_t i = 0; i < 10; ++i) {
        const auto a = random_finite_measure(42, i);
        EXPECT_EQ(a, random_finite_measure(42, i));
        EXPECT_GE(a.atoms().size(), 1u);
        EXPECT_LE(a.atoms().size(), 3u);
        EXPECT_TRUE(total_mass(a).finite());
    }
    EXPECT_FALSE(random_finite_measure(42, 0) == random_finite_measure(43, 0));
}
