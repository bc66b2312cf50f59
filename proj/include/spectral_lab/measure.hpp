/*
 * measure.hpp: polynomially-bounded spectral measures
 *
 * A SpectralMeasure is held constructively: a finite list of point masses
 * (atoms) plus a continuous density built from a small registered family of
 * closed-form terms. The discrete/continuous split is therefore structural and
 * decompose() is exact. Every density carries a certificate (C, N) with
 *
 *     int_0^L density <= C (1 + L^N)    for all L >= 0.
 *
 * Operations:
 *   total_mass           atoms + integral of the density, or +inf
 *   decompose / compose  split into / assemble from (atoms, continuum)
 *   z_at                 weight of the atom at a given mass^2
 *   check_etcr_sum_rule  does the total mass equal one
 *   renormalize          dg = drho / Z
 */
#pragma once

#include "spectral_lab/errors.hpp"
#include "spectral_lab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

namespace spectral_lab {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Default tolerances.
inline constexpr double kSumRuleTol = 1e-8;
inline constexpr double kAtomMatchTol = 1e-9;

struct SpectralAtom {
    double mass_sq = 0.0;
    double weight = 0.0;

    friend bool operator==(const SpectralAtom&, const SpectralAtom&) = default;
};

/// Interval [lo, hi] in mass^2; hi may be +inf.
struct Support {
    double lo = 0.0;
    double hi = kInfinity;

    bool bounded() const { return std::isfinite(hi); }
    bool contains(double s) const { return s >= lo && s <= hi; }
    friend bool operator==(const Support&, const Support&) = default;
};

/// Certificate int_0^L density <= C (1 + L^N).
struct PolyBound {
    double C = 0.0;
    int N = 0;

    bool holds(double L, double cumulative) const {
        return cumulative <= C * (1.0 + std::pow(L, N)) * (1.0 + 1e-12);
    }
    friend bool operator==(const PolyBound&, const PolyBound&) = default;
};

namespace family {

struct Constant {
    double value = 0.0;
    friend bool operator==(const Constant&, const Constant&) = default;
};

/// coefficient * (m^2)^exponent
struct Power {
    double coefficient = 0.0;
    double exponent = 0.0;
    friend bool operator==(const Power&, const Power&) = default;
};

/// Smooth bump exp(-1/(1-t^2)) on the support, normalized to `mass`.
struct Bump {
    double mass = 0.0;
    friend bool operator==(const Bump&, const Bump&) = default;
};

/// coefficient * (m^2)^exponent * exp(-m^2 / scale)
struct ExpCutoff {
    double coefficient = 0.0;
    double exponent = 0.0;
    double scale = 1.0;
    friend bool operator==(const ExpCutoff&, const ExpCutoff&) = default;
};

/// Piecewise-linear interpolation of (mass_sq, value) nodes, zero outside.
struct Tabulated {
    std::vector<double> mass_sq;
    std::vector<double> values;
    friend bool operator==(const Tabulated&, const Tabulated&) = default;
};

} // namespace family

using DensityFamily =
    std::variant<family::Constant, family::Power, family::Bump, family::ExpCutoff, family::Tabulated>;

namespace detail {

// int_{-1}^{1} exp(-1/(1-t^2)) dt
inline constexpr double kBumpNorm = 0.443993816168079437823048921171;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

inline std::string fmt_num(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

} // namespace detail

/// One closed-form term of a continuous spectral density.
class DensityTerm {
  public:
    DensityTerm(DensityFamily fam, Support support) : family_(std::move(fam)), support_(support) {
        validate();
    }

    static DensityTerm constant(double value, double lo, double hi) {
        return {family::Constant{value}, {lo, hi}};
    }
    static DensityTerm power(double coefficient, double exponent, double lo, double hi) {
        return {family::Power{coefficient, exponent}, {lo, hi}};
    }
    static DensityTerm bump(double mass, double lo, double hi) { return {family::Bump{mass}, {lo, hi}}; }
    static DensityTerm exp_cutoff(double coefficient, double exponent, double scale, double lo,
                                  double hi = kInfinity) {
        return {family::ExpCutoff{coefficient, exponent, scale}, {lo, hi}};
    }
    static DensityTerm tabulated(std::vector<double> mass_sq, std::vector<double> values) {
        if (mass_sq.empty())
            throw DomainError("tabulated density needs at least two nodes");
        const Support s{mass_sq.front(), mass_sq.back()};
        return {family::Tabulated{std::move(mass_sq), std::move(values)}, s};
    }

    const DensityFamily& family() const { return family_; }
    const Support& support() const { return support_; }

    std::string_view family_name() const {
        return std::visit(detail::overloaded{
                              [](const family::Constant&) { return std::string_view("constant"); },
                              [](const family::Power&) { return std::string_view("power"); },
                              [](const family::Bump&) { return std::string_view("bump"); },
                              [](const family::ExpCutoff&) { return std::string_view("exp_cutoff"); },
                              [](const family::Tabulated&) { return std::string_view("tabulated"); },
                          },
                          family_);
    }

    double operator()(double s) const {
        if (!support_.contains(s))
            return 0.0;
        return std::visit(
            detail::overloaded{
                [](const family::Constant& c) { return c.value; },
                [s](const family::Power& p) { return p.coefficient * std::pow(s, p.exponent); },
                [this, s](const family::Bump& b) {
                    const double half = 0.5 * (support_.hi - support_.lo);
                    const double t = (s - 0.5 * (support_.hi + support_.lo)) / half;
                    if (std::abs(t) >= 1.0)
                        return 0.0;
                    return b.mass / (detail::kBumpNorm * half) * std::exp(-1.0 / (1.0 - t * t));
                },
                [s](const family::ExpCutoff& e) {
                    return e.coefficient * std::pow(s, e.exponent) * std::exp(-s / e.scale);
                },
                [s](const family::Tabulated& t) {
                    auto it = std::upper_bound(t.mass_sq.begin(), t.mass_sq.end(), s);
                    if (it == t.mass_sq.end())
                        return t.values.back();
                    const auto i = static_cast<std::size_t>(it - t.mass_sq.begin());
                    if (i == 0)
                        return t.values.front();
                    const double x0 = t.mass_sq[i - 1];
                    const double x1 = t.mass_sq[i];
                    const double w = (s - x0) / (x1 - x0);
                    return (1.0 - w) * t.values[i - 1] + w * t.values[i];
                },
            },
            family_);
    }

    /// Points where the term is not smooth, ascending; includes both support
    /// ends when they are finite.
    std::vector<double> breakpoints() const {
        if (const auto* t = std::get_if<family::Tabulated>(&family_))
            return t->mass_sq;
        std::vector<double> out{support_.lo};
        if (support_.bounded())
            out.push_back(support_.hi);
        return out;
    }

    /// Same term multiplied by k >= 0.
    DensityTerm scaled(double k) const {
        if (!(k >= 0.0) || !std::isfinite(k))
            throw DomainError("density scale factor must be finite and >= 0");
        DensityFamily fam = family_;
        std::visit(detail::overloaded{
                       [k](family::Constant& c) { c.value *= k; },
                       [k](family::Power& p) { p.coefficient *= k; },
                       [k](family::Bump& b) { b.mass *= k; },
                       [k](family::ExpCutoff& e) { e.coefficient *= k; },
                       [k](family::Tabulated& t) {
                           for (double& v : t.values)
                               v *= k;
                       },
                   },
                   fam);
        return {std::move(fam), support_};
    }

    /// Proven polynomial bound for this term.
    PolyBound certificate() const {
        const double lo = support_.lo;
        const double hi = support_.hi;
        auto finite_total = [](double total) {
            return PolyBound{std::max(total, std::numeric_limits<double>::min()), 0};
        };
        return std::visit(
            detail::overloaded{
                [&](const family::Constant& c) {
                    if (support_.bounded())
                        return finite_total(c.value * (hi - lo));
                    return PolyBound{std::max(c.value, std::numeric_limits<double>::min()), 1};
                },
                [&](const family::Power& p) {
                    const double a = p.exponent + 1.0;
                    if (support_.bounded()) {
                        const double total = a == 0.0 ? p.coefficient * std::log(hi / lo)
                                                       : p.coefficient *
                                                             (std::pow(hi, a) - std::pow(lo, a)) / a;
                        return finite_total(total);
                    }
                    if (a > 0.0)
                        return PolyBound{std::max(p.coefficient / a, std::numeric_limits<double>::min()),
                                         static_cast<int>(std::ceil(a))};
                    if (a == 0.0) // c ln(L/lo) <= c L / lo
                        return PolyBound{std::max(p.coefficient / lo, std::numeric_limits<double>::min()),
                                         1};
                    return finite_total(p.coefficient * std::pow(lo, a) / (-a));
                },
                [&](const family::Bump& b) { return finite_total(b.mass); },
                [&](const family::ExpCutoff& e) {
                    return finite_total(e.coefficient * std::pow(e.scale, e.exponent + 1.0) *
                                        std::tgamma(e.exponent + 1.0));
                },
                [&](const family::Tabulated& t) {
                    double total = 0.0;
                    for (std::size_t i = 0; i + 1 < t.mass_sq.size(); ++i)
                        total += 0.5 * (t.values[i] + t.values[i + 1]) * (t.mass_sq[i + 1] - t.mass_sq[i]);
                    return finite_total(total);
                },
            },
            family_);
    }

    /// Length scale over which the term varies; used to map [lo, inf).
    double tail_scale() const {
        if (const auto* e = std::get_if<family::ExpCutoff>(&family_))
            return e->scale;
        return std::max(1.0, support_.lo);
    }

    friend bool operator==(const DensityTerm&, const DensityTerm&) = default;

  private:
    void validate() const {
        const double lo = support_.lo;
        const double hi = support_.hi;
        if (!std::isfinite(lo) || lo < 0.0)
            throw DomainError("density support must start at a finite mass^2 >= 0");
        if (std::isnan(hi) || !(hi > lo))
            throw DomainError("density support must satisfy hi > lo");
        auto nonneg = [](double v, const char* what) {
            if (!std::isfinite(v) || v < 0.0)
                throw DomainError(std::string(what) +
                                  " must be finite and >= 0 (spectral measures are positive)");
        };
        std::visit(detail::overloaded{
                       [&](const family::Constant& c) { nonneg(c.value, "constant density value"); },
                       [&](const family::Power& p) {
                           nonneg(p.coefficient, "power density coefficient");
                           if (!std::isfinite(p.exponent))
                               throw DomainError("power density exponent must be finite");
                           if (lo == 0.0 && p.exponent <= -1.0)
                               throw DomainError(
                                   "power density with exponent <= -1 is not integrable at mass^2 = 0");
                       },
                       [&](const family::Bump& b) {
                           nonneg(b.mass, "bump mass");
                           if (!support_.bounded())
                               throw DomainError("bump density needs a bounded support");
                       },
                       [&](const family::ExpCutoff& e) {
                           nonneg(e.coefficient, "exp_cutoff coefficient");
                           if (!(e.scale > 0.0) || !std::isfinite(e.scale))
                               throw DomainError("exp_cutoff scale must be > 0");
                           if (!(e.exponent > -1.0) || !std::isfinite(e.exponent))
                               throw DomainError("exp_cutoff exponent must be > -1");
                       },
                       [&](const family::Tabulated& t) {
                           if (t.mass_sq.size() < 2 || t.mass_sq.size() != t.values.size())
                               throw DomainError("tabulated density needs >= 2 nodes and matching values");
                           for (std::size_t i = 0; i < t.mass_sq.size(); ++i) {
                               nonneg(t.values[i], "tabulated density value");
                               if (i > 0 && !(t.mass_sq[i] > t.mass_sq[i - 1]))
                                   throw DomainError("tabulated mass_sq nodes must be strictly increasing");
                           }
                           if (t.mass_sq.front() != lo || t.mass_sq.back() != hi)
                               throw DomainError("tabulated support must span the node range");
                       },
                   },
                   family_);
    }

    DensityFamily family_;
    Support support_;
};

/// Sum of density terms (zero when empty) with its polynomial certificate.
class ContinuousDensity {
  public:
    ContinuousDensity() = default;
    explicit ContinuousDensity(std::vector<DensityTerm> terms,
                               std::optional<PolyBound> declared_bound = std::nullopt);
    ContinuousDensity(std::initializer_list<DensityTerm> terms) : ContinuousDensity(std::vector(terms)) {}

    double operator()(double s) const {
        double sum = 0.0;
        for (const auto& t : terms_)
            sum += t(s);
        return sum;
    }

    std::span<const DensityTerm> terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }
    bool bounded_support() const {
        return std::all_of(terms_.begin(), terms_.end(),
                           [](const DensityTerm& t) { return t.support().bounded(); });
    }
    const std::optional<PolyBound>& declared_bound() const { return declared_; }

    /// The declared certificate if one was given, else the one derived from
    /// the terms: C = sum C_i (doubled when the N_i differ), N = max N_i.
    PolyBound poly_bound() const {
        if (declared_)
            return *declared_;
        PolyBound b{0.0, 0};
        bool mixed = false;
        for (const auto& t : terms_) {
            const PolyBound tb = t.certificate();
            if (!terms_.empty() && tb.N != terms_.front().certificate().N)
                mixed = true;
            b.C += tb.C;
            b.N = std::max(b.N, tb.N);
        }
        if (mixed)
            b.C *= 2.0;
        if (terms_.empty())
            b.C = std::numeric_limits<double>::min();
        return b;
    }

    ContinuousDensity scaled(double k) const {
        std::vector<DensityTerm> out;
        out.reserve(terms_.size());
        for (const auto& t : terms_)
            out.push_back(t.scaled(k));
        std::optional<PolyBound> declared;
        if (declared_)
            declared = PolyBound{declared_->C * k, declared_->N};
        return ContinuousDensity(std::move(out), declared);
    }

    friend ContinuousDensity operator+(const ContinuousDensity& a, const ContinuousDensity& b) {
        std::vector<DensityTerm> terms(a.terms_.begin(), a.terms_.end());
        terms.insert(terms.end(), b.terms_.begin(), b.terms_.end());
        return ContinuousDensity(std::move(terms));
    }

    friend bool operator==(const ContinuousDensity&, const ContinuousDensity&) = default;

  private:
    std::vector<DensityTerm> terms_;
    std::optional<PolyBound> declared_;
};

/// Cumulative mass int_0^L of a density, by adaptive quadrature.
inline double cumulative_mass(const ContinuousDensity& density, double L) {
    double total = 0.0;
    for (const auto& term : density.terms()) {
        const double lo = term.support().lo;
        const double hi = std::min(L, term.support().hi);
        if (!(hi > lo))
            continue;
        std::vector<double> bps;
        for (double b : term.breakpoints())
            if (b > lo && b < hi)
                bps.push_back(b);
        bps.insert(bps.begin(), lo);
        bps.push_back(hi);
        QuadratureOptions opts;
        opts.abs_tol = 0.0;
        opts.rel_tol = 1e-11;
        total += integrate(term, std::span<const double>(bps), opts).value;
    }
    return total;
}

/// Checks the certificate on L = 2^k, k = -8..40. Returns the first failing L.
inline std::optional<double> find_poly_bound_violation(const ContinuousDensity& density,
                                                       const PolyBound& bound) {
    for (int k = -8; k <= 40; ++k) {
        const double L = std::ldexp(1.0, k);
        if (!bound.holds(L, cumulative_mass(density, L)))
            return L;
    }
    return std::nullopt;
}

inline ContinuousDensity::ContinuousDensity(std::vector<DensityTerm> terms,
                                            std::optional<PolyBound> declared_bound)
    : terms_(std::move(terms)), declared_(declared_bound) {
    if (declared_) {
        if (!(declared_->C > 0.0) || declared_->N < 0)
            throw DomainError("poly_bound needs C > 0 and integer N >= 0");
        if (auto L = find_poly_bound_violation(*this, *declared_))
            throw DomainError("declared poly_bound fails at L = " + detail::fmt_num(*L));
    }
}

class SpectralMeasure {
  public:
    SpectralMeasure() = default;
    explicit SpectralMeasure(std::vector<SpectralAtom> atoms, ContinuousDensity continuum = {})
        : atoms_(std::move(atoms)), continuum_(std::move(continuum)) {
        for (std::size_t i = 0; i < atoms_.size(); ++i) {
            const auto& a = atoms_[i];
            if (!std::isfinite(a.mass_sq) || a.mass_sq < 0.0)
                throw DomainError("atom mass_sq must be finite and >= 0");
            if (!std::isfinite(a.weight) || a.weight < 0.0)
                throw DomainError("atom weight must be finite and >= 0 (positivity: 0 <= Z < inf)");
            for (std::size_t j = 0; j < i; ++j)
                if (atoms_[j].mass_sq == a.mass_sq)
                    throw DomainError("atoms must have pairwise distinct mass_sq");
        }
    }

    /// Z delta(m0^2 - mass_sq): the free field has Z = 1.
    static SpectralMeasure free_field(double mass_sq, double Z = 1.0) {
        return SpectralMeasure({{mass_sq, Z}});
    }

    std::span<const SpectralAtom> atoms() const { return atoms_; }
    const ContinuousDensity& continuum() const { return continuum_; }

    SpectralMeasure scaled(double k) const {
        if (!(k >= 0.0) || !std::isfinite(k))
            throw DomainError("measure scale factor must be finite and >= 0");
        std::vector<SpectralAtom> atoms = atoms_;
        for (auto& a : atoms)
            a.weight *= k;
        return SpectralMeasure(std::move(atoms), continuum_.scaled(k));
    }

    /// Disjoint union; atoms at equal mass^2 are merged.
    friend SpectralMeasure operator+(const SpectralMeasure& a, const SpectralMeasure& b) {
        std::vector<SpectralAtom> atoms = a.atoms_;
        for (const auto& x : b.atoms_) {
            auto it = std::find_if(atoms.begin(), atoms.end(),
                                   [&](const SpectralAtom& y) { return y.mass_sq == x.mass_sq; });
            if (it != atoms.end())
                it->weight += x.weight;
            else
                atoms.push_back(x);
        }
        return SpectralMeasure(std::move(atoms), a.continuum_ + b.continuum_);
    }

    friend bool operator==(const SpectralMeasure&, const SpectralMeasure&) = default;

  private:
    std::vector<SpectralAtom> atoms_;
    ContinuousDensity continuum_;
};

struct MassTotal {
    double value = 0.0; ///< +inf when divergent
    double quadrature_error = 0.0;

    bool finite() const { return std::isfinite(value); }
};

namespace detail {

/// Tail test for an unbounded density term: the mass in [L, 2L] for
/// L = L0 * 2^k, k = 0..10, must decay; a last ratio >= 1 - 1e-3 means +inf.
inline bool tail_diverges(const DensityTerm& term) {
    if (term.certificate().N == 0)
        return false; // the certificate already bounds the total mass
    const double L0 = std::max(1.0, 2.0 * term.support().lo);
    QuadratureOptions opts;
    opts.abs_tol = 0.0;
    opts.rel_tol = 1e-10;
    double previous = 0.0;
    double last = 0.0;
    for (int k = 0; k <= 10; ++k) {
        const double L = std::ldexp(L0, k);
        previous = last;
        last = integrate(term, L, 2.0 * L, opts).value;
    }
    return last > 0.0 && last >= (1.0 - 1e-3) * previous;
}

inline MassTotal term_mass(const DensityTerm& term) {
    QuadratureOptions opts;
    opts.abs_tol = 1e-14;
    opts.rel_tol = 1e-12;
    opts.max_subdivisions = 4000;
    if (term.support().bounded()) {
        const auto bps = term.breakpoints();
        const auto r = integrate(term, std::span<const double>(bps), opts);
        return {r.value, r.abs_error};
    }
    if (tail_diverges(term))
        return {kInfinity, 0.0};
    opts.scale = term.tail_scale();
    const auto r = integrate(term, term.support().lo, kInfinity, opts);
    return {r.value, r.abs_error};
}

} // namespace detail

/// Total mass of the continuum alone.
inline MassTotal continuum_mass(const ContinuousDensity& density) {
    MassTotal total;
    for (const auto& term : density.terms()) {
        const MassTotal t = detail::term_mass(term);
        if (!t.finite())
            return {kInfinity, 0.0};
        total.value += t.value;
        total.quadrature_error += t.quadrature_error;
    }
    return total;
}

inline MassTotal total_mass(const SpectralMeasure& m) {
    MassTotal total = continuum_mass(m.continuum());
    if (!total.finite())
        return total;
    for (const auto& a : m.atoms())
        total.value += a.weight;
    return total;
}

struct Decomposition {
    std::vector<SpectralAtom> atoms;
    ContinuousDensity continuum;
};

inline Decomposition decompose(const SpectralMeasure& m) {
    return {std::vector<SpectralAtom>(m.atoms().begin(), m.atoms().end()), m.continuum()};
}

inline SpectralMeasure compose(std::vector<SpectralAtom> atoms, ContinuousDensity continuum) {
    return SpectralMeasure(std::move(atoms), std::move(continuum));
}

/// Weight of the atom at mass_sq (within tol), or 0 when there is none.
inline double z_at(const SpectralMeasure& m, double mass_sq, double tol = kAtomMatchTol) {
    if (!(tol > 0.0))
        throw DomainError("z_at: tol must be > 0");
    const SpectralAtom* hit = nullptr;
    for (const auto& a : m.atoms()) {
        if (std::abs(a.mass_sq - mass_sq) <= tol) {
            if (hit != nullptr)
                throw AmbiguityError("z_at: atoms at mass_sq " + detail::fmt_num(hit->mass_sq) +
                                     " and " + detail::fmt_num(a.mass_sq) + " both match " +
                                     detail::fmt_num(mass_sq) + " within tol " + detail::fmt_num(tol));
            hit = &a;
        }
    }
    return hit ? hit->weight : 0.0;
}

enum class SumRuleStatus { Holds, Fails, Divergent };

inline std::string_view to_string(SumRuleStatus s) {
    switch (s) {
    case SumRuleStatus::Holds:
        return "Holds";
    case SumRuleStatus::Fails:
        return "Fails";
    case SumRuleStatus::Divergent:
        return "Divergent";
    }
    return "?";
}

struct SumRuleResult {
    SumRuleStatus status = SumRuleStatus::Fails;
    MassTotal total;
};

/// ETCR sum rule: the total spectral mass equals one.
inline SumRuleResult check_etcr_sum_rule(const SpectralMeasure& m, double tol = kSumRuleTol) {
    if (!(tol > 0.0))
        throw DomainError("check_etcr_sum_rule: tol must be > 0");
    const MassTotal total = total_mass(m);
    if (!total.finite())
        return {SumRuleStatus::Divergent, total};
    const auto status = std::abs(total.value - 1.0) <= tol ? SumRuleStatus::Holds : SumRuleStatus::Fails;
    return {status, total};
}

/// dg = drho / Z, with Z the weight of the particle atom. Without an explicit
/// particle mass the lightest atom is the particle.
inline SpectralMeasure renormalize(const SpectralMeasure& m,
                                   std::optional<double> particle_mass_sq = std::nullopt) {
    double Z = 0.0;
    if (particle_mass_sq) {
        Z = z_at(m, *particle_mass_sq);
    } else if (!m.atoms().empty()) {
        const auto lightest = std::min_element(
            m.atoms().begin(), m.atoms().end(),
            [](const SpectralAtom& a, const SpectralAtom& b) { return a.mass_sq < b.mass_sq; });
        Z = lightest->weight;
    }
    if (!(Z > 0.0))
        throw DomainError("renormalization undefined at Z=0");
    return m.scaled(1.0 / Z);
}

} // namespace spectral_lab
