/*
 * measure_io.hpp: spectral measures as TOML
 *
 *   [[atom]]
 *   mass_sq = 1.0
 *   weight = 0.5
 *
 *   [[continuum]]                  # or a single [continuum] table
 *   family = "power"
 *   params = { coefficient = 1.0, exponent = 0.5 }
 *   support = [4.0, inf]
 *
 *   [poly_bound]                   # optional declared certificate
 *   C = 2.0
 *   N = 2
 *
 * Floats are written in shortest round-trip form, so write/read is exact.
 */
#pragma once

#include "spectral_lab/errors.hpp"
#include "spectral_lab/measure.hpp"
#include "spectral_lab/toml.hpp"

#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace spectral_lab {

namespace detail {

inline std::string at_line(const std::string& source, int line) {
    return source + ":" + std::to_string(line) + ": ";
}

inline void reject_unknown_keys(const toml::Table& t, std::initializer_list<std::string_view> allowed,
                                const std::string& where, int line) {
    for (const auto& k : t.keys()) {
        bool known = false;
        for (auto a : allowed)
            known = known || a == k;
        if (!known)
            throw ParseError(at_line(where, line) + "unknown key '" + k + "'");
    }
}

inline const toml::Value& require(const toml::Table& t, std::string_view key, const std::string& where,
                                  int line) {
    const toml::Value* v = t.find(key);
    if (v == nullptr)
        throw ParseError(at_line(where, line) + "missing key '" + std::string(key) + "'");
    return *v;
}

inline double require_number(const toml::Table& t, std::string_view key, const std::string& where,
                             int line) {
    const toml::Value& v = require(t, key, where, line);
    if (!v.is_number())
        throw ParseError(at_line(where, v.line) + "'" + std::string(key) + "' must be a number, not " +
                         std::string(v.type_name()));
    return v.number();
}

inline std::vector<double> require_numbers(const toml::Table& t, std::string_view key,
                                           const std::string& where, int line) {
    const toml::Value& v = require(t, key, where, line);
    if (!v.is_array())
        throw ParseError(at_line(where, v.line) + "'" + std::string(key) + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& x : v.array()) {
        if (!x.is_number())
            throw ParseError(at_line(where, v.line) + "'" + std::string(key) +
                             "' must be an array of numbers");
        out.push_back(x.number());
    }
    return out;
}

inline DensityTerm term_from_toml(const toml::Table& t, const std::string& where, int line) {
    reject_unknown_keys(t, {"family", "params", "support"}, where, line);
    const toml::Value& fam = require(t, "family", where, line);
    if (!fam.is_string())
        throw ParseError(at_line(where, fam.line) + "'family' must be a string");
    const std::string& name = fam.string();
    static const toml::Table no_params;
    const toml::Value* pv = t.find("params");
    if (pv != nullptr && !pv->is_table())
        throw ParseError(at_line(where, pv->line) + "'params' must be an inline table");
    const toml::Table& p = pv ? pv->table() : no_params;
    const int pline = pv ? pv->line : line;

    Support support;
    bool has_support = false;
    if (const toml::Value* sv = t.find("support")) {
        const auto range = require_numbers(t, "support", where, line);
        if (range.size() != 2)
            throw ParseError(at_line(where, sv->line) + "'support' must be [lo, hi]");
        support = {range[0], range[1]};
        has_support = true;
    }
    auto need_support = [&] {
        if (!has_support)
            throw ParseError(at_line(where, line) + "family '" + name + "' needs 'support'");
    };

    try {
        if (name == "constant") {
            reject_unknown_keys(p, {"value"}, where, pline);
            need_support();
            return {family::Constant{require_number(p, "value", where, pline)}, support};
        }
        if (name == "power") {
            reject_unknown_keys(p, {"coefficient", "exponent"}, where, pline);
            need_support();
            return {family::Power{require_number(p, "coefficient", where, pline),
                                  require_number(p, "exponent", where, pline)},
                    support};
        }
        if (name == "bump") {
            reject_unknown_keys(p, {"mass"}, where, pline);
            need_support();
            return {family::Bump{require_number(p, "mass", where, pline)}, support};
        }
        if (name == "exp_cutoff") {
            reject_unknown_keys(p, {"coefficient", "exponent", "scale"}, where, pline);
            need_support();
            return {family::ExpCutoff{require_number(p, "coefficient", where, pline),
                                      require_number(p, "exponent", where, pline),
                                      require_number(p, "scale", where, pline)},
                    support};
        }
        if (name == "tabulated") {
            reject_unknown_keys(p, {"mass_sq", "values"}, where, pline);
            auto xs = require_numbers(p, "mass_sq", where, pline);
            auto ys = require_numbers(p, "values", where, pline);
            if (xs.size() < 2 || xs.size() != ys.size())
                throw DomainError("tabulated density needs >= 2 nodes and matching values");
            if (!has_support)
                support = {xs.front(), xs.back()};
            return {family::Tabulated{std::move(xs), std::move(ys)}, support};
        }
    } catch (const DomainError& e) {
        throw DomainError(at_line(where, line) + e.what());
    }
    throw ParseError(at_line(where, fam.line) + "unknown density family '" + name +
                     "' (expected constant, power, bump, exp_cutoff or tabulated)");
}

} // namespace detail

/// Builds a measure from a parsed table. Structural problems raise ParseError,
/// invalid values (negative weights, bad supports) raise DomainError; both
/// carry the source line.
inline SpectralMeasure measure_from_toml(const toml::Table& t, const std::string& where = "<measure>") {
    detail::reject_unknown_keys(t, {"atom", "continuum", "poly_bound"}, where, 1);
    std::vector<SpectralAtom> atoms;
    if (const toml::Value* av = t.find("atom")) {
        if (!av->is_array())
            throw ParseError(detail::at_line(where, av->line) + "'atom' must be an array of tables ([[atom]])");
        for (const auto& entry : av->array()) {
            if (!entry.is_table())
                throw ParseError(detail::at_line(where, entry.line) + "'atom' entries must be tables");
            const auto& a = entry.table();
            detail::reject_unknown_keys(a, {"mass_sq", "weight"}, where, entry.line);
            atoms.push_back({detail::require_number(a, "mass_sq", where, entry.line),
                             detail::require_number(a, "weight", where, entry.line)});
            const SpectralAtom& last = atoms.back();
            if (!std::isfinite(last.weight) || last.weight < 0.0)
                throw DomainError(detail::at_line(where, entry.line) +
                                  "atom weight must be finite and >= 0 (positivity: 0 <= Z < inf)");
            if (!std::isfinite(last.mass_sq) || last.mass_sq < 0.0)
                throw DomainError(detail::at_line(where, entry.line) + "atom mass_sq must be finite and >= 0");
        }
    }

    std::vector<DensityTerm> terms;
    if (const toml::Value* cv = t.find("continuum")) {
        if (cv->is_table()) {
            terms.push_back(detail::term_from_toml(cv->table(), where, cv->line));
        } else if (cv->is_array()) {
            for (const auto& entry : cv->array()) {
                if (!entry.is_table())
                    throw ParseError(detail::at_line(where, entry.line) + "'continuum' entries must be tables");
                terms.push_back(detail::term_from_toml(entry.table(), where, entry.line));
            }
        } else {
            throw ParseError(detail::at_line(where, cv->line) + "'continuum' must be a table");
        }
    }

    std::optional<PolyBound> bound;
    if (const toml::Value* bv = t.find("poly_bound")) {
        if (!bv->is_table())
            throw ParseError(detail::at_line(where, bv->line) + "'poly_bound' must be a table");
        const auto& b = bv->table();
        detail::reject_unknown_keys(b, {"C", "N"}, where, bv->line);
        const toml::Value& n = detail::require(b, "N", where, bv->line);
        if (!n.is_integer())
            throw ParseError(detail::at_line(where, n.line) + "'N' must be an integer");
        bound = PolyBound{detail::require_number(b, "C", where, bv->line), static_cast<int>(n.integer())};
    }

    try {
        return SpectralMeasure(std::move(atoms), ContinuousDensity(std::move(terms), bound));
    } catch (const DomainError& e) {
        throw DomainError(where + ": " + e.what());
    }
}

inline SpectralMeasure parse_measure(std::string_view text, const std::string& source = "<measure>") {
    return measure_from_toml(toml::parse(text, source), source);
}

inline SpectralMeasure read_measure_file(const std::string& path) {
    return parse_measure(toml::read_file(path), path);
}

/// TOML text for m; `prefix` nests the tables (e.g. "measure." gives
/// [[measure.atom]]).
inline std::string to_toml(const SpectralMeasure& m, const std::string& prefix = "") {
    using toml::format_float;
    std::ostringstream os;
    for (const auto& a : m.atoms())
        os << "[[" << prefix << "atom]]\nmass_sq = " << format_float(a.mass_sq) << "\nweight = " << format_float(a.weight)
           << "\n\n";
    for (const auto& term : m.continuum().terms()) {
        os << "[[" << prefix << "continuum]]\nfamily = " << toml::quote(term.family_name()) << "\nparams = { ";
        std::visit(detail::overloaded{
                       [&](const family::Constant& c) { os << "value = " << format_float(c.value); },
                       [&](const family::Power& p) {
                           os << "coefficient = " << format_float(p.coefficient)
                              << ", exponent = " << format_float(p.exponent);
                       },
                       [&](const family::Bump& b) { os << "mass = " << format_float(b.mass); },
                       [&](const family::ExpCutoff& e) {
                           os << "coefficient = " << format_float(e.coefficient)
                              << ", exponent = " << format_float(e.exponent)
                              << ", scale = " << format_float(e.scale);
                       },
                       [&](const family::Tabulated& t) {
                           auto list = [&](const std::vector<double>& xs) {
                               os << '[';
                               for (std::size_t i = 0; i < xs.size(); ++i)
                                   os << (i ? ", " : "") << format_float(xs[i]);
                               os << ']';
                           };
                           os << "mass_sq = ";
                           list(t.mass_sq);
                           os << ", values = ";
                           list(t.values);
                       },
                   },
                   term.family());
        os << " }\nsupport = [" << format_float(term.support().lo) << ", " << format_float(term.support().hi)
           << "]\n\n";
    }
    if (const auto& b = m.continuum().declared_bound())
        os << "[" << prefix << "poly_bound]\nC = " << format_float(b->C) << "\nN = " << b->N << "\n";
    std::string out = os.str();
    while (out.size() >= 2 && out[out.size() - 1] == '\n' && out[out.size() - 2] == '\n')
        out.pop_back();
    return out;
}

} // namespace spectral_lab
