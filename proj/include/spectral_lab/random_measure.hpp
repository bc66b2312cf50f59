/*
 * random_measure.hpp: seeded family of finite-total-mass spectral measures
 *
 * 1-3 atoms with mass^2 in [0.1, 25] and weight in [0.05, 1], plus 0-2
 * smooth bumps of mass in [0.05, 1] on subintervals of [0, 30]. The same
 * (seed, index) gives the same measure on every platform: mt19937_64 output
 * is fixed by the standard and the mapping to [0, 1) is done here.
 */
#pragma once

#include "spectral_lab/measure.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace spectral_lab {

namespace detail {

inline double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * unit_uniform(rng); }

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
    return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

} // namespace detail

inline SpectralMeasure random_finite_measure(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    std::mt19937_64 rng(seq);
    std::vector<SpectralAtom> atoms;
    const int n_atoms = detail::uniform_int(rng, 1, 3);
    while (static_cast<int>(atoms.size()) < n_atoms) {
        const SpectralAtom a{detail::uniform(rng, 0.1, 25.0), detail::uniform(rng, 0.05, 1.0)};
        bool clash = false;
        for (const auto& b : atoms)
            clash = clash || b.mass_sq == a.mass_sq;
        if (!clash)
            atoms.push_back(a);
    }
    std::vector<DensityTerm> bumps;
    const int n_bumps = detail::uniform_int(rng, 0, 2);
    for (int i = 0; i < n_bumps; ++i) {
        const double lo = detail::uniform(rng, 0.0, 25.0);
        const double width = detail::uniform(rng, 0.5, 5.0);
        bumps.push_back(DensityTerm::bump(detail::uniform(rng, 0.05, 1.0), lo, lo + width));
    }
    return SpectralMeasure(std::move(atoms), ContinuousDensity(std::move(bumps)));
}

} // namespace spectral_lab
