// Equal-time free two-point function by direct Fourier quadrature:
//
//   W(m, r) = 1/(4 pi^2 r) int_0^inf (k / w(k)) sin(k r) dk
//           = 1/(4 pi^2 r) [ 1/r + int_0^inf (k / w(k) - 1) sin(k r) dk ]
//
// The remaining sine integral is summed with the Ooura-Mori double
// exponential transform for Fourier integrals. For m r ~ 100 the answer is
// ~e^-100 below the 1/r pieces that cancel, hence the multiprecision type.
#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <cmath>

namespace oracle {

using mp100 = boost::multiprecision::cpp_bin_float_100;

/// int_0^inf g(x) sin(omega x) dx by Ooura-Mori with step h.
template <class Real, class G>
Real ooura_mori_sine(const G& g, Real omega, Real h) {
    using std::exp;
    using std::sin;
    using std::sqrt;
    using std::log;
    const Real pi = boost::math::constants::pi<Real>();
    const Real M = pi / h;
    const Real beta = Real(1) / 4;
    const Real alpha = beta / sqrt(1 + M * log(1 + M) / (4 * pi));
    const Real u1 = 2 + alpha + beta;
    const Real u2 = beta - alpha;

    auto term = [&](Real t) -> Real {
        Real phi;
        Real dphi;
        if (t == 0) {
            phi = 1 / u1;
            dphi = (u1 * u1 - u2) / (2 * u1 * u1);
        } else {
            const Real et = exp(t);
            const Real emt = 1 / et;
            const Real u = 2 * t + alpha * (1 - emt) + beta * (et - 1);
            const Real du = 2 + alpha * emt + beta * et;
            const Real em = exp(-u);
            const Real denom = 1 - em;
            phi = t / denom;
            dphi = (denom - t * du * em) / (denom * denom);
        }
        const Real x = M * phi / omega;
        if (x == 0)
            return Real(0);
        return g(x) * sin(M * phi) * dphi;
    };

    Real sum = term(Real(0));
    // positive side: nodes approach the zeros of sin double exponentially
    for (int n = 1;; ++n) {
        const Real v = term(n * h);
        sum += v;
        if (n * h > 4 && abs(v) < abs(sum) * Real(1e-110))
            break;
        if (n * h > 40)
            break;
    }
    // negative side: phi -> 0 double exponentially
    for (int n = 1;; ++n) {
        const Real v = term(-n * h);
        sum += v;
        if (n * h > 4 && abs(v) < abs(sum) * Real(1e-110))
            break;
        if (n * h > 40)
            break;
    }
    return pi / omega * sum;
}

template <class Real = mp100>
Real free_two_point(Real m, Real r, Real h = Real(1) / 64) {
    using std::sqrt;
    const Real pi = boost::math::constants::pi<Real>();
    // k/w - 1 written without cancellation
    auto g = [&](const Real& k) {
        const Real w = sqrt(k * k + m * m);
        return -(m * m) / (w * (k + w));
    };
    const Real integral = ooura_mori_sine<Real>(g, r, h);
    return (1 / r + integral) / (4 * pi * pi * r);
}

} // namespace oracle
