/*
 * quadrature.hpp: adaptive Gauss-Kronrod integration
 *
 * Globally adaptive 21-point Gauss-Kronrod rule in the QUADPACK (QAG) style:
 * the interval with the largest error estimate is bisected until
 *
 *     sum of error estimates <= max(abs_tol, rel_tol * |result|)
 *
 * or the subdivision budget is exhausted, in which case a QuadratureError is
 * thrown that lists the worst remaining intervals. Semi-infinite ranges
 * [a, inf) are mapped onto [0, 1) via x = a + scale * t / (1 - t).
 *
 * Everything here is deterministic: the same integrand and options always
 * visit the same nodes in the same order.
 */
#pragma once

#include "spectral_lab/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <sstream>
#include <span>
#include <vector>

namespace spectral_lab {

struct QuadratureOptions {
    double abs_tol = 1e-10;
    double rel_tol = 1e-9;
    std::size_t max_subdivisions = 2000;
    /// Length scale of the map used for semi-infinite ranges.
    double scale = 1.0;
};

struct QuadratureResult {
    double value = 0.0;
    double abs_error = 0.0;
    std::size_t subdivisions = 0;
};

namespace detail {

// QUADPACK qk21 abscissae and weights.
inline constexpr std::array<double, 11> kXgk = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0};
inline constexpr std::array<double, 11> kWgk = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077208057075557, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
inline constexpr std::array<double, 5> kWg = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

struct Segment {
    double a;
    double b;
    double value;
    double error;
};

struct SegmentOrder {
    bool operator()(const Segment& lhs, const Segment& rhs) const {
        if (lhs.error != rhs.error)
            return lhs.error < rhs.error;
        return lhs.a > rhs.a; // ties: leftmost first, keeps the order deterministic
    }
};

template <class F>
Segment gauss_kronrod21(const F& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    if (!std::isfinite(fc)) {
        std::ostringstream msg;
        msg << "non-finite integrand at x=" << center;
        throw QuadratureError(msg.str());
    }
    double resk = fc * kWgk[10];
    double resabs = std::abs(resk);
    double resg = 0.0;
    std::array<double, 10> f1{};
    std::array<double, 10> f2{};
    for (std::size_t j = 0; j < 10; ++j) {
        const double dx = half * kXgk[j];
        f1[j] = f(center - dx);
        f2[j] = f(center + dx);
        if (!std::isfinite(f1[j]) || !std::isfinite(f2[j])) {
            std::ostringstream msg;
            msg << "non-finite integrand near x=" << center << " +/- " << dx;
            throw QuadratureError(msg.str());
        }
        resk += kWgk[j] * (f1[j] + f2[j]);
        resabs += kWgk[j] * (std::abs(f1[j]) + std::abs(f2[j]));
        if (j % 2 == 1)
            resg += kWg[j / 2] * (f1[j] + f2[j]);
    }
    const double reskh = 0.5 * resk;
    double resasc = kWgk[10] * std::abs(fc - reskh);
    for (std::size_t j = 0; j < 10; ++j)
        resasc += kWgk[j] * (std::abs(f1[j] - reskh) + std::abs(f2[j] - reskh));

    const double result = resk * half;
    resabs *= std::abs(half);
    resasc *= std::abs(half);
    double err = std::abs((resk - resg) * half);
    if (resasc != 0.0 && err != 0.0)
        err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    constexpr double eps = std::numeric_limits<double>::epsilon();
    if (resabs > std::numeric_limits<double>::min() / (50.0 * eps))
        err = std::max(50.0 * eps * resabs, err);
    return {a, b, result, err};
}

inline std::string describe_failure(std::vector<Segment> segments, std::size_t bisections,
                                    double total_error, double target) {
    std::sort(segments.begin(), segments.end(),
              [](const Segment& l, const Segment& r) { return l.error > r.error; });
    std::ostringstream msg;
    msg.precision(6);
    msg << "adaptive quadrature did not converge after " << bisections
        << " bisections (error estimate " << total_error << " > target " << target
        << "); worst intervals:";
    for (std::size_t i = 0; i < std::min<std::size_t>(5, segments.size()); ++i)
        msg << " [" << segments[i].a << ", " << segments[i].b << "] err=" << segments[i].error
            << ';';
    return msg.str();
}

template <class F>
QuadratureResult adaptive(const F& f, std::span<const double> breakpoints,
                          const QuadratureOptions& opts) {
    std::priority_queue<Segment, std::vector<Segment>, SegmentOrder> heap;
    double total = 0.0;
    double total_err = 0.0;
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
        if (breakpoints[i + 1] == breakpoints[i])
            continue;
        Segment s = gauss_kronrod21(f, breakpoints[i], breakpoints[i + 1]);
        total += s.value;
        total_err += s.error;
        heap.push(s);
    }
    std::size_t bisections = 0;
    auto target = [&] { return std::max(opts.abs_tol, opts.rel_tol * std::abs(total)); };
    while (total_err > target() && !heap.empty()) {
        if (bisections >= opts.max_subdivisions) {
            std::vector<Segment> rest;
            while (!heap.empty()) {
                rest.push_back(heap.top());
                heap.pop();
            }
            throw QuadratureError(describe_failure(std::move(rest), bisections, total_err, target()));
        }
        Segment worst = heap.top();
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) {
            // interval exhausted at machine resolution
            std::vector<Segment> rest{worst};
            throw QuadratureError(describe_failure(std::move(rest), bisections, total_err, target()));
        }
        heap.pop();
        Segment left = gauss_kronrod21(f, worst.a, mid);
        Segment right = gauss_kronrod21(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++bisections;
    }

    // Re-sum in left-to-right order so the result does not depend on the
    // accumulated update history.
    std::vector<Segment> segments;
    segments.reserve(heap.size());
    while (!heap.empty()) {
        segments.push_back(heap.top());
        heap.pop();
    }
    std::sort(segments.begin(), segments.end(),
              [](const Segment& l, const Segment& r) { return l.a < r.a; });
    QuadratureResult out;
    for (const auto& s : segments) {
        out.value += s.value;
        out.abs_error += s.error;
    }
    out.subdivisions = bisections;
    return out;
}

} // namespace detail

/// Integrates f over the partition given by `breakpoints` (ascending, finite).
template <class F>
QuadratureResult integrate(const F& f, std::span<const double> breakpoints,
                           const QuadratureOptions& opts = {}) {
    if (breakpoints.size() < 2)
        throw DomainError("integrate: need at least two breakpoints");
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i)
        if (!(breakpoints[i] <= breakpoints[i + 1]) || !std::isfinite(breakpoints[i + 1]))
            throw DomainError("integrate: breakpoints must be finite and ascending");
    return detail::adaptive(f, breakpoints, opts);
}

/// Integrates f over [a, b]; b may be +infinity.
template <class F>
QuadratureResult integrate(const F& f, double a, double b, const QuadratureOptions& opts = {}) {
    if (std::isnan(a) || std::isnan(b) || !std::isfinite(a))
        throw DomainError("integrate: lower limit must be finite");
    if (b < a) {
        QuadratureResult r = integrate(f, b, a, opts);
        r.value = -r.value;
        return r;
    }
    if (std::isinf(b)) {
        const double scale = opts.scale;
        auto mapped = [&f, a, scale](double t) {
            const double u = 1.0 - t;
            const double x = a + scale * t / u;
            const double fx = f(x);
            // the integrand has to vanish at infinity; guard 0 * inf at t -> 1
            if (fx == 0.0)
                return 0.0;
            return fx * scale / (u * u);
        };
        const std::array<double, 2> unit{0.0, 1.0};
        return detail::adaptive(mapped, std::span<const double>(unit), opts);
    }
    const std::array<double, 2> ends{a, b};
    return detail::adaptive(f, std::span<const double>(ends), opts);
}

} // namespace spectral_lab
