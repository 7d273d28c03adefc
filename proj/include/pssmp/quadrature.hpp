#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "pssmp/errors.hpp"

namespace pssmp::quad {

struct Options {
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    std::size_t max_intervals = 4000;
};

struct Result {
    double value = 0.0;
    double error = 0.0;
    std::size_t intervals = 0;
};

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
inline constexpr double kNodes[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kKronrod[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kGauss[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Interval {
    double a;
    double b;
    double value;
    double error;
    bool operator<(const Interval& other) const { return error < other.error; }
};

template <class F>
Interval gauss_kronrod(F& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double kronrod = kKronrod[7] * fc;
    double gauss = kGauss[3] * fc;
    for (int i = 0; i < 7; ++i) {
        const double dx = half * kNodes[i];
        const double pair = f(center - dx) + f(center + dx);
        kronrod += kKronrod[i] * pair;
        if (i % 2 == 1) gauss += kGauss[i / 2] * pair;
    }
    kronrod *= half;
    gauss *= half;
    return {a, b, kronrod, std::abs(kronrod - gauss)};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod integration over [breaks.front(), breaks.back()],
/// with the given interior breakpoints used as the initial partition.
template <class F>
Result integrate(F&& f, std::span<const double> breaks, const Options& opt = {}) {
    if (breaks.size() < 2) throw DomainError("quadrature needs at least two breakpoints");
    std::priority_queue<detail::Interval> heap;
    double total = 0.0;
    double total_err = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        if (!(breaks[i] < breaks[i + 1])) continue;
        auto piece = detail::gauss_kronrod(f, breaks[i], breaks[i + 1]);
        total += piece.value;
        total_err += piece.error;
        heap.push(piece);
    }
    std::size_t count = heap.size();
    while (!heap.empty() && total_err > std::max(opt.abs_tol, opt.rel_tol * std::abs(total))) {
        if (count >= opt.max_intervals) {
            throw NoConvergence("adaptive quadrature: interval budget exhausted (error estimate " +
                                std::to_string(total_err) + ")");
        }
        auto worst = heap.top();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(worst.a < mid && mid < worst.b)) break;  // interval at machine resolution
        heap.pop();
        auto left = detail::gauss_kronrod(f, worst.a, mid);
        auto right = detail::gauss_kronrod(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++count;
    }
    // Re-sum to shed the drift of the running updates.
    double value = 0.0;
    double error = 0.0;
    std::size_t intervals = heap.size();
    while (!heap.empty()) {
        value += heap.top().value;
        error += heap.top().error;
        heap.pop();
    }
    return {value, error, intervals};
}

template <class F>
Result integrate(F&& f, double a, double b, const Options& opt = {}) {
    const double breaks[2] = {a, b};
    return integrate(std::forward<F>(f), std::span<const double>(breaks, 2), opt);
}

/// Partition of [a, b] into pieces no longer than `scale`, plus any extra cut
/// points that fall strictly inside.
inline std::vector<double> partition(double a, double b, double scale,
                                     const std::vector<double>& extra = {}) {
    std::vector<double> cuts{a};
    if (scale > 0.0) {
        const auto pieces = static_cast<std::size_t>(std::min(512.0, std::ceil((b - a) / scale)));
        for (std::size_t i = 1; i < pieces; ++i) cuts.push_back(a + (b - a) * double(i) / double(pieces));
    }
    for (double c : extra)
        if (c > a && c < b) cuts.push_back(c);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    return cuts;
}

}  // namespace pssmp::quad
