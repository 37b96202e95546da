#pragma once

// Reference implementations used only by tests, deliberately written with
// different algorithms than the library: parametric boundary sampling,
// perimeter by adaptive quadrature, and an exact-rational brute-force split
// search over integer-valued datasets.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <vector>

#include "osp/biometry.hpp"
#include "osp/forest.hpp"

namespace oracle {

inline std::vector<osp::biometry::PointXY> ellipse_points(const osp::biometry::Ellipse& e, int n,
                                                          double phase = 0.0) {
    std::vector<osp::biometry::PointXY> pts;
    pts.reserve(n);
    const double c = std::cos(e.angle), s = std::sin(e.angle);
    for (int i = 0; i < n; ++i) {
        const double t = phase + 2.0 * std::numbers::pi * i / n;
        const double x = e.semi_major * std::cos(t);
        const double y = e.semi_minor * std::sin(t);
        pts.push_back({e.center_x + x * c - y * s, e.center_y + x * s + y * c});
    }
    return pts;
}

namespace detail {

inline double arc_integrand(double a, double b, double t) {
    const double st = std::sin(t), ct = std::cos(t);
    return std::sqrt(a * a * st * st + b * b * ct * ct);
}

inline double simpson(double a, double b, double lo, double hi, double flo, double fmid,
                      double fhi) {
    return (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
}

inline double adaptive(double a, double b, double lo, double hi, double flo, double fmid,
                       double fhi, double whole, double eps, int depth) {
    const double mid = 0.5 * (lo + hi);
    const double fl = arc_integrand(a, b, 0.5 * (lo + mid));
    const double fr = arc_integrand(a, b, 0.5 * (mid + hi));
    const double left = simpson(a, b, lo, mid, flo, fl, fmid);
    const double right = simpson(a, b, mid, hi, fmid, fr, fhi);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * eps) {
        return left + right + (left + right - whole) / 15.0;
    }
    return adaptive(a, b, lo, mid, flo, fl, fmid, left, eps / 2.0, depth - 1) +
           adaptive(a, b, mid, hi, fmid, fr, fhi, right, eps / 2.0, depth - 1);
}

}  // namespace detail

// Ellipse perimeter as 4 * integral_0^{pi/2} sqrt(a^2 sin^2 + b^2 cos^2).
inline double perimeter_quadrature(double a, double b) {
    const double lo = 0.0, hi = std::numbers::pi / 2.0;
    const double flo = detail::arc_integrand(a, b, lo);
    const double fhi = detail::arc_integrand(a, b, hi);
    const double fmid = detail::arc_integrand(a, b, 0.5 * (lo + hi));
    const double whole = detail::simpson(a, b, lo, hi, flo, fmid, fhi);
    return 4.0 * detail::adaptive(a, b, lo, hi, flo, fmid, fhi, whole, 1e-12, 40);
}

// Exact rational arithmetic; all test inputs are small so int64 never
// overflows.
struct Frac {
    long long num = 0;
    long long den = 1;

    Frac() = default;
    Frac(long long n, long long d = 1) : num(n), den(d) { normalize(); }

    void normalize() {
        if (den < 0) {
            num = -num;
            den = -den;
        }
        const long long g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) {
            num /= g;
            den /= g;
        }
    }

    friend Frac operator+(const Frac& a, const Frac& b) {
        return Frac(a.num * b.den + b.num * a.den, a.den * b.den);
    }
    friend Frac operator-(const Frac& a, const Frac& b) {
        return Frac(a.num * b.den - b.num * a.den, a.den * b.den);
    }
    friend Frac operator*(const Frac& a, const Frac& b) { return Frac(a.num * b.num, a.den * b.den); }
    friend bool operator==(const Frac& a, const Frac& b) { return a.num == b.num && a.den == b.den; }
    friend bool operator<(const Frac& a, const Frac& b) { return a.num * b.den < b.num * a.den; }

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

struct ExactSplit {
    int feature = -1;
    Frac threshold;
    Frac gain;
};

// Every (feature, midpoint-threshold) pair achieving the maximal Gini gain,
// computed exactly; empty when no split improves on the parent.
inline std::vector<ExactSplit> best_splits_exact(const std::vector<std::vector<long long>>& x,
                                                 const std::vector<int>& y, int n_classes) {
    const int n = static_cast<int>(x.size());
    const int p = n > 0 ? static_cast<int>(x[0].size()) : 0;

    auto gini = [&](const std::vector<int>& counts, int total) {
        Frac acc(0);
        for (int c : counts) acc = acc + Frac(static_cast<long long>(c) * c, 1);
        return Frac(1) - acc * Frac(1, static_cast<long long>(total) * total);
    };

    std::vector<int> parent(n_classes, 0);
    for (int yi : y) parent[yi]++;
    const Frac parent_gini = gini(parent, n);

    std::vector<ExactSplit> all;
    for (int f = 0; f < p; ++f) {
        std::vector<std::pair<long long, int>> col(n);
        for (int i = 0; i < n; ++i) col[i] = {x[i][f], y[i]};
        std::sort(col.begin(), col.end());
        std::vector<int> left(n_classes, 0);
        std::vector<int> right = parent;
        for (int i = 1; i < n; ++i) {
            left[col[i - 1].second]++;
            right[col[i - 1].second]--;
            if (col[i - 1].first == col[i].first) continue;
            const Frac threshold(col[i - 1].first + col[i].first, 2);
            const Frac weighted =
                Frac(i, n) * gini(left, i) + Frac(n - i, n) * gini(right, n - i);
            all.push_back({f, threshold, parent_gini - weighted});
        }
    }

    Frac best_gain(0);
    for (const auto& s : all)
        if (best_gain < s.gain) best_gain = s.gain;
    std::vector<ExactSplit> winners;
    if (Frac(0) < best_gain) {
        for (const auto& s : all)
            if (s.gain == best_gain) winners.push_back(s);
    }
    return winners;
}

}  // namespace oracle
