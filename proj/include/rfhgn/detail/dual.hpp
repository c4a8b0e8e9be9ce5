#pragma once

#include <array>
#include <cmath>

namespace rfhgn::detail {

/// Forward-mode dual number carrying K partial derivatives.
template <int K>
struct Dual {
    double v = 0.0;
    std::array<double, K> g{};

    Dual() = default;
    Dual(double value) : v(value) {}  // NOLINT(google-explicit-constructor)

    static Dual variable(double value, int slot) {
        Dual d(value);
        d.g[slot] = 1.0;
        return d;
    }

    friend Dual operator+(const Dual& a, const Dual& b) {
        Dual r(a.v + b.v);
        for (int k = 0; k < K; ++k) r.g[k] = a.g[k] + b.g[k];
        return r;
    }
    friend Dual operator-(const Dual& a, const Dual& b) {
        Dual r(a.v - b.v);
        for (int k = 0; k < K; ++k) r.g[k] = a.g[k] - b.g[k];
        return r;
    }
    friend Dual operator-(const Dual& a) {
        Dual r(-a.v);
        for (int k = 0; k < K; ++k) r.g[k] = -a.g[k];
        return r;
    }
    friend Dual operator*(const Dual& a, const Dual& b) {
        Dual r(a.v * b.v);
        for (int k = 0; k < K; ++k) r.g[k] = a.g[k] * b.v + a.v * b.g[k];
        return r;
    }
    friend Dual operator/(const Dual& a, const Dual& b) {
        const double inv = 1.0 / b.v;
        Dual r(a.v * inv);
        for (int k = 0; k < K; ++k) r.g[k] = (a.g[k] - r.v * b.g[k]) * inv;
        return r;
    }
    friend Dual sqrt(const Dual& a) {
        Dual r(std::sqrt(a.v));
        const double scale = r.v > 0.0 ? 0.5 / r.v : 0.0;
        for (int k = 0; k < K; ++k) r.g[k] = a.g[k] * scale;
        return r;
    }
};

inline double value_of(double x) { return x; }
template <int K>
double value_of(const Dual<K>& x) { return x.v; }

}  // namespace rfhgn::detail
