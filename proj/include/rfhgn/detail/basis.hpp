#pragma once

#include "rfhgn/detail/dual.hpp"

#include <array>
#include <cmath>

namespace rfhgn::detail {

/// Columns e[0..dim) of the local frame; e[c][r] is row r of column c.
template <class T>
struct BasisResult {
    std::array<std::array<T, 3>, 3> e{};
    bool colinear = false;
    bool axis_fallback = false;
};

template <class T>
T dot3(const std::array<T, 3>& a, const std::array<T, 3>& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

template <class T>
std::array<T, 3> cross3(const std::array<T, 3>& a, const std::array<T, 3>& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

/// Orthonormal frame from one (d=2) or two (d=3) centered reference
/// positions. Branches are decided on values only, so with T = Dual the
/// result carries derivatives of the active branch.
template <class T>
BasisResult<T> basis_from_refs(int dim, const T* ref1, const T* ref2, double eps_colinear, double eps_deg) {
    using std::abs;
    using std::sqrt;
    BasisResult<T> out;
    if (dim == 1) {
        out.e[0][0] = T(1.0);
        return out;
    }
    if (dim == 2) {
        const T norm = sqrt(ref1[0] * ref1[0] + ref1[1] * ref1[1]);
        const T x = ref1[0] / norm;
        const T y = ref1[1] / norm;
        out.e[0] = {x, y, T(0.0)};
        out.e[1] = {-y, x, T(0.0)};
        return out;
    }

    std::array<T, 3> e1{ref1[0], ref1[1], ref1[2]};
    const T n1 = sqrt(dot3(e1, e1));
    for (auto& c : e1) c = c / n1;

    auto least_aligned_axis = [&]() {
        int best = 0;
        for (int k = 1; k < 3; ++k) {
            if (std::abs(value_of(e1[k])) < std::abs(value_of(e1[best]))) best = k;
        }
        std::array<T, 3> axis{T(0.0), T(0.0), T(0.0)};
        axis[best] = T(1.0);
        return axis;
    };

    std::array<T, 3> e2p;
    if (ref2 != nullptr) {
        e2p = {ref2[0], ref2[1], ref2[2]};
        const T n2 = sqrt(dot3(e2p, e2p));
        for (auto& c : e2p) c = c / n2;
        if (std::abs(value_of(dot3(e1, e2p))) > eps_colinear) {
            e2p = cross3(e1, e2p);
            out.colinear = true;
        }
    } else {
        e2p = least_aligned_axis();
        out.axis_fallback = true;
    }

    auto project_out = [&](const std::array<T, 3>& v) {
        const T c = dot3(v, e1);
        return std::array<T, 3>{v[0] - c * e1[0], v[1] - c * e1[1], v[2] - c * e1[2]};
    };
    std::array<T, 3> u = project_out(e2p);
    if (value_of(sqrt(dot3(u, u))) < eps_deg) {
        u = project_out(least_aligned_axis());
        out.axis_fallback = true;
    }
    const T nu = sqrt(dot3(u, u));
    for (auto& c : u) c = c / nu;

    out.e[0] = e1;
    out.e[1] = u;
    out.e[2] = cross3(e1, u);
    return out;
}

}  // namespace rfhgn::detail
