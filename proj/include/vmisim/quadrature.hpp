// quadrature.hpp: globally adaptive Gauss-Kronrod for complex and vector integrands
//
// Boost supplies the 21-point Kronrod and embedded 10-point Gauss rules; the
// driver below bisects the interval with the largest error until the summed
// error meets the tolerance. Values may be cplx or fixed-size Eigen vectors.

#pragma once

#include "vmisim/types.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace vmisim {

template <class T>
struct QuadResult {
    T value;
    double error = 0.0;
    bool converged = true;
};

namespace detail {

inline double magnitude(const cplx& v) { return std::abs(v); }
template <class Derived>
double magnitude(const Eigen::MatrixBase<Derived>& v) { return v.norm(); }

template <class T>
T zero_like() {
    if constexpr (std::is_same_v<T, cplx>) return cplx(0.0);
    else return T::Zero();
}

template <class T>
struct Panel {
    double a, b;
    T value;
    double error;
    double l1;
};

template <class T, class F>
Panel<T> gk21(F& f, double a, double b) {
    using K = boost::math::quadrature::gauss_kronrod<double, 21>;
    using G = boost::math::quadrature::gauss<double, 10>;
    const auto& x = K::abscissa();
    const auto& wk = K::weights();
    const auto& wg = G::weights();
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    const T f0 = f(mid);
    T kron = f0 * wk[0];
    T gauss = zero_like<T>();
    double l1 = magnitude(f0) * wk[0];
    for (std::size_t i = 1; i < x.size(); ++i) {
        const T fp = f(mid + half * x[i]);
        const T fm = f(mid - half * x[i]);
        kron += (fp + fm) * wk[i];
        l1 += (magnitude(fp) + magnitude(fm)) * wk[i];
        if (i % 2 == 1) gauss += (fp + fm) * wg[i / 2];
    }
    return {a, b, T(kron * half), magnitude(T((kron - gauss) * half)), l1 * std::abs(half)};
}

} // namespace detail

// int_a^b f with relative tolerance `rel_tol`; the answer counts as converged
// once the error estimate is below rel_tol |I| or at the roundoff floor of
// int |f|. Empty or reversed intervals integrate to zero.
template <class T, class F>
QuadResult<T> integrate_adaptive(F f, double a, double b, double rel_tol, int max_panels = 4000) {
    if (!(b > a)) return {detail::zero_like<T>(), 0.0, true};
    std::vector<detail::Panel<T>> panels{detail::gk21<T>(f, a, b)};
    const double floor_eps = 50.0 * std::numeric_limits<double>::epsilon();
    while (true) {
        T total = detail::zero_like<T>();
        double err = 0.0, l1 = 0.0;
        for (const auto& p : panels) {
            total += p.value;
            err += p.error;
            l1 += p.l1;
        }
        if (err <= std::max(rel_tol * detail::magnitude(total), floor_eps * l1)) return {total, err, true};
        if (static_cast<int>(panels.size()) >= max_panels) return {total, err, false};
        const auto worst = std::max_element(panels.begin(), panels.end(),
                                            [](const auto& l, const auto& r) { return l.error < r.error; });
        const double lo = worst->a, hi = worst->b, mid = 0.5 * (lo + hi);
        *worst = detail::gk21<T>(f, lo, mid);
        panels.push_back(detail::gk21<T>(f, mid, hi));
    }
}

} // namespace vmisim
