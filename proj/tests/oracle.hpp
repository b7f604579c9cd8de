// oracle.hpp: independent numerical references used by the tests
//
// Nothing here calls into the library's integration machinery: quadrature is
// fixed-order Gauss-Legendre on uniform panels, derivatives are central
// differences with Richardson extrapolation.

#pragma once

#include <boost/math/quadrature/gauss.hpp>

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <random>

namespace oracle {

using cplx = std::complex<double>;

// int_a^b f(t) dt with a 30-point Gauss rule on panels no wider than `panel`.
template <class F>
auto panels(F f, double a, double b, double panel) {
    using R = decltype(f(a));
    R sum{};
    const int n = std::max(1, static_cast<int>(std::ceil((b - a) / panel)));
    const double h = (b - a) / n;
    for (int i = 0; i < n; ++i)
        sum += boost::math::quadrature::gauss<double, 30>::integrate(f, a + i * h, a + (i + 1) * h);
    return sum;
}

// Double integral over a rectangle, tensor-product panels.
template <class F>
cplx panels2(F f, double a0, double b0, double a1, double b1, double panel) {
    return panels([&](double x) { return panels([&](double y) { return f(x, y); }, a1, b1, panel); }, a0, b0, panel);
}

// (-lap delta + grad grad) applied to e^{i kappa r}/r at r, by finite differences.
inline Eigen::Matrix3cd coupling_fd(const Eigen::Vector3d& r, double kappa) {
    const auto f = [kappa](const Eigen::Vector3d& x) {
        const double n = x.norm();
        return std::exp(cplx(0.0, kappa * n)) / n;
    };
    const auto hessian = [&](double h) {
        Eigen::Matrix3cd H;
        const cplx f0 = f(r);
        for (int i = 0; i < 3; ++i) {
            Eigen::Vector3d ei = Eigen::Vector3d::Zero();
            ei(i) = h;
            H(i, i) = (f(r + ei) - 2.0 * f0 + f(r - ei)) / (h * h);
            for (int j = i + 1; j < 3; ++j) {
                Eigen::Vector3d ej = Eigen::Vector3d::Zero();
                ej(j) = h;
                H(i, j) = (f(r + ei + ej) - f(r + ei - ej) - f(r - ei + ej) + f(r - ei - ej)) / (4.0 * h * h);
                H(j, i) = H(i, j);
            }
        }
        return H;
    };
    const double h = 1e-4 * r.norm();
    const Eigen::Matrix3cd H = (4.0 * hessian(h / 2.0) - hessian(h)) / 3.0;
    return -H.trace() * Eigen::Matrix3cd::Identity() + H;
}

// Random rotation via QR of a Gaussian matrix.
inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Eigen::Matrix3d a;
    for (int i = 0; i < 9; ++i) a.data()[i] = g(rng);
    Eigen::HouseholderQR<Eigen::Matrix3d> qr(a);
    Eigen::Matrix3d q = qr.householderQ();
    if (q.determinant() < 0) q.col(0) *= -1.0;
    return q;
}

} // namespace oracle
