// causal_chain.hpp: time-domain propagation of driven Liouville-space chains
//
// A chain state obeys x(t) = int_{-inf}^t G(t - tau) src(tau) dtau with the
// diagonal propagator G(t) = -i exp(-i Lambda t). On each panel [t_lo, t_hi]
//   x(t) = e^{-i lambda (t - t_lo)} [ x(t_lo) - i Q(t) ],
//   Q(t) = int_{t_lo}^t e^{i lambda (tau - t_lo)} src(tau) dtau,
// and Q is represented by the Chebyshev antiderivative of the integrand sampled
// at first-kind Chebyshev nodes. The result can be evaluated at any time.

#pragma once

#include "vmisim/core_model.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <vector>

namespace vmisim {

using FieldFn = std::function<CVec3(double)>;
using StateFn = std::function<Eigen::VectorXcd(double)>;

// Uniform panels of Chebyshev nodes covering [t0, t0 + panels * width].
class TimeGrid {
public:
    static constexpr int kNodes = 24;

    TimeGrid(double t_start, double t_end, double max_width) : t0_(t_start) {
        if (!(t_end > t_start)) throw NumericalError("time window is empty");
        if (!(max_width > 0.0)) throw NumericalError("panel width must be positive");
        panels_ = std::max(1, static_cast<int>(std::ceil((t_end - t_start) / max_width)));
        width_ = (t_end - t_start) / panels_;
        x_.resize(kNodes);
        weights_.resize(kNodes);
        cosine_.resize(kNodes, kNodes);
        for (int j = 0; j < kNodes; ++j) {
            const double th = kPi * (j + 0.5) / kNodes;
            x_[j] = std::cos(th);
            // Fejer's first rule
            double s = 0.0;
            for (int k = 1; k <= kNodes / 2; ++k) s += std::cos(2.0 * k * th) / (4.0 * k * k - 1.0);
            weights_[j] = 2.0 / kNodes * (1.0 - 2.0 * s);
            for (int k = 0; k < kNodes; ++k) cosine_(k, j) = std::cos(k * th);
        }
    }

    double start() const { return t0_; }
    double end() const { return t0_ + panels_ * width_; }
    double width() const { return width_; }
    int panels() const { return panels_; }
    int nodes() const { return kNodes; }

    double panel_start(int p) const { return t0_ + p * width_; }
    double node_time(int p, int j) const { return panel_start(p) + 0.5 * width_ * (x_[j] + 1.0); }
    double node(int j) const { return x_[j]; }
    // Quadrature weight of node j on a panel, including the half-width scale.
    double weight(int j) const { return 0.5 * width_ * weights_[j]; }

    // Chebyshev coefficients of samples taken at the nodes (row k = T_k).
    Eigen::MatrixXcd coefficients(const Eigen::MatrixXcd& samples_by_node) const {
        // samples: D x n, returns D x n coefficients
        Eigen::MatrixXcd c = samples_by_node * cosine_.transpose().cast<cplx>() * (2.0 / kNodes);
        c.col(0) *= 0.5;
        return c;
    }

private:
    double t0_;
    double width_ = 0.0;
    int panels_ = 0;
    std::vector<double> x_, weights_;
    Eigen::MatrixXd cosine_;
};

// Piecewise representation of one chain state.
class Trajectory {
public:
    Trajectory(const SuperOpSpace& space, std::shared_ptr<const TimeGrid> grid)
        : lambda_(space.eigenvalues()), grid_(std::move(grid)) {}

    Eigen::VectorXcd operator()(double t) const {
        const auto& g = *grid_;
        const int D = static_cast<int>(lambda_.size());
        if (t < g.start()) return Eigen::VectorXcd::Zero(D);
        if (t >= g.end()) {
            Eigen::VectorXcd out(D);
            const double dt = t - g.end();
            for (int p = 0; p < D; ++p) out(p) = end_(p) == 0.0 ? cplx(0.0) : std::exp(-I * lambda_(p) * dt) * end_(p);
            return out;
        }
        const int k = std::min(g.panels() - 1, static_cast<int>((t - g.start()) / g.width()));
        const double dt = t - g.panel_start(k);
        const double x = 2.0 * dt / g.width() - 1.0;
        const Eigen::VectorXcd q = clenshaw(q_[k], x);
        Eigen::VectorXcd out(D);
        for (int p = 0; p < D; ++p) out(p) = std::exp(-I * lambda_(p) * dt) * (start_[k](p) - I * q(p));
        return out;
    }

    const Eigen::VectorXcd& final_state() const { return end_; }

    // Fills the trajectory from a source sampled at every grid node.
    void propagate(const StateFn& src) {
        const auto& g = *grid_;
        const int D = static_cast<int>(lambda_.size());
        const int n = g.nodes();
        const double half = 0.5 * g.width();
        q_.assign(g.panels(), Eigen::MatrixXcd());
        start_.assign(g.panels(), Eigen::VectorXcd());
        Eigen::VectorXcd x = Eigen::VectorXcd::Zero(D);
        Eigen::MatrixXcd samples(D, n);
        for (int k = 0; k < g.panels(); ++k) {
            start_[k] = x;
            for (int j = 0; j < n; ++j) {
                const double s = g.node_time(k, j) - g.panel_start(k);
                const Eigen::VectorXcd v = src(g.node_time(k, j));
                for (int p = 0; p < D; ++p) samples(p, j) = v(p) == 0.0 ? cplx(0.0) : std::exp(I * lambda_(p) * s) * v(p);
            }
            const Eigen::MatrixXcd a = g.coefficients(samples);
            // antiderivative coefficients with F(-1) = 0
            Eigen::MatrixXcd b = Eigen::MatrixXcd::Zero(D, n + 1);
            const auto coef = [&](int m) -> Eigen::VectorXcd {
                return m < n ? Eigen::VectorXcd(a.col(m)) : Eigen::VectorXcd::Zero(D);
            };
            b.col(1) = coef(0) - 0.5 * coef(2);
            for (int m = 2; m <= n; ++m) b.col(m) = (coef(m - 1) - coef(m + 1)) / (2.0 * m);
            Eigen::VectorXcd at_minus = Eigen::VectorXcd::Zero(D);
            for (int m = 1; m <= n; ++m) at_minus += (m % 2 ? -1.0 : 1.0) * b.col(m);
            b.col(0) = -at_minus;
            b *= half;
            q_[k] = b;
            const Eigen::VectorXcd q_end = b.rowwise().sum();
            for (int p = 0; p < D; ++p) x(p) = std::exp(-I * lambda_(p) * g.width()) * (start_[k](p) - I * q_end(p));
        }
        end_ = x;
    }

private:
    static Eigen::VectorXcd clenshaw(const Eigen::MatrixXcd& c, double x) {
        const int m = static_cast<int>(c.cols());
        Eigen::VectorXcd b1 = Eigen::VectorXcd::Zero(c.rows()), b2 = b1;
        for (int k = m - 1; k >= 1; --k) {
            Eigen::VectorXcd b0 = c.col(k) + 2.0 * x * b1 - b2;
            b2 = std::move(b1);
            b1 = std::move(b0);
        }
        return c.col(0) + x * b1 - b2;
    }

    Eigen::VectorXcd lambda_;
    std::shared_ptr<const TimeGrid> grid_;
    std::vector<Eigen::MatrixXcd> q_;
    std::vector<Eigen::VectorXcd> start_;
    Eigen::VectorXcd end_;
};

// x(t) = int^t G(t - tau) src(tau) dtau.
inline Trajectory propagate(const SuperOpSpace& space, std::shared_ptr<const TimeGrid> grid, const StateFn& src) {
    Trajectory tr(space, std::move(grid));
    tr.propagate(src);
    return tr;
}

// Chain in which each leg interacts once, summed over every chronological
// ordering of the legs (the time-ordered response contracted with the fields).
class OrderedChain {
public:
    OrderedChain(const SuperOpSpace& space, std::shared_ptr<const TimeGrid> grid, std::vector<FieldFn> legs)
        : legs_(std::move(legs)) {
        const int n = static_cast<int>(legs_.size());
        if (n < 1 || n > 4) throw ModelError("ordered chains support 1 to 4 legs");
        states_.resize(std::size_t{1} << n);
        for (unsigned mask = 1; mask < (1u << n); ++mask) {
            const auto src = [&, mask](double t) {
                Eigen::VectorXcd s = Eigen::VectorXcd::Zero(space.dim());
                for (int l = 0; l < n; ++l) {
                    if (!(mask & (1u << l))) continue;
                    const unsigned rest = mask & ~(1u << l);
                    const Eigen::VectorXcd prev = rest == 0 ? space.ground() : (*states_[rest])(t);
                    s += space.apply_minus(legs_[l](t), prev);
                }
                return s;
            };
            states_[mask] = std::make_unique<Trajectory>(propagate(space, grid, src));
        }
    }

    Eigen::VectorXcd operator()(double t) const { return (*states_.back())(t); }
    const Trajectory& full() const { return *states_.back(); }

private:
    std::vector<FieldFn> legs_;
    std::vector<std::unique_ptr<Trajectory>> states_;
};

// One step of a fixed-order chain: the leg's field and the allowed delay window
// (lag_lo, lag_hi) between the previous interaction and this one.
struct ChainStep {
    FieldFn field;
    double lag_lo = 0.0;
    double lag_hi = std::numeric_limits<double>::infinity();
};

// Chain with a fixed interaction order and optional delay windows.
class FixedChain {
public:
    FixedChain(const SuperOpSpace& space, std::shared_ptr<const TimeGrid> grid, std::vector<ChainStep> steps)
        : lambda_(space.eigenvalues()), steps_(std::move(steps)) {
        if (steps_.empty()) throw ModelError("fixed chain needs at least one step");
        for (std::size_t l = 0; l < steps_.size(); ++l) {
            const auto src = [&, l](double t) {
                const Eigen::VectorXcd prev = l == 0 ? space.ground() : windowed(l, t);
                return space.apply_minus(steps_[l].field(t), prev);
            };
            p_.push_back(std::make_unique<Trajectory>(propagate(space, grid, src)));
        }
    }

    Eigen::VectorXcd operator()(double t) const { return (*p_.back())(t); }

private:
    // State after step l - 1, keeping only interactions that precede t by a
    // delay inside step l's window.
    Eigen::VectorXcd windowed(std::size_t l, double t) const {
        const auto& s = steps_[l];
        if (s.lag_lo == 0.0 && std::isinf(s.lag_hi)) return (*p_[l - 1])(t);
        Eigen::VectorXcd out = shifted(l - 1, t, s.lag_lo);
        if (!std::isinf(s.lag_hi)) out -= shifted(l - 1, t, s.lag_hi);
        return out;
    }

    // e^{-i lambda lag} P_l(t - lag)
    Eigen::VectorXcd shifted(std::size_t l, double t, double lag) const {
        Eigen::VectorXcd v = (*p_[l])(t - lag);
        if (lag != 0.0)
            for (int p = 0; p < v.size(); ++p) v(p) *= std::exp(-I * lambda_(p) * lag);
        return v;
    }

    Eigen::VectorXcd lambda_;
    std::vector<ChainStep> steps_;
    std::vector<std::unique_ptr<Trajectory>> p_;
};

// int dtau w(tau) over the grid, with w sampled at the nodes.
template <class F>
cplx integrate_on_grid(const TimeGrid& g, F&& w) {
    cplx sum = 0.0;
    for (int k = 0; k < g.panels(); ++k)
        for (int j = 0; j < g.nodes(); ++j) sum += g.weight(j) * w(g.node_time(k, j));
    return sum;
}

} // namespace vmisim
