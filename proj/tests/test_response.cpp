#include "oracle.hpp"

#include "vmisim/response.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace vmisim;

namespace {

const SuperOpSpace& tls() {
    static const SuperOpSpace s(two_level("a", 1.0, 0.05));
    return s;
}

const SuperOpSpace& ladder() {
    static const SuperOpSpace s(three_level("b", 1.0, 1.9, 0.1));
    return s;
}

// Three-level model with dipoles along several axes and unequal rates.
MolecularModel skew_model() {
    auto m = make_model("s", {0.0, 1.1, 2.0});
    set_dephasing(m, 0, 1, 0.12);
    set_dephasing(m, 1, 2, 0.09);
    set_dephasing(m, 0, 2, 0.15);
    set_dipole(m, 0, 1, CVec3(0.3, 0.0, 1.0));
    set_dipole(m, 1, 2, CVec3(cplx(0.0, 0.2), 0.5, 0.7));
    set_dipole(m, 0, 2, CVec3(0.1, 0.4, 0.5));
    return m;
}

// Closed form for a two-level system with z dipole mu.
cplx alpha_closed(double w, double weg, double g, double mu) {
    return mu * mu * (1.0 / (cplx(w - weg, g)) - 1.0 / (cplx(w + weg, g)));
}

} // namespace

TEST(Response, AlphaTwoLevelClosedForm) {
    for (double w = -2.0; w <= 2.0; w += 0.05)
        EXPECT_NEAR(std::abs(alpha_freq(tls(), w, 2, 2) - alpha_closed(w, 1.0, 0.05, 1.0)), 0.0, 1e-10);
}

TEST(Response, AlphaPeaksAtResonance) {
    double best = 0.0, arg = 0.0;
    for (double w = 0.5; w <= 1.5; w += 0.001) {
        const double v = std::abs(alpha_freq(tls(), w, 2, 2).imag());
        if (v > best) best = v, arg = w;
    }
    EXPECT_NEAR(arg, 1.0, 2e-3);
}

TEST(Response, AlphaCrossPolarizationVanishes) {
    EXPECT_EQ(alpha_freq(tls(), 0.9, 0, 2), cplx(0.0));
    EXPECT_EQ(alpha_freq(tls(), 0.9, 2, 0), cplx(0.0));
}

// alpha(-w) = conj(alpha(w)) for real w: the response to a real field is real.
TEST(Response, AlphaReflectionSymmetry) {
    for (double w = -3.0; w <= 3.0; w += 0.1) {
        const cplx a = alpha_freq(tls(), w, 2, 2), b = alpha_freq(tls(), -w, 2, 2);
        EXPECT_NEAR(std::abs(b - std::conj(a)), 0.0, 1e-12);
    }
}

TEST(Response, AlphaTimeProperties) {
    EXPECT_EQ(alpha_time(tls(), 0.0, 1.0, 2, 2), cplx(0.0));
    // equal times: -i <V_+ V_-> by direct contraction
    const SuperOpSpace& s = tls();
    const cplx direct = -I * (s.trace_row() * s.v_plus(2) * s.v_minus(2) * s.ground())(0);
    EXPECT_NEAR(std::abs(alpha_time(s, 2.0, 2.0, 2, 2) - direct), 0.0, 1e-15);
}

TEST(Response, AlphaTimeTransform) {
    for (double w : {0.7, 1.0, 1.3}) {
        const cplx ft = oracle::panels([&](double t) { return std::exp(I * w * t) * alpha_time(tls(), t, 0.0, 2, 2); },
                                       0.0, 800.0, 1.0);
        const cplx ref = alpha_freq(tls(), w, 2, 2);
        EXPECT_LT(std::abs(ft - ref) / std::abs(ref), 1e-5);
    }
}

TEST(Response, BetaVanishesForTwoLevel) {
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) {
                for (double t = 0.0; t < 5.0; t += 1.0)
                    for (double tp = 0.0; tp < 5.0; tp += 1.0)
                        EXPECT_LT(std::abs(beta_bar_time(tls(), t, tp, i, j, k)), 1e-14);
                EXPECT_LT(std::abs(beta_freq(tls(), 0.9, 1.1, i, j, k)), 1e-14);
                EXPECT_LT(std::abs(beta_freq(tls(), -0.4, 2.0, i, j, k)), 1e-14);
            }
}

TEST(Response, BetaNegativeArgumentsVanish) {
    EXPECT_EQ(beta_bar_time(ladder(), -0.1, 1.0, 2, 2, 2), cplx(0.0));
    EXPECT_EQ(beta_bar_time(ladder(), 1.0, -0.1, 2, 2, 2), cplx(0.0));
    EXPECT_NE(beta_bar_time(ladder(), 1.0, 1.0, 2, 2, 2), cplx(0.0));
}

// Envelope of the ladder beta is exp(-gamma (t + t')) when all rates are equal:
// the undamped part is quasi-periodic, so its running maximum is flat.
TEST(Response, BetaEnvelopeDecay) {
    const double gamma = 0.1;
    std::vector<double> x, y;
    for (double t = 0.0; t <= 200.0; t += 10.0) {
        double mx = 0.0;
        for (double dt = 0.0; dt < 20.0; dt += 0.02)
            mx = std::max(mx, std::abs(beta_bar_time(ladder(), t + dt, t + dt, 2, 2, 2)) * std::exp(2.0 * gamma * dt));
        x.push_back(2.0 * t);
        y.push_back(std::log(mx));
    }
    const double n = double(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) sx += x[i], sy += y[i], sxx += x[i] * x[i], sxy += x[i] * y[i];
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    EXPECT_NEAR(-slope, gamma, 0.02 * gamma);
}

TEST(Response, BetaOrderedIsGatedSum) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    const SuperOpSpace s(skew_model());
    for (int trial = 0; trial < 100; ++trial) {
        const double ti = u(rng), tj = u(rng), tk = u(rng);
        const int i = trial % 3, j = (trial / 3) % 3, k = (trial / 9) % 3;
        cplx brute = 0.0;
        if (ti >= tj && tj >= tk) brute += beta_bar_time(s, ti - tj, tj - tk, i, j, k);
        if (ti >= tk && tk >= tj) brute += beta_bar_time(s, ti - tk, tk - tj, i, k, j);
        const cplx got = beta_ordered(s, ti, tj, tk, i, j, k);
        EXPECT_NEAR(std::abs(got - brute), 0.0, 1e-12);
        EXPECT_EQ(got, beta_ordered(s, ti, tk, tj, i, k, j));
        if (ti < tj && ti < tk) {
            EXPECT_EQ(got, cplx(0.0));
        }
    }
}

TEST(Response, BetaDoubleTransform) {
    const SuperOpSpace s(skew_model());
    const double w1 = 0.9, w2 = 1.1;
    // inner transform over t' pairs with w1, the outer over t with w1 + w2;
    // populations are reached in the middle interval, so regularize with Im w
    const cplx a(w1, 0.05), b(w2, 0.0);
    const cplx ft = oracle::panels2(
        [&](double t, double tp) {
            return std::exp(I * (a + b) * t) * std::exp(I * a * tp) * beta_bar_time(s, t, tp, 2, 0, 2);
        },
        0.0, 300.0, 0.0, 300.0, 3.0);
    const cplx ref = beta_freq(s, a, b, 2, 0, 2);
    EXPECT_LT(std::abs(ft - ref) / std::abs(ref), 1e-4);
}

TEST(Response, BetaHighFrequencyDecay) {
    const SuperOpSpace s(skew_model());
    EXPECT_LT(std::abs(beta_freq(s, 1e7, 1.0, 2, 2, 2)), 1e-6);
}

TEST(Response, GammaProperties) {
    EXPECT_EQ(gamma_bar_time(tls(), 1.0, -1.0, 1.0, 2, 2, 2, 2), cplx(0.0));
    EXPECT_GT(std::abs(gamma_bar_time(tls(), 20.0, 20.0, 20.0, 2, 2, 2, 2)), 0.0);
}

TEST(Response, GammaTripleTransform) {
    const SuperOpSpace& s = tls();
    // imaginary parts keep every interval short enough for a dense 3-D rule
    const cplx w1(0.9, 0.8), w2(0.2, 0.4), w3(1.05, 0.0);
    const cplx ft = oracle::panels(
        [&](double t) {
            return oracle::panels2(
                [&](double t1, double t2) {
                    return std::exp(I * (w1 + w2 + w3) * t) * std::exp(I * (w1 + w2) * t1) * std::exp(I * w1 * t2) *
                           gamma_bar_time(s, t, t1, t2, 2, 2, 2, 2);
                },
                0.0, 30.0, 0.0, 45.0, 3.0);
        },
        0.0, 30.0, 3.0);
    const cplx ref = gamma_freq(s, w1, w2, w3, 2, 2, 2, 2);
    EXPECT_LT(std::abs(ft - ref) / std::abs(ref), 1e-4);
}

TEST(Response, GammaOrderedSumsSixOrderings) {
    const SuperOpSpace s(skew_model());
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        const double ti = 4.0;
        std::array<double, 3> t{u(rng), u(rng), u(rng)};
        std::array<int, 3> nu{trial % 3, (trial + 1) % 3, 2};
        // brute force: only the chronological ordering survives
        std::array<int, 3> p{0, 1, 2};
        std::sort(p.begin(), p.end(), [&](int a, int b) { return t[a] > t[b]; });
        const cplx brute = gamma_bar_time(s, ti - t[p[0]], t[p[0]] - t[p[1]], t[p[1]] - t[p[2]], 1, nu[p[0]], nu[p[1]], nu[p[2]]);
        EXPECT_NEAR(std::abs(gamma_ordered(s, ti, t, 1, nu) - brute), 0.0, 1e-13);
    }
}

TEST(Response, DipoleScaling) {
    auto m = skew_model();
    const SuperOpSpace s1(m);
    for (auto& mu : m.dipole) mu *= 2.0;
    const SuperOpSpace s2(m);
    const cplx a1 = alpha_freq(s1, 0.9, 2, 0), a2 = alpha_freq(s2, 0.9, 2, 0);
    const cplx b1 = beta_freq(s1, 0.9, 1.0, 2, 1, 0), b2 = beta_freq(s2, 0.9, 1.0, 2, 1, 0);
    const cplx g1 = gamma_freq(s1, 0.9, 1.0, 0.3, 2, 1, 0, 2), g2 = gamma_freq(s2, 0.9, 1.0, 0.3, 2, 1, 0, 2);
    EXPECT_NEAR(std::abs(a2 - 4.0 * a1), 0.0, 1e-12 * std::abs(a2));
    EXPECT_NEAR(std::abs(b2 - 8.0 * b1), 0.0, 1e-12 * std::abs(b2));
    EXPECT_NEAR(std::abs(g2 - 16.0 * g1), 0.0, 1e-12 * std::abs(g2));
}

TEST(Response, EvaluateDispatch) {
    const SuperOpSpace& s = ladder();
    EXPECT_EQ(evaluate_response(s, ResponseKind::alpha, {2, 2}, {0.9}, true).value, alpha_freq(s, 0.9, 2, 2));
    EXPECT_EQ(evaluate_response(s, ResponseKind::beta_bar, {2, 2, 2}, {1.0, 2.0}, false).value,
              beta_bar_time(s, 1.0, 2.0, 2, 2, 2));
    const cplx ord = evaluate_response(s, ResponseKind::beta_ordered, {2, 2, 2}, {0.9, 1.0}, true).value;
    EXPECT_NEAR(std::abs(ord - (beta_freq(s, 0.9, 1.0, 2, 2, 2) + beta_freq(s, 1.0, 0.9, 2, 2, 2))), 0.0, 1e-14);
    EXPECT_THROW(evaluate_response(s, ResponseKind::alpha, {2}, {0.9}, true), ModelError);
    EXPECT_THROW(response_kind_from_string("delta"), ModelError);
}
