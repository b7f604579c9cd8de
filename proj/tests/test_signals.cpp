#include "vmisim/signals.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace vmisim;

namespace {

Pulse drive(double t, double w, double sigma, const Vec3& k = Vec3::UnitX(), const Vec3& pol = Vec3::UnitZ(),
            double c = 1.0) {
    return make_pulse(PulseRole::drive, t, w, sigma, 1.0, k, pol, c);
}

Pulse detection(double t, double w, double sigma, const Vec3& k = Vec3::UnitX(), const Vec3& pol = Vec3::UnitZ(),
                double c = 1.0) {
    return make_pulse(PulseRole::detection, t, w, sigma, 1.0, k, pol, c);
}

MolecularModel at(MolecularModel m, const Vec3& r) {
    m.position = r;
    return m;
}

// Two-level dimer driven and detected at resonance.
Scenario first_order_dimer(double sep = 1.0) {
    Scenario s;
    s.molecules = {at(two_level("a", 1.0, 0.1), Vec3::Zero()), at(two_level("b", 1.0, 0.1), Vec3(0, 0, sep))};
    s.pulses = {drive(0.0, 1.0, 3.0), detection(0.0, 1.0, 3.0)};
    s.vmi = true;
    return s;
}

// Three-level ladder dimer at second order; near field so both domains share the static coupling.
Scenario ladder_dimer(Domain d, double c = 1000.0) {
    Scenario s;
    s.c = c;
    s.molecules = {at(three_level("a", 1.0, 1.9, 0.1), Vec3::Zero()),
                   at(three_level("b", 1.0, 1.9, 0.1), Vec3(0, 0, 1))};
    s.pulses = {drive(0.0, 1.0, 2.0, Vec3::UnitX(), Vec3::UnitZ(), c), drive(6.0, 0.9, 2.0, Vec3::UnitX(), Vec3::UnitZ(), c),
                detection(12.0, 1.9, 2.0, Vec3::UnitX(), Vec3::UnitZ(), c)};
    s.order = 2;
    s.vmi = true;
    s.domain = d;
    return s;
}

Scenario as_two_level(Scenario s) {
    for (auto& m : s.molecules) m = at(two_level(m.id, 1.0, 0.1), m.position);
    return s;
}

double relative(double got, double want) { return std::abs(got - want) / std::abs(want); }

} // namespace

// --- baseline -----------------------------------------------------------------

TEST(Baseline, TimeAndFrequencyAgreeFirstOrder) {
    Scenario s;
    s.molecules = {two_level("a", 1.0, 0.1)};
    s.pulses = {drive(0.0, 1.0, 2.0), detection(3.0, 1.05, 2.0)};
    const double f = evaluate_point(s).value;
    s.domain = Domain::time;
    const double t = evaluate_point(s).value;
    EXPECT_LT(relative(t, f), 1e-6) << t << " vs " << f;
}

TEST(Baseline, TimeAndFrequencyAgreeSecondOrder) {
    Scenario s;
    s.molecules = {three_level("a", 1.0, 1.9, 0.1)};
    s.pulses = {drive(0.0, 1.0, 2.0), drive(6.0, 0.9, 2.0), detection(12.0, 1.9, 2.0)};
    s.order = 2;
    const double f = evaluate_point(s).value;
    s.domain = Domain::time;
    const double t = evaluate_point(s).value;
    EXPECT_LT(relative(t, f), 1e-4) << t << " vs " << f;
}

TEST(Baseline, ExactlyAdditiveInMolecules) {
    Scenario one;
    one.molecules = {three_level("a", 1.0, 1.9, 0.1)};
    one.pulses = {drive(0.0, 1.1, 2.0), detection(1.0, 1.0, 2.0)};
    Scenario two = one;
    two.molecules.push_back(one.molecules[0]);
    two.molecules.back().id = "b";
    const SignalPoint p1 = evaluate_point(one), p2 = evaluate_point(two);
    EXPECT_EQ(p2.value, 2.0 * p1.value);
    EXPECT_EQ(p2.molecule_terms, 2u);
    Scenario four = two;
    for (const char* id : {"c", "d"}) {
        four.molecules.push_back(one.molecules[0]);
        four.molecules.back().id = id;
    }
    EXPECT_NEAR(evaluate_point(four).value, 4.0 * p1.value, 1e-15 * std::abs(p1.value) * 4.0);
}

TEST(Baseline, TwoLevelResonanceIsPositive) {
    Scenario s;
    s.molecules = {two_level("a", 1.0, 0.1)};
    s.pulses = {drive(0.0, 1.0, 3.0), detection(0.0, 1.0, 3.0)};
    EXPECT_GT(baseline_signal(s).values[0], 0.0);
    s.domain = Domain::time;
    EXPECT_GT(baseline_signal(s).values[0], 0.0);
}

TEST(Baseline, DisjointDetectionVanishes) {
    Scenario s;
    s.molecules = {two_level("a", 1.0, 0.1)};
    s.pulses = {drive(0.0, 1.0, 3.0), detection(0.0, 1.0, 3.0)};
    const double scale = std::abs(evaluate_point(s).value);
    s.pulses[1] = detection(0.0, 5.0, 3.0);
    EXPECT_LT(std::abs(evaluate_point(s).value), 1e-15 * scale);
}

TEST(Baseline, ThirdOrderFrequencyPoleReportsTerm) {
    Scenario s;
    s.molecules = {three_level("a", 1.0, 1.9, 0.1)};
    s.pulses = {drive(0.0, 1.0, 2.0), drive(6.0, 0.9, 2.0), drive(12.0, 0.9, 2.0), detection(18.0, 1.0, 2.0)};
    s.order = 3;
    try {
        evaluate_point(s);
        FAIL() << "expected a numerical error";
    } catch (const NumericalError& e) {
        EXPECT_EQ(e.term(), "baseline");
    }
    s.domain = Domain::time;
    EXPECT_TRUE(std::isfinite(evaluate_point(s).value));
}

// --- first-order vmi ------------------------------------------------------------

TEST(FirstOrder, OrderedPairsContributeEqually) {
    const Scenario s = first_order_dimer();
    const detail::PointEvaluator ev(s);
    const auto [af, bf] = detail::vmi_terms(1)[0];
    cplx ab = 0.0, ba = 0.0;
    for (const auto& z : ev.frequency_branches()) {
        ab += ev.vmi_freq_term(0, 1, af, bf, z, "term1");
        ba += ev.vmi_freq_term(1, 0, af, bf, z, "term1");
    }
    EXPECT_LT(std::abs(ab - ba), 1e-12 * std::abs(ab));
    const double one = (detail::vmi_prefactor(1, Domain::frequency) * ab).imag();
    EXPECT_LT(relative(s1_vmi(s).values[0], 2.0 * one), 1e-12);
    EXPECT_NE(one, 0.0);
}

TEST(FirstOrder, OrthogonalPolarizationVanishes) {
    Scenario s = first_order_dimer();
    s.pulses = {drive(0.0, 1.0, 3.0, Vec3::UnitY(), Vec3::UnitX()),
                detection(0.0, 1.0, 3.0, Vec3::UnitY(), Vec3::UnitX())};
    EXPECT_EQ(s1_vmi(s).values[0], 0.0);
}

TEST(FirstOrder, FarFieldFallsOff) {
    // weak transition dipoles keep the pair term perturbative; kappa r = 1e3
    Scenario s;
    s.molecules = {two_level("a", 1.0, 0.1, 0.01), at(two_level("b", 1.0, 0.1, 0.01), Vec3(0, 0, 1000.0))};
    s.pulses = {drive(0.0, 1.0, 3.0), detection(0.0, 1.0, 3.0)};
    s.vmi = true;
    const double vmi = std::abs(s1_vmi(s).values[0]);
    s.vmi = false;
    const double base = std::abs(baseline_signal(s).values[0]);
    EXPECT_LT(vmi / base, 1e-6);
    EXPECT_GT(vmi, 0.0);
}

TEST(FirstOrder, RejectsCoincidentMolecules) {
    Scenario s = first_order_dimer();
    s.molecules[1].position = Vec3::Zero();
    EXPECT_THROW(s1_vmi(s), ModelError);
}

TEST(FirstOrder, TimeDomainRejected) {
    Scenario s = first_order_dimer();
    s.domain = Domain::time;
    EXPECT_THROW(compute_signal(s), ModelError);
}

// --- second-order vmi -------------------------------------------------------------

TEST(SecondOrder, TwoLevelVanishes) {
    const double ref = std::abs(s2_vmi_freq(ladder_dimer(Domain::frequency)).values[0]);
    ASSERT_GT(ref, 0.0);
    EXPECT_LT(std::abs(s2_vmi_freq(as_two_level(ladder_dimer(Domain::frequency))).values[0]), 1e-14 * ref);
    EXPECT_LT(std::abs(s2_vmi_time(as_two_level(ladder_dimer(Domain::time))).values[0]), 1e-14 * ref);
}

TEST(SecondOrder, RetardationContinuity) {
    Scenario s = ladder_dimer(Domain::time, 1e9);
    const double fast = s2_vmi_time(s).values[0];
    s.diagnostics.ignore_retardation = true;
    const double none = s2_vmi_time(s).values[0];
    EXPECT_LT(relative(fast, none), 1e-8);
}

TEST(SecondOrder, FarDetectionVanishes) {
    Scenario s = ladder_dimer(Domain::frequency);
    const double scale = std::abs(s2_vmi_freq(s).values[0]);
    s.pulses[2] = detection(12.0, 12.0, 2.0, Vec3::UnitX(), Vec3::UnitZ(), s.c);
    EXPECT_LT(std::abs(s2_vmi_freq(s).values[0]), 1e-12 * scale);
}

TEST(SecondOrder, TimeAndFrequencyAgree) {
    const double t = s2_vmi_time(ladder_dimer(Domain::time)).values[0];
    const double f = s2_vmi_freq(ladder_dimer(Domain::frequency)).values[0];
    EXPECT_LT(relative(t, f), 0.01) << t << " vs " << f;
}

TEST(SecondOrder, DiagramsRecombineToCompactForm) {
    Scenario s = ladder_dimer(Domain::time, 100.0);
    s.pulses = {drive(0.0, 1.0, 1.0, Vec3::UnitX(), Vec3::UnitZ(), s.c),
                drive(2.0, 0.9, 1.0, Vec3::UnitX(), Vec3::UnitZ(), s.c),
                detection(4.0, 1.9, 1.0, Vec3::UnitX(), Vec3::UnitZ(), s.c)};
    const auto parts = s2_diagrams_time(s);
    ASSERT_EQ(parts.size(), 10u);
    double sum = 0.0;
    for (const auto& [term, v] : parts) sum += v;
    const double compact = s2_vmi_time(s).values[0];
    EXPECT_LT(relative(sum, compact), 1e-9) << sum << " vs " << compact;
}

TEST(SecondOrder, BreakdownSumsToTotal) {
    const SignalPoint p = evaluate_point(ladder_dimer(Domain::frequency));
    ASSERT_EQ(p.terms.size(), 3u);
    EXPECT_NEAR(p.terms[0] + p.terms[1] + p.terms[2], p.value, 1e-12 * std::abs(p.value));
    EXPECT_EQ(p.pair_terms, 2u);
}

TEST(SecondOrder, RotatingWaveDiagnosticRuns) {
    Scenario s = ladder_dimer(Domain::frequency);
    const double full = s2_vmi_freq(s).values[0];
    s.diagnostics.rwa = true;
    const double rwa = s2_vmi_freq(s).values[0];
    EXPECT_TRUE(std::isfinite(rwa));
    EXPECT_LT(relative(rwa, full), 0.5);
}

// --- effective field -----------------------------------------------------------------

namespace {

Scenario scramble(double gamma_b) {
    Scenario s;
    s.molecules = {at(three_level("a", 1.0, 1.9, 0.1), Vec3::Zero()),
                   at(three_level("b", 1.0, 1.9, gamma_b), Vec3(0, 0, 1))};
    s.pulses = {drive(0.0, 1.0, 2.0), drive(10.0, 0.9, 2.0), detection(10.0, 1.9, 2.0)};
    s.order = 2;
    s.vmi = true;
    s.domain = Domain::time;
    return s;
}

} // namespace

TEST(EffectiveField, Causal) {
    const Scenario s = scramble(0.01);
    const EffectiveField f(s, 1, 0, {1});
    EXPECT_LT(f(-20.0).norm(), 1e-12);
    EXPECT_GT(f(5.0).norm(), 1e-3);
}

TEST(EffectiveField, DecaysAtDephasingRate) {
    const Scenario s = scramble(0.01);
    const EffectiveField f(s, 1, 0, {1});
    // the field oscillates at the carrier; fit log |E| on window-averaged power
    std::vector<double> x, y;
    for (double t0 = 20.0; t0 <= 300.0; t0 += 20.0) {
        double p = 0.0;
        for (int i = 0; i < 400; ++i) p += f(t0 + 20.0 * i / 400.0).squaredNorm();
        x.push_back(t0);
        y.push_back(0.5 * std::log(p));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double rate = -(n * sxy - sx * sy) / (n * sxx - sx * sx);
    EXPECT_NEAR(rate, 0.01, 0.02 * 0.01);
}

TEST(EffectiveField, TwoLevelPairFieldVanishes) {
    const Scenario s = as_two_level(scramble(0.01));
    const EffectiveField f(s, 1, 0, {1, 2});
    for (double t : {5.0, 12.0, 30.0}) EXPECT_EQ(f(t).norm(), 0.0);
}

TEST(EffectiveField, ScrambleKeepsFirstTerm) {
    const SignalPoint p = evaluate_point(scramble(0.01));
    EXPECT_GT(std::abs(p.terms[0]), 0.1 * std::abs(p.value));
}

// --- third order ------------------------------------------------------------------------

TEST(ThirdOrder, OrthogonalPolarizationVanishes) {
    Scenario s;
    s.c = 1000.0;
    s.molecules = {at(three_level("a", 1.0, 1.9, 0.1), Vec3::Zero()),
                   at(three_level("b", 1.0, 1.9, 0.1), Vec3(0, 0, 1))};
    const Vec3 k = Vec3::UnitY(), pol = Vec3::UnitX();
    s.pulses = {drive(0.0, 1.0, 2.0, k, pol, s.c), drive(6.0, 0.9, 2.0, k, pol, s.c),
                drive(12.0, 0.9, 2.0, k, pol, s.c), detection(18.0, 1.0, 2.0, k, pol, s.c)};
    s.order = 3;
    s.vmi = true;
    EXPECT_EQ(s3_cascade(s, Domain::frequency).values[0], 0.0);
}

// --- scaling ------------------------------------------------------------------------------

TEST(Scaling, TermCountsAndUnitPhaseRatio) {
    Scenario fam = first_order_dimer();
    fam.molecules.resize(1);
    fam.diagnostics.unit_phases = true;
    fam.diagnostics.coupling_override = tensor_C(Vec3(0, 0, 1)).matrix;
    const ScalingReport r = scaling_probe(fam, {2, 3, 4, 5}, 1.0);
    for (std::size_t i = 0; i < r.n.size(); ++i) {
        EXPECT_EQ(r.baseline_terms[i], static_cast<std::size_t>(r.n[i]));
        EXPECT_EQ(r.pair_terms[i], static_cast<std::size_t>(r.n[i] * (r.n[i] - 1)));
    }
    EXPECT_EQ(r.pair_terms.back(), 20u);
    EXPECT_NEAR(r.magnitude[2] / r.magnitude[0], 6.0, 1e-10);
    // the fitted exponent is that of N(N-1) over the same N, which tends to 2 only for large N
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int n : r.n) {
        const double x = std::log(n), y = std::log(n * (n - 1.0));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double k = static_cast<double>(r.n.size());
    EXPECT_NEAR(r.exponent, (k * sxy - sx * sy) / (k * sxx - sx * sx), 1e-9);
}

// --- scans, validation, determinism ---------------------------------------------------------

TEST(Scan, RowMajorOverAxes) {
    Scenario s = first_order_dimer();
    s.scan = {{"omega_s", {0.9, 1.0, 1.1}}, {"separation", {1.0, 2.0}}};
    const SignalGrid g = compute_signal(s);
    ASSERT_EQ(g.values.size(), 6u);
    Scenario p = first_order_dimer(2.0);
    p.pulses[1] = detection(0.0, 0.9, 3.0);
    EXPECT_EQ(g.values[1], evaluate_point(p).value);
    p.pulses[1] = detection(0.0, 1.1, 3.0);
    EXPECT_EQ(g.values[5], evaluate_point(p).value);
}

TEST(Scan, DelayAxisMovesPulse) {
    Scenario s = first_order_dimer();
    s.scan = {{"time_1", {-1.0, 0.0, 1.0}}};
    const SignalGrid g = compute_signal(s);
    EXPECT_EQ(g.values[1], evaluate_point(first_order_dimer()).value);
    EXPECT_NE(g.values[0], g.values[1]);
}

TEST(Validation, RejectsBadScenarios) {
    Scenario s = first_order_dimer();
    s.order = 4;
    EXPECT_THROW(compute_signal(s), ModelError);
    s = first_order_dimer();
    s.molecules.resize(1);
    EXPECT_THROW(compute_signal(s), ModelError);
    s = first_order_dimer();
    s.pulses.push_back(detection(0.0, 1.0, 3.0));
    EXPECT_THROW(compute_signal(s), ModelError);
    s = first_order_dimer();
    s.scan = {{"omega_s", {1.0, 1.0}}};
    EXPECT_THROW(compute_signal(s), ModelError);
    s.scan = {{"bogus", {1.0}}};
    EXPECT_THROW(compute_signal(s), ModelError);
    s = first_order_dimer();
    s.molecules[1].id = "a";
    EXPECT_THROW(compute_signal(s), ModelError);
}

TEST(Determinism, RepeatableAndDigestSensitive) {
    Scenario s = first_order_dimer();
    s.scan = {{"omega_s", {0.9, 1.0, 1.1}}};
    const SignalGrid a = compute_signal(s), b = compute_signal(s);
    EXPECT_EQ(a.values, b.values);
    EXPECT_EQ(a.digest, b.digest);
    s.molecules[1].position.z() = 1.5;
    EXPECT_NE(compute_signal(s).digest, a.digest);
}
