// signals.hpp: heterodyne-detected signals with and without vacuum-mediated coupling
//
// Units hbar = 1. The additive baseline is 2 Im[(-1)^n sum_m int dt E_s^*(t)
// Tr[V_+ rho_m^(n)(t)]]. The vacuum-mediated corrections use the prefactors
// -4/(2 pi)^2 (first order, frequency domain), 4 pi in time with 1/pi and
// 1/(2 pi^2) in frequency (second and third order); docs/prefactors.md derives
// each constant.
//
// Time domain: molecule b's chain emits E~(t) = Tr[V_+ x_b(t)], which reaches
// molecule a as the field C E~(t - r/c). Frequency domain: every term is
// int du A(u)^T D(u) B(u) over the vacuum frequency u, where B collects b's
// fields with total frequency u and A collects a's fields and detection.

#pragma once

#include "vmisim/causal_chain.hpp"
#include "vmisim/diagrams.hpp"
#include "vmisim/fields.hpp"
#include "vmisim/geometry.hpp"
#include "vmisim/quadrature.hpp"
#include "vmisim/response.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace vmisim {

enum class Domain { time, frequency };

inline const char* to_string(Domain d) { return d == Domain::time ? "time" : "freq"; }

inline Domain domain_from_string(const std::string& s) {
    if (s == "time") return Domain::time;
    if (s == "freq" || s == "frequency") return Domain::frequency;
    throw ModelError("unknown domain '" + s + "' (expected time or freq)");
}

// Switches for diagnostic comparisons; all off in production runs.
struct Diagnostics {
    bool ignore_retardation = false;      // r/c forced to zero
    bool unit_phases = false;             // spatial phases forced to one
    bool rwa = false;                     // keep only the best-matched zeta branches
    std::optional<Mat3c> coupling_override;  // same coupling tensor for every pair

    bool operator==(const Diagnostics&) const = default;
};

// One scanned parameter: omega_s, omega_<i>, time_s, time_<i> or separation.
struct ScanAxis {
    std::string name;
    std::vector<double> values;

    bool operator==(const ScanAxis&) const = default;
};

struct Scenario {
    std::vector<MolecularModel> molecules;
    std::vector<Pulse> pulses;  // drives in label order 1..n, plus one detection pulse
    double c = 1.0;
    Domain domain = Domain::frequency;
    int order = 1;
    bool vmi = false;
    std::vector<ScanAxis> scan;
    double tolerance = 1e-6;
    Diagnostics diagnostics;

    std::vector<Pulse> drives() const {
        std::vector<Pulse> out;
        for (const auto& p : pulses)
            if (p.role == PulseRole::drive) out.push_back(p);
        return out;
    }

    const Pulse& detection() const {
        for (const auto& p : pulses)
            if (p.role == PulseRole::detection) return p;
        throw ModelError("scenario has no detection pulse");
    }

    // Throws ModelError naming the first violated invariant.
    void validate() const;
};

// Terms summed for one parameter point.
struct SignalPoint {
    double value = 0.0;
    std::vector<double> terms;
    std::size_t molecule_terms = 0;  // single-molecule contributions evaluated
    std::size_t pair_terms = 0;      // ordered pairs evaluated
};

struct SignalGrid {
    std::vector<ScanAxis> axes;
    std::vector<double> values;  // row-major over axes
    std::vector<std::string> term_names;
    std::vector<std::vector<double>> terms;  // one row per grid point
    std::string digest;

    std::size_t size() const { return values.size(); }
};

// --- scenario plumbing ------------------------------------------------------

inline bool is_known_axis(const std::string& name, std::size_t drives) {
    if (name == "omega_s" || name == "time_s" || name == "separation") return true;
    for (const char* prefix : {"omega_", "time_"}) {
        const std::string p(prefix);
        if (name.rfind(p, 0) == 0 && name.size() > p.size()) {
            const std::string rest = name.substr(p.size());
            if (rest.find_first_not_of("0123456789") != std::string::npos) return false;
            const auto i = std::stoul(rest);
            return i >= 1 && i <= drives;
        }
    }
    return false;
}

inline void Scenario::validate() const {
    if (order < 1 || order > 3) throw ModelError("signal order must be 1, 2 or 3");
    if (!(c > 0.0) || !std::isfinite(c)) throw ModelError("speed of light must be positive");
    if (!(tolerance > 0.0)) throw ModelError("tolerance must be positive");
    if (molecules.empty()) throw ModelError("at least one molecule is required");
    if (vmi && molecules.size() < 2) throw ModelError("vacuum-mediated signals need at least two molecules");
    std::vector<std::string> ids;
    for (const auto& m : molecules) {
        m.validate();
        ids.push_back(m.id);
    }
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) throw ModelError("molecule ids must be unique");
    std::size_t detections = 0, drive_count = 0;
    for (const auto& p : pulses) {
        p.validate(c);
        (p.role == PulseRole::detection ? detections : drive_count) += 1;
    }
    if (detections != 1) throw ModelError("exactly one detection pulse is required");
    if (drive_count != static_cast<std::size_t>(order))
        throw ModelError("order " + std::to_string(order) + " needs " + std::to_string(order) + " drive pulses, got " +
                         std::to_string(drive_count));
    if (vmi && order == 1 && domain == Domain::time)
        throw ModelError("first-order vacuum-mediated signal is evaluated in the frequency domain only");
    if (vmi)
        for (std::size_t i = 0; i < molecules.size(); ++i)
            for (std::size_t j = i + 1; j < molecules.size(); ++j)
                if ((molecules[i].position - molecules[j].position).norm() == 0.0)
                    throw ModelError("molecules '" + molecules[i].id + "' and '" + molecules[j].id +
                                     "' share a position");
    for (const auto& ax : scan) {
        if (!is_known_axis(ax.name, drive_count)) throw ModelError("unknown scan axis '" + ax.name + "'");
        if (ax.values.empty()) throw ModelError("scan axis '" + ax.name + "' is empty");
        for (std::size_t i = 1; i < ax.values.size(); ++i)
            if (!(ax.values[i] > ax.values[i - 1]))
                throw ModelError("scan axis '" + ax.name + "' must be strictly increasing");
        if (ax.name == "separation" && molecules.size() != 2)
            throw ModelError("separation scans need exactly two molecules");
    }
}

// Sets one scanned parameter; frequencies keep the wavevector direction.
inline void apply_axis(Scenario& s, const std::string& name, double v) {
    const auto set_frequency = [&](Pulse& p) {
        const Vec3 dir = p.k.normalized();
        p.center_frequency = v;
        p.k = dir * (v / s.c);
    };
    const auto drive = [&](const std::string& rest) -> Pulse& {
        const std::size_t want = std::stoul(rest);
        std::size_t seen = 0;
        for (auto& p : s.pulses)
            if (p.role == PulseRole::drive && ++seen == want) return p;
        throw ModelError("scan axis refers to missing drive pulse " + rest);
    };
    const auto detection = [&]() -> Pulse& {
        for (auto& p : s.pulses)
            if (p.role == PulseRole::detection) return p;
        throw ModelError("scenario has no detection pulse");
    };
    if (name == "omega_s") set_frequency(detection());
    else if (name == "time_s") detection().center_time = v;
    else if (name.rfind("omega_", 0) == 0) set_frequency(drive(name.substr(6)));
    else if (name.rfind("time_", 0) == 0) drive(name.substr(5)).center_time = v;
    else if (name == "separation") {
        const Vec3 r0 = s.molecules[0].position;
        const Vec3 dir = (s.molecules[1].position - r0).normalized();
        s.molecules[1].position = r0 + v * dir;
    } else {
        throw ModelError("unknown scan axis '" + name + "'");
    }
}

// Canonical text of everything that affects the numbers, for digests.
inline std::string canonical_text(const Scenario& s) {
    std::string out;
    char buf[64];
    const auto num = [&](double x) {
        std::snprintf(buf, sizeof buf, "%.17g,", x);
        out += buf;
    };
    const auto cnum = [&](cplx z) {
        num(z.real());
        num(z.imag());
    };
    for (const auto& m : s.molecules) {
        out += "m:" + m.id + ";";
        for (double e : m.energies) num(e);
        for (int i = 0; i < m.dephasing.size(); ++i) num(m.dephasing.data()[i]);
        for (const auto& d : m.dipole)
            for (int i = 0; i < d.size(); ++i) cnum(d.data()[i]);
        for (int i = 0; i < 3; ++i) num(m.position(i));
    }
    for (const auto& p : s.pulses) {
        out += std::string("p:") + to_string(p.role) + ";";
        num(p.center_time);
        num(p.center_frequency);
        num(p.width);
        cnum(p.amplitude);
        for (int i = 0; i < 3; ++i) num(p.k(i));
        for (int i = 0; i < 3; ++i) num(p.polarization(i));
    }
    out += "r:";
    num(s.c);
    out += to_string(s.domain);
    out += ";" + std::to_string(s.order) + (s.vmi ? "v" : "b") + ";";
    num(s.tolerance);
    for (const auto& ax : s.scan) {
        out += "s:" + ax.name + ";";
        for (double v : ax.values) num(v);
    }
    const auto& d = s.diagnostics;
    out += std::string("d:") + (d.ignore_retardation ? "1" : "0") + (d.unit_phases ? "1" : "0") + (d.rwa ? "1" : "0");
    if (d.coupling_override)
        for (int i = 0; i < 9; ++i) cnum(d.coupling_override->data()[i]);
    return out;
}

// 64-bit FNV-1a, as 16 hex digits.
inline std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string scenario_digest(const Scenario& s) { return fnv1a_hex(canonical_text(s)); }

// --- evaluation engine ------------------------------------------------------

namespace detail {

constexpr double kSupport = 8.0;         // envelope support in widths (time) or inverse widths (frequency)
constexpr double kPruneExponent = 46.0;  // branches whose best overlap is below e^-46 are skipped

using ZetaBranch = std::vector<int>;  // per drive: +1, -1, or 0 for both components

struct Window {
    double lo, hi;
    bool empty() const { return !(hi > lo); }
};

inline Window intersect(Window a, Window b) { return {std::max(a.lo, b.lo), std::min(a.hi, b.hi)}; }

class PointEvaluator {
public:
    explicit PointEvaluator(const Scenario& s) : s_(s), drives_(s.drives()), det_(s.detection()) {
        s.validate();
        spaces_.reserve(s.molecules.size());
        for (const auto& m : s.molecules) spaces_.emplace_back(m);
        sorted_.resize(s.molecules.size());
        std::iota(sorted_.begin(), sorted_.end(), 0);
        std::sort(sorted_.begin(), sorted_.end(),
                  [&](std::size_t l, std::size_t r) { return s.molecules[l].id < s.molecules[r].id; });
    }

    int order() const { return static_cast<int>(drives_.size()); }

    // Ordered pairs (a, b), a != b, sorted by tag.
    std::vector<std::pair<std::size_t, std::size_t>> ordered_pairs() const {
        std::vector<std::pair<std::size_t, std::size_t>> out;
        for (auto a : sorted_)
            for (auto b : sorted_)
                if (a != b) out.emplace_back(a, b);
        return out;
    }

    // zeta branches in lexicographic order, -1 before +1, pulse 1 most significant.
    std::vector<ZetaBranch> frequency_branches() const {
        const int n = order();
        std::vector<ZetaBranch> all;
        for (int code = 0; code < (1 << n); ++code) {
            ZetaBranch z(n);
            for (int i = 0; i < n; ++i) z[i] = (code >> (n - 1 - i)) & 1 ? 1 : -1;
            all.push_back(z);
        }
        if (!s_.diagnostics.rwa) return all;
        double best = std::numeric_limits<double>::infinity();
        for (const auto& z : all) best = std::min(best, mismatch(z));
        std::vector<ZetaBranch> kept;
        for (const auto& z : all)
            if (mismatch(z) <= best + 1e-12) kept.push_back(z);
        return kept;
    }

    // Time-domain fields are real unless the rotating-wave diagnostic is on.
    std::vector<ZetaBranch> time_branches() const {
        if (!s_.diagnostics.rwa) return {ZetaBranch(order(), 0)};
        return frequency_branches();
    }

    // --- shared pieces

    cplx phase(const Pulse& p, int zeta, const Vec3& r) const {
        return s_.diagnostics.unit_phases ? cplx(1.0) : spatial_phase(p, zeta, r);
    }

    const Vec3& position(std::size_t m) const { return s_.molecules[m].position; }

    double delay(std::size_t a, std::size_t b) const {
        return s_.diagnostics.ignore_retardation ? 0.0 : (position(a) - position(b)).norm() / s_.c;
    }

    Mat3c coupling_static(std::size_t a, std::size_t b) const {
        if (s_.diagnostics.coupling_override) return *s_.diagnostics.coupling_override;
        return tensor_C(position(a) - position(b)).matrix;
    }

    Mat3c coupling_dynamic(std::size_t a, std::size_t b, double u) const {
        if (s_.diagnostics.coupling_override) return *s_.diagnostics.coupling_override;
        return tensor_D(position(a) - position(b), u / s_.c).matrix;
    }

    double mismatch(const ZetaBranch& z) const {
        double sum = 0.0;
        for (int i = 0; i < order(); ++i) sum += z[i] * drives_[i].center_frequency;
        return std::abs(sum - det_.center_frequency);
    }

    // Largest attainable product of all envelope magnitudes is below e^-46.
    bool negligible(const ZetaBranch& z) const {
        double var = 1.0 / (det_.width * det_.width);
        for (const auto& p : drives_) var += 1.0 / (p.width * p.width);
        const double d = mismatch(z);
        return d * d / (2.0 * var) > kPruneExponent;
    }

    // --- time domain

    std::shared_ptr<const TimeGrid> time_grid() const {
        double lo = det_.center_time - kSupport * det_.width;
        const double hi = det_.center_time + kSupport * det_.width;
        double sigma_min = det_.width, omega = det_.center_frequency;
        for (const auto& p : drives_) {
            lo = std::min(lo, p.center_time - kSupport * p.width);
            sigma_min = std::min(sigma_min, p.width);
            omega += p.center_frequency;
        }
        double spread = 0.0;
        for (const auto& sp : spaces_)
            for (int p = 0; p < sp.dim(); ++p) spread = std::max(spread, std::abs(sp.eigenvalues()(p).real()));
        omega += 2.0 * spread + kSupport / sigma_min;
        return std::make_shared<TimeGrid>(lo, std::max(hi, lo + sigma_min), std::min(8.0 / omega, sigma_min));
    }

    // Drive i (0-based) at position r; zeta 0 keeps both components.
    FieldFn drive_field(int i, const Vec3& r, int zeta) const {
        const Pulse p = drives_[i];
        const cplx plus = zeta != -1 ? phase(p, 1, r) : cplx(0.0);
        const cplx minus = zeta != 1 ? phase(p, -1, r) : cplx(0.0);
        const CVec3 pol = p.polarization.cast<cplx>();
        return [p, plus, minus, pol](double t) -> CVec3 {
            cplx e = 0.0;
            if (plus != 0.0) e += envelope_time(p, 1, t) * plus;
            if (minus != 0.0) e += envelope_time(p, -1, t) * minus;
            return pol * e;
        };
    }

    // int dt E_s^-(t) e^{-i k_s.r_a} Tr[V_+(eps_s) x(t)]
    template <class State>
    cplx detect(const TimeGrid& g, std::size_t a, const State& x) const {
        const Eigen::RowVectorXcd row = spaces_[a].trace_plus_row(det_.polarization.cast<cplx>());
        const double lo = det_.center_time - kSupport * det_.width, hi = det_.center_time + kSupport * det_.width;
        const cplx sum = integrate_on_grid(g, [&](double t) -> cplx {
            if (t < lo || t > hi) return 0.0;
            return envelope_time(det_, -1, t) * (row * x(t))(0);
        });
        return phase(det_, -1, position(a)) * sum;
    }

    cplx baseline_time(std::size_t m, const ZetaBranch& z, const std::shared_ptr<const TimeGrid>& g) const {
        std::vector<FieldFn> legs;
        for (int i = 0; i < order(); ++i) legs.push_back(drive_field(i, position(m), z[i]));
        const OrderedChain x(spaces_[m], g, legs);
        return detect(*g, m, x);
    }

    // a takes a_fields plus the retarded emission of b, which took b_fields.
    cplx vmi_time_term(std::size_t a, std::size_t b, const std::vector<int>& a_fields, const std::vector<int>& b_fields,
                       const ZetaBranch& z, const std::shared_ptr<const TimeGrid>& g) const {
        std::vector<FieldFn> bl;
        for (int p : b_fields) bl.push_back(drive_field(p, position(b), z[p]));
        auto xb = std::make_shared<const OrderedChain>(spaces_[b], g, bl);
        std::vector<FieldFn> al;
        for (int j : a_fields) al.push_back(drive_field(j, position(a), z[j]));
        al.push_back(vacuum_field(a, b, [xb](double t) { return (*xb)(t); }));
        const OrderedChain xa(spaces_[a], g, al);
        return detect(*g, a, xa);
    }

    // C_ab Tr[V_+ x_b(t - r/c)]
    FieldFn vacuum_field(std::size_t a, std::size_t b, StateFn xb) const {
        const Mat3c cmat = coupling_static(a, b);
        const double d = delay(a, b);
        const SuperOpSpace* sb = &spaces_[b];
        return [cmat, d, sb, xb = std::move(xb)](double t) -> CVec3 { return cmat * sb->emission(xb(t - d)); };
    }

    // One second-order diagram with its own interaction order and delay windows.
    cplx diagram_time(const DiagramTerm& term, std::size_t a, std::size_t b, const ZetaBranch& z,
                      const std::shared_ptr<const TimeGrid>& g) const {
        const auto pos = [&](EventKind kind, char mol) {
            for (std::size_t i = 0; i < term.events.size(); ++i)
                if (term.events[i].kind == kind && term.events[i].molecule == mol) return static_cast<int>(i);
            throw ModelError("diagram lacks an expected event");
        };
        const auto& sa = spaces_[a];
        const double d = delay(a, b);
        if (term.fields_on('b') == 2) {
            // both fields on b in the diagram's order; a only absorbs
            std::vector<ChainStep> steps;
            for (int f : term.permutation) steps.push_back({drive_field(f - 1, position(b), z[f - 1])});
            auto xb = std::make_shared<const FixedChain>(spaces_[b], g, steps);
            const OrderedChain xa(sa, g, {vacuum_field(a, b, [xb](double t) { return (*xb)(t); })});
            return detect(*g, a, xa);
        }
        int p = 0, q = 0;  // field on b, field on a (1-based)
        for (int f = 1; f <= 2; ++f) (term.assignment[f - 1] == 'b' ? p : q) = f;
        const int iq = [&] {
            for (std::size_t i = 0; i < term.events.size(); ++i)
                if (term.events[i].kind == EventKind::field && term.events[i].field == q) return static_cast<int>(i);
            return -1;
        }();
        const int ip = [&] {
            for (std::size_t i = 0; i < term.events.size(); ++i)
                if (term.events[i].kind == EventKind::field && term.events[i].field == p) return static_cast<int>(i);
            return -1;
        }();
        const int ivb = pos(EventKind::vacuum, 'b'), iva = pos(EventKind::vacuum, 'a');
        const FieldFn fq = drive_field(q - 1, position(a), z[q - 1]);
        auto xb = std::make_shared<const OrderedChain>(spaces_[b], g, std::vector<FieldFn>{drive_field(p - 1, position(b), z[p - 1])});
        const FieldFn vac = vacuum_field(a, b, [xb](double t) { return (*xb)(t); });
        const double inf = std::numeric_limits<double>::infinity();
        if (iq > iva) {
            const FixedChain xa(sa, g, {ChainStep{vac}, ChainStep{fq}});
            return detect(*g, a, xa);
        }
        if (iq > ivb) {
            const FixedChain xa(sa, g, {ChainStep{fq}, ChainStep{vac, 0.0, d}});
            return detect(*g, a, xa);
        }
        // a's field precedes b's emission: split by which external field came first
        const cplx restricted = restricted_emission_term(a, b, fq, xb, g);
        if (ip < iq) return restricted;
        const FixedChain full(sa, g, {ChainStep{fq}, ChainStep{vac, d, inf}});
        return detect(*g, a, full) - restricted;
    }

    // a absorbs f_q at tau_q, then b's emission at tau_v > tau_q + r/c, counting
    // only b's interactions before tau_q. The emission is split over b's Liouville
    // components k: sum_k T_k e^{-i lambda_k (tau_v - r/c - tau_q)} x_b,k(tau_q),
    // which factorizes into one field per leg.
    cplx restricted_emission_term(std::size_t a, std::size_t b, const FieldFn& fq,
                                  const std::shared_ptr<const OrderedChain>& xb,
                                  const std::shared_ptr<const TimeGrid>& g) const {
        const auto& sb = spaces_[b];
        const Mat3c cmat = coupling_static(a, b);
        const double d = delay(a, b);
        const double tref = 0.5 * (g->start() + g->end());
        cplx sum = 0.0;
        for (int k = 0; k < sb.dim(); ++k) {
            Eigen::VectorXcd ek = Eigen::VectorXcd::Zero(sb.dim());
            ek(k) = 1.0;
            const CVec3 tk = cmat * sb.emission(ek);
            if (tk.isZero(0.0)) continue;
            const cplx lam = sb.eigenvalues()(k);
            const FieldFn first = [fq, xb, k, lam, tref](double t) -> CVec3 {
                return fq(t) * (std::exp(I * lam * (t - tref)) * (*xb)(t)(k));
            };
            const FieldFn second = [tk, lam, d, tref](double t) -> CVec3 { return tk * std::exp(-I * lam * (t - d - tref)); };
            const FixedChain xa(spaces_[a], g,
                                {ChainStep{first}, ChainStep{second, d, std::numeric_limits<double>::infinity()}});
            sum += detect(*g, a, xa);
        }
        return sum;
    }

    // --- frequency domain

    cplx envelope(int i, int zeta, double w) const { return envelope_freq(drives_[i], zeta, w); }
    cplx detection_conj(double w) const { return std::conj(envelope_freq(det_, 1, w)); }

    Window drive_window(int i, int zeta) const {
        const double c = zeta * drives_[i].center_frequency, h = kSupport / drives_[i].width;
        return {c - h, c + h};
    }
    Window detection_window() const {
        const double h = kSupport / det_.width;
        return {det_.center_frequency - h, det_.center_frequency + h};
    }

    template <class T, class F>
    T integrate(F&& f, Window w, double tol, const std::string& term) const {
        if (w.empty()) {
            if constexpr (std::is_same_v<T, cplx>) return cplx(0.0);
            else return T::Zero();
        }
        const auto r = integrate_adaptive<T>(std::forward<F>(f), w.lo, w.hi, tol);
        if (!r.converged) throw NumericalError("frequency quadrature did not converge", term);
        return r.value;
    }

    cplx baseline_freq(std::size_t m, const ZetaBranch& z) const {
        const int n = order();
        if (n == 3) {
            // a population pole on the real axis makes the triple integral ill defined
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j) {
                    const Window w{drive_window(i, z[i]).lo + drive_window(j, z[j]).lo,
                                   drive_window(i, z[i]).hi + drive_window(j, z[j]).hi};
                    if (w.lo < 0.0 && w.hi > 0.0)
                        throw NumericalError("population resonance lies on the real frequency axis; use the time domain",
                                             "baseline");
                }
        }
        const auto& sp = spaces_[m];
        cplx ph = phase(det_, -1, position(m));
        for (int i = 0; i < n; ++i) ph *= phase(drives_[i], z[i], position(m));
        std::vector<double> w(n);
        const CVec3 det_pol = det_.polarization.cast<cplx>();
        std::function<cplx(int)> level = [&](int k) -> cplx {
            Window win = drive_window(k, z[k]);
            if (k == n - 1) {
                double prev = 0.0;
                for (int i = 0; i < k; ++i) prev += w[i];
                const Window dw = detection_window();
                win = intersect(win, {dw.lo - prev, dw.hi - prev});
            }
            const auto f = [&, k](double x) -> cplx {
                w[k] = x;
                const cplx e = envelope(k, z[k], x);
                if (k + 1 < n) return e * level(k + 1);
                std::vector<ChainLeg> legs;
                double total = 0.0;
                for (int i = 0; i < n; ++i) {
                    legs.push_back({drives_[i].polarization.cast<cplx>(), w[i]});
                    total += w[i];
                }
                return e * detection_conj(total) * ordered_chain_freq(sp, det_pol, legs);
            };
            return integrate<cplx>(f, win, k == 0 ? s_.tolerance : 0.1 * s_.tolerance, "baseline");
        };
        return ph * level(0);
    }

    // phase * int du A(u)^T D(u) B(u), with a taking a_fields plus detection and
    // b taking b_fields (one or two). Fields are 0-based drive indices.
    cplx vmi_freq_term(std::size_t a, std::size_t b, const std::vector<int>& a_fields, const std::vector<int>& b_fields,
                       const ZetaBranch& z, const std::string& term) const {
        const auto& sa = spaces_[a];
        const auto& sb = spaces_[b];
        cplx ph = phase(det_, -1, position(a));
        for (int j : a_fields) ph *= phase(drives_[j], z[j], position(a));
        for (int p : b_fields) ph *= phase(drives_[p], z[p], position(b));
        const CVec3 det_pol = det_.polarization.cast<cplx>();
        const double inner_tol = 0.1 * s_.tolerance;

        Window ub{0.0, 0.0};
        for (int p : b_fields) {
            const auto w = drive_window(p, z[p]);
            ub.lo += w.lo;
            ub.hi += w.hi;
        }
        Window ua = detection_window();
        for (int j : a_fields) {
            const auto w = drive_window(j, z[j]);
            ua.lo -= w.hi;
            ua.hi -= w.lo;
        }
        const Window uw = intersect(ua, ub);

        // Chain prefixes shared by the inner integrals are computed once.
        const auto a_part = [&](double u) -> CVec3 {
            std::array<Eigen::VectorXcd, 3> vac;  // G(u) V_-^nu rho_g
            for (int nu = 0; nu < 3; ++nu) vac[nu] = sa.apply_resolvent(u, sa.apply_minus(unit_axis(nu), sa.ground()));
            if (a_fields.empty()) {
                CVec3 out;
                for (int nu = 0; nu < 3; ++nu) out(nu) = sa.trace_plus(det_pol, vac[nu]);
                return detection_conj(u) * out;
            }
            const int j = a_fields[0];
            const Window dw = detection_window();
            const Window w = intersect(drive_window(j, z[j]), {dw.lo - u, dw.hi - u});
            const CVec3 pol = drives_[j].polarization.cast<cplx>();
            const Eigen::VectorXcd vj = sa.apply_minus(pol, sa.ground());
            std::array<Eigen::VectorXcd, 3> late;  // V_-(eps_j) G(u) V_-^nu rho_g
            for (int nu = 0; nu < 3; ++nu) late[nu] = sa.apply_minus(pol, vac[nu]);
            return integrate<CVec3>(
                [&](double wj) -> CVec3 {
                    const Eigen::VectorXcd early = sa.apply_resolvent(wj, vj);
                    CVec3 v;
                    for (int nu = 0; nu < 3; ++nu)
                        v(nu) = sa.trace_plus_resolvent(det_pol, u + wj, late[nu] + sa.apply_minus(unit_axis(nu), early));
                    return detection_conj(u + wj) * envelope(j, z[j], wj) * v;
                },
                w, inner_tol, term);
        };
        const int p0 = b_fields[0];
        const CVec3 pp = drives_[p0].polarization.cast<cplx>();
        const Eigen::VectorXcd vp = sb.apply_minus(pp, sb.ground());
        const auto b_part = [&](double u) -> CVec3 {
            if (b_fields.size() == 1) return envelope(p0, z[p0], u) * sb.emission_resolvent(u, vp);
            const int q = b_fields[1];
            const CVec3 qp = drives_[q].polarization.cast<cplx>();
            const Eigen::VectorXcd vq = sb.apply_minus(qp, sb.ground());
            const Window wq = drive_window(q, z[q]);
            const Window w = intersect(drive_window(p0, z[p0]), {u - wq.hi, u - wq.lo});
            return integrate<CVec3>(
                [&](double wp) -> CVec3 {
                    const Eigen::VectorXcd s = sb.apply_minus(qp, sb.apply_resolvent(wp, vp)) +
                                               sb.apply_minus(pp, sb.apply_resolvent(u - wp, vq));
                    return envelope(p0, z[p0], wp) * envelope(q, z[q], u - wp) * sb.emission_resolvent(u, s);
                },
                w, inner_tol, term);
        };
        const auto f = [&](double u) -> cplx {
            const CVec3 bv = b_part(u);
            if (bv.isZero(0.0)) return 0.0;
            return (a_part(u).transpose() * coupling_dynamic(a, b, u) * bv)(0);
        };
        return ph * integrate<cplx>(f, uw, s_.tolerance, term);
    }

    const std::vector<std::size_t>& sorted() const { return sorted_; }
    const SuperOpSpace& space(std::size_t m) const { return spaces_[m]; }
    const Scenario& scenario() const { return s_; }

private:
    const Scenario& s_;
    std::vector<Pulse> drives_;
    Pulse det_;
    std::vector<SuperOpSpace> spaces_;
    std::vector<std::size_t> sorted_;
};

// Field assignment of the three vacuum-mediated terms at orders 2 and 3
// (0-based drives; a's fields first, then b's).
inline std::vector<std::pair<std::vector<int>, std::vector<int>>> vmi_terms(int order) {
    switch (order) {
    case 1: return {{{}, {0}}};
    case 2: return {{{1}, {0}}, {{0}, {1}}, {{}, {0, 1}}};
    case 3: return {{{2}, {0, 1}}, {{1}, {0, 2}}, {{0}, {1, 2}}};
    }
    throw ModelError("signal order must be 1, 2 or 3");
}

inline double vmi_prefactor(int order, Domain d) {
    if (order == 1) return -4.0 / ((2.0 * kPi) * (2.0 * kPi));
    if (d == Domain::time) return 4.0 * kPi;
    return order == 2 ? 1.0 / kPi : 1.0 / (2.0 * kPi * kPi);
}

} // namespace detail

inline std::vector<std::string> term_names(const Scenario& s) {
    if (!s.vmi) return {"baseline"};
    if (s.order == 1) return {"term1"};
    return {"term1", "term2", "term3"};
}

// Signal at the scenario's own parameters (scan ignored).
inline SignalPoint evaluate_point(const Scenario& s) {
    const detail::PointEvaluator ev(s);
    SignalPoint out;
    const int n = s.order;
    if (!s.vmi) {
        cplx sum = 0.0;
        if (s.domain == Domain::time) {
            const auto g = ev.time_grid();
            for (auto m : ev.sorted()) {
                cplx part = 0.0;
                for (const auto& z : ev.time_branches()) part += ev.baseline_time(m, z, g);
                sum += part;
                ++out.molecule_terms;
            }
            out.value = 2.0 * ((n % 2) ? -sum : sum).imag();
        } else {
            for (auto m : ev.sorted()) {
                cplx part = 0.0;
                for (const auto& z : ev.frequency_branches())
                    if (!ev.negligible(z)) part += ev.baseline_freq(m, z);
                sum += part;
                ++out.molecule_terms;
            }
            out.value = 2.0 * ((n % 2) ? -sum : sum).imag() / std::pow(2.0 * kPi, n);
        }
        out.terms = {out.value};
        return out;
    }
    const auto terms = detail::vmi_terms(n);
    std::vector<cplx> acc(terms.size(), 0.0);
    const auto pairs = ev.ordered_pairs();
    if (s.domain == Domain::time) {
        const auto g = ev.time_grid();
        for (const auto& [a, b] : pairs)
            for (std::size_t t = 0; t < terms.size(); ++t)
                for (const auto& z : ev.time_branches())
                    acc[t] += ev.vmi_time_term(a, b, terms[t].first, terms[t].second, z, g);
    } else {
        for (const auto& [a, b] : pairs)
            for (std::size_t t = 0; t < terms.size(); ++t)
                for (const auto& z : ev.frequency_branches())
                    if (!ev.negligible(z))
                        acc[t] += ev.vmi_freq_term(a, b, terms[t].first, terms[t].second, z, "term" + std::to_string(t + 1));
    }
    out.pair_terms = pairs.size();
    const double pref = detail::vmi_prefactor(n, s.domain);
    for (const auto& v : acc) {
        out.terms.push_back((pref * v).imag());
        out.value += out.terms.back();
    }
    return out;
}

// Evaluates every point of the scan grid (row-major; a scenario without scan
// axes gives a single point).
inline SignalGrid compute_signal(const Scenario& s) {
    s.validate();
    SignalGrid grid;
    grid.axes = s.scan;
    grid.term_names = term_names(s);
    grid.digest = scenario_digest(s);
    std::size_t total = 1;
    for (const auto& ax : s.scan) total *= ax.values.size();
    for (std::size_t flat = 0; flat < total; ++flat) {
        Scenario point = s;
        std::size_t rest = flat;
        for (std::size_t k = s.scan.size(); k-- > 0;) {
            const auto& ax = s.scan[k];
            apply_axis(point, ax.name, ax.values[rest % ax.values.size()]);
            rest /= ax.values.size();
        }
        const SignalPoint p = evaluate_point(point);
        if (!std::isfinite(p.value)) throw NumericalError("signal value is not finite");
        grid.values.push_back(p.value);
        grid.terms.push_back(p.terms);
    }
    return grid;
}

inline SignalGrid baseline_signal(const Scenario& s) {
    if (s.vmi) throw ModelError("baseline signal requires the vmi flag off");
    return compute_signal(s);
}

inline SignalGrid s1_vmi(const Scenario& s) {
    if (!s.vmi || s.order != 1) throw ModelError("s1_vmi needs a first-order vmi scenario");
    Scenario f = s;
    f.domain = Domain::frequency;
    return compute_signal(f);
}

inline SignalGrid s2_vmi_time(const Scenario& s) {
    if (!s.vmi || s.order != 2) throw ModelError("s2_vmi_time needs a second-order vmi scenario");
    Scenario t = s;
    t.domain = Domain::time;
    return compute_signal(t);
}

inline SignalGrid s2_vmi_freq(const Scenario& s) {
    if (!s.vmi || s.order != 2) throw ModelError("s2_vmi_freq needs a second-order vmi scenario");
    Scenario f = s;
    f.domain = Domain::frequency;
    return compute_signal(f);
}

inline SignalGrid s3_cascade(const Scenario& s, Domain domain) {
    if (!s.vmi || s.order != 3) throw ModelError("s3_cascade needs a third-order vmi scenario");
    Scenario c = s;
    c.domain = domain;
    return compute_signal(c);
}

// Contribution of each individually integrated second-order diagram (time
// domain), summed over ordered pairs, with the same prefactor as the compact
// form. The ten values add up to s2_vmi_time.
inline std::vector<std::pair<DiagramTerm, double>> s2_diagrams_time(const Scenario& s) {
    if (!s.vmi || s.order != 2) throw ModelError("diagram evaluation needs a second-order vmi scenario");
    const detail::PointEvaluator ev(s);
    const auto g = ev.time_grid();
    std::vector<std::pair<DiagramTerm, double>> out;
    for (const auto& term : enumerate_2vmi(2, true)) {
        cplx sum = 0.0;
        for (const auto& [a, b] : ev.ordered_pairs())
            for (const auto& z : ev.time_branches()) sum += ev.diagram_time(term, a, b, z, g);
        out.emplace_back(term, (detail::vmi_prefactor(2, Domain::time) * sum).imag());
    }
    return out;
}

// Field radiated by molecule b after interacting with the given drives
// (1-based labels, one or two), as seen at molecule a: Tr[V_+ x_b(t - r_ab/c)].
class EffectiveField {
public:
    EffectiveField(const Scenario& s, std::size_t b, std::size_t a, std::vector<int> drive_labels) {
        const auto drives = s.drives();
        if (b >= s.molecules.size() || a >= s.molecules.size() || a == b)
            throw ModelError("effective field needs two distinct molecules");
        if (drive_labels.empty() || drive_labels.size() > 2)
            throw ModelError("effective field takes one or two drive pulses");
        double lo = std::numeric_limits<double>::infinity(), hi = -lo, sigma = lo, omega = 0.0;
        for (int l : drive_labels) {
            if (l < 1 || l > static_cast<int>(drives.size())) throw ModelError("drive label out of range");
            const auto& p = drives[l - 1];
            lo = std::min(lo, p.center_time - detail::kSupport * p.width);
            hi = std::max(hi, p.center_time + detail::kSupport * p.width);
            sigma = std::min(sigma, p.width);
            omega += p.center_frequency;
        }
        space_ = std::make_unique<SuperOpSpace>(s.molecules[b]);
        double spread = 0.0;
        for (int p = 0; p < space_->dim(); ++p) spread = std::max(spread, std::abs(space_->eigenvalues()(p).real()));
        omega += 2.0 * spread + detail::kSupport / sigma;
        auto grid = std::make_shared<TimeGrid>(lo, hi, std::min(8.0 / omega, sigma));
        const Vec3 rb = s.molecules[b].position;
        delay_ = s.diagnostics.ignore_retardation ? 0.0 : (s.molecules[a].position - rb).norm() / s.c;
        std::vector<FieldFn> legs;
        for (int l : drive_labels) {
            const Pulse p = drives[l - 1];
            const cplx plus = s.diagnostics.unit_phases ? cplx(1.0) : spatial_phase(p, 1, rb);
            const CVec3 pol = p.polarization.cast<cplx>();
            legs.push_back([p, plus, pol](double t) -> CVec3 {
                const cplx e = envelope_time(p, 1, t) * plus;
                return pol * (e + std::conj(e));
            });
        }
        chain_ = std::make_unique<OrderedChain>(*space_, grid, legs);
    }

    CVec3 operator()(double t) const { return space_->emission((*chain_)(t - delay_)); }
    double delay() const { return delay_; }

private:
    std::unique_ptr<SuperOpSpace> space_;
    std::unique_ptr<OrderedChain> chain_;
    double delay_ = 0.0;
};

inline CVec3 effective_field(const Scenario& s, std::size_t b, std::size_t a, std::vector<int> drive_labels, double t) {
    return EffectiveField(s, b, a, std::move(drive_labels))(t);
}

// N-scaling of a scenario family: the first molecule is replicated on a line
// lattice with the given spacing.
struct ScalingReport {
    std::vector<int> n;
    std::vector<std::size_t> baseline_terms;
    std::vector<std::size_t> pair_terms;
    std::vector<double> magnitude;
    double exponent = 0.0;  // least-squares slope of log |S| against log N
};

inline Scenario replicate_on_line(const Scenario& family, int n, double spacing) {
    if (family.molecules.empty()) throw ModelError("scaling family needs a template molecule");
    Scenario s = family;
    s.scan.clear();
    s.molecules.clear();
    const auto pos = lattice_positions(spacing, n, LatticeShape::line);
    for (int i = 0; i < n; ++i) {
        MolecularModel m = family.molecules.front();
        char tag[32];
        std::snprintf(tag, sizeof tag, "%s%03d", family.molecules.front().id.c_str(), i);
        m.id = tag;
        m.position = family.molecules.front().position + pos[i];
        s.molecules.push_back(std::move(m));
    }
    return s;
}

inline ScalingReport scaling_probe(const Scenario& family, const std::vector<int>& n_list, double spacing) {
    ScalingReport r;
    for (int n : n_list) {
        const Scenario s = replicate_on_line(family, n, spacing);
        const detail::PointEvaluator ev(s);
        r.n.push_back(n);
        r.baseline_terms.push_back(ev.sorted().size());
        r.pair_terms.push_back(ev.ordered_pairs().size());
        r.magnitude.push_back(std::abs(evaluate_point(s).value));
    }
    if (r.n.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double k = static_cast<double>(r.n.size());
        for (std::size_t i = 0; i < r.n.size(); ++i) {
            const double x = std::log(r.n[i]), y = std::log(r.magnitude[i]);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        r.exponent = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    }
    return r;
}

} // namespace vmisim
