// response.hpp: polarizability and hyperpolarizabilities by Liouville-space algebra
//
// Every response function is a chain <V_+ G V_- ... G V_- rho_g>, read right to
// left: the earliest interaction acts first on the ground state. Frequency-domain
// chains evaluate G at the running sum of interaction frequencies.

#pragma once

#include "vmisim/core_model.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace vmisim {

// One V_- interaction in a chain: polarization to project the dipole on, and the
// frequency (or, in time chains, the free-evolution interval that follows it).
struct ChainLeg {
    CVec3 pol;
    cplx arg;
};

inline CVec3 unit_axis(int nu) {
    CVec3 e = CVec3::Zero();
    e(nu) = 1.0;
    return e;
}

// <V_+(det) G(w_1+...+w_n) V_-(pol_n) ... G(w_1) V_-(pol_1) rho_g>, legs chronological.
inline cplx chain_freq(const SuperOpSpace& space, const CVec3& det, std::span<const ChainLeg> legs) {
    if (legs.empty()) return space.trace_plus(det, space.ground());
    Eigen::VectorXcd x = space.ground();
    cplx w = 0.0;
    for (std::size_t k = 0; k + 1 < legs.size(); ++k) {
        w += legs[k].arg;
        x = space.apply_resolvent(w, space.apply_minus(legs[k].pol, x));
    }
    w += legs.back().arg;
    return space.trace_plus_resolvent(det, w, space.apply_minus(legs.back().pol, x));
}

// <V_+(det) G(t_n) V_-(pol_n) ... G(t_1) V_-(pol_1) rho_g>, where t_k is the
// interval after leg k. Any negative interval gives zero.
inline cplx chain_time(const SuperOpSpace& space, const CVec3& det, std::span<const ChainLeg> legs) {
    Eigen::VectorXcd x = space.ground();
    for (const auto& leg : legs) {
        const double t = leg.arg.real();
        if (t < 0.0) return 0.0;
        x = apply_propagator(space, t, space.apply_minus(leg.pol, x));
    }
    return space.trace_plus(det, x);
}

// Sum of chain_freq over every chronological ordering of the legs.
inline cplx ordered_chain_freq(const SuperOpSpace& space, const CVec3& det, std::vector<ChainLeg> legs) {
    std::vector<int> perm(legs.size());
    std::iota(perm.begin(), perm.end(), 0);
    cplx sum = 0.0;
    std::vector<ChainLeg> ordered(legs.size());
    do {
        for (std::size_t k = 0; k < perm.size(); ++k) ordered[k] = legs[perm[k]];
        sum += chain_freq(space, det, ordered);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return sum;
}

// --- polarizability ---------------------------------------------------------

inline cplx alpha_freq(const SuperOpSpace& space, cplx omega, int ni, int nj) {
    const ChainLeg legs[] = {{unit_axis(nj), omega}};
    return chain_freq(space, unit_axis(ni), legs);
}

// alpha(t_i, t_j) = alpha_bar(t_i - t_j); the ordering with V_- last vanishes.
inline cplx alpha_time(const SuperOpSpace& space, double ti, double tj, int ni, int nj) {
    const ChainLeg legs[] = {{unit_axis(nj), ti - tj}};
    return chain_time(space, unit_axis(ni), legs);
}

// --- second order -----------------------------------------------------------

// <V_+^i G(t) V_-^j G(t') V_-^k>
inline cplx beta_bar_time(const SuperOpSpace& space, double t, double t_prime, int ni, int nj, int nk) {
    const ChainLeg legs[] = {{unit_axis(nk), t_prime}, {unit_axis(nj), t}};
    return chain_time(space, unit_axis(ni), legs);
}

// Time-ordered beta: both orderings of the two V_- legs, V_+ always last.
inline cplx beta_ordered(const SuperOpSpace& space, double ti, double tj, double tk, int ni, int nj, int nk) {
    return beta_bar_time(space, ti - tj, tj - tk, ni, nj, nk) +
           beta_bar_time(space, ti - tk, tk - tj, ni, nk, nj);
}

// <V_+^i G(w1+w2) V_-^j G(w1) V_-^k>; w1 follows the earliest interaction.
inline cplx beta_freq(const SuperOpSpace& space, cplx omega_first, cplx omega_second, int ni, int nj, int nk) {
    const ChainLeg legs[] = {{unit_axis(nk), omega_first}, {unit_axis(nj), omega_second}};
    return chain_freq(space, unit_axis(ni), legs);
}

// --- third order ------------------------------------------------------------

// <V_+^i G(t) V_-^j G(t') V_-^k G(t'') V_-^l>
inline cplx gamma_bar_time(const SuperOpSpace& space, double t, double t1, double t2,
                           int ni, int nj, int nk, int nl) {
    const ChainLeg legs[] = {{unit_axis(nl), t2}, {unit_axis(nk), t1}, {unit_axis(nj), t}};
    return chain_time(space, unit_axis(ni), legs);
}

// <V_+^i G(w1+w2+w3) V_-^j G(w1+w2) V_-^k G(w1) V_-^l>
inline cplx gamma_freq(const SuperOpSpace& space, cplx w1, cplx w2, cplx w3, int ni, int nj, int nk, int nl) {
    const ChainLeg legs[] = {{unit_axis(nl), w1}, {unit_axis(nk), w2}, {unit_axis(nj), w3}};
    return chain_freq(space, unit_axis(ni), legs);
}

// Time-ordered gamma: sum over the six orderings of the three V_- legs.
inline cplx gamma_ordered(const SuperOpSpace& space, double ti, std::array<double, 3> t,
                          int ni, std::array<int, 3> nu) {
    std::array<int, 3> p{0, 1, 2};
    cplx sum = 0.0;
    do {
        // p lists legs from latest to earliest
        sum += gamma_bar_time(space, ti - t[p[0]], t[p[0]] - t[p[1]], t[p[1]] - t[p[2]],
                              ni, nu[p[0]], nu[p[1]], nu[p[2]]);
    } while (std::next_permutation(p.begin(), p.end()));
    return sum;
}

// --- tagged values for reporting -------------------------------------------

enum class ResponseKind { alpha, beta_bar, beta_ordered, gamma_bar, gamma_ordered };

inline const char* to_string(ResponseKind k) {
    switch (k) {
    case ResponseKind::alpha: return "alpha";
    case ResponseKind::beta_bar: return "beta_bar";
    case ResponseKind::beta_ordered: return "beta_ordered";
    case ResponseKind::gamma_bar: return "gamma_bar";
    case ResponseKind::gamma_ordered: return "gamma_ordered";
    }
    return "?";
}

inline ResponseKind response_kind_from_string(const std::string& s) {
    for (auto k : {ResponseKind::alpha, ResponseKind::beta_bar, ResponseKind::beta_ordered,
                   ResponseKind::gamma_bar, ResponseKind::gamma_ordered})
        if (s == to_string(k)) return k;
    throw ModelError("unknown response kind '" + s + "'");
}

struct ResponseValue {
    cplx value;
    ResponseKind kind;
    std::vector<int> indices;
    std::vector<double> arguments;
    bool frequency = true;  // arguments are frequencies, otherwise times
};

// Dispatches by kind. Frequency arguments: alpha (w), beta_* (w1, w2), gamma_* (w1, w2, w3);
// ordered kinds in frequency pair index k+1 with argument k and sum over leg orderings. Time arguments:
// alpha (t_i, t_j), beta_bar (t, t'), beta_ordered (t_i, t_j, t_k), gamma_bar (t, t', t''),
// gamma_ordered (t_i, t_j, t_k, t_l).
inline ResponseValue evaluate_response(const SuperOpSpace& space, ResponseKind kind, std::vector<int> idx,
                                       std::vector<double> args, bool frequency) {
    const auto need = [&](std::size_t ni, std::size_t na) {
        if (idx.size() != ni || args.size() != na)
            throw ModelError(std::string(to_string(kind)) + " expects " + std::to_string(ni) + " indices and " +
                             std::to_string(na) + " arguments");
        for (int nu : idx)
            if (nu < 0 || nu > 2) throw ModelError("Cartesian index out of range");
    };
    cplx v = 0.0;
    if (frequency) {
        std::vector<ChainLeg> legs;
        switch (kind) {
        case ResponseKind::alpha: need(2, 1); v = alpha_freq(space, args[0], idx[0], idx[1]); break;
        case ResponseKind::beta_bar: need(3, 2); v = beta_freq(space, args[0], args[1], idx[0], idx[1], idx[2]); break;
        case ResponseKind::gamma_bar:
            need(4, 3);
            v = gamma_freq(space, args[0], args[1], args[2], idx[0], idx[1], idx[2], idx[3]);
            break;
        case ResponseKind::beta_ordered:
        case ResponseKind::gamma_ordered: {
            const std::size_t n = kind == ResponseKind::beta_ordered ? 2 : 3;
            need(n + 1, n);
            for (std::size_t k = 0; k < n; ++k) legs.push_back({unit_axis(idx[k + 1]), args[k]});
            v = ordered_chain_freq(space, unit_axis(idx[0]), legs);
            break;
        }
        }
    } else {
        switch (kind) {
        case ResponseKind::alpha: need(2, 2); v = alpha_time(space, args[0], args[1], idx[0], idx[1]); break;
        case ResponseKind::beta_bar:
            need(3, 2);
            v = beta_bar_time(space, args[0], args[1], idx[0], idx[1], idx[2]);
            break;
        case ResponseKind::beta_ordered:
            need(3, 3);
            v = beta_ordered(space, args[0], args[1], args[2], idx[0], idx[1], idx[2]);
            break;
        case ResponseKind::gamma_bar:
            need(4, 3);
            v = gamma_bar_time(space, args[0], args[1], args[2], idx[0], idx[1], idx[2], idx[3]);
            break;
        case ResponseKind::gamma_ordered:
            need(4, 4);
            v = gamma_ordered(space, args[0], {args[1], args[2], args[3]}, idx[0], {idx[1], idx[2], idx[3]});
            break;
        }
    }
    return {v, kind, std::move(idx), std::move(args), frequency};
}

} // namespace vmisim
