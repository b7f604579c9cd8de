// diagrams.hpp: counting and enumeration of two-molecule vacuum-exchange diagrams
//
// A diagram at order n places n external-field interactions in chronological
// order, each on molecule a or b. Molecule b ends with the vacuum emission
// (Vb); molecule a absorbs it later (Va) and carries the detection interaction,
// which is always last. The counting formulas group diagrams by the slot m of
// Vb among the n fields: b's fields are a nonempty subset of the first m, and Va
// can sit in any of the n - m + 1 slots from m on.

#pragma once

#include "vmisim/types.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

namespace vmisim {

enum class DiagramClass { local_field, cascading, equal_order_cascading };

inline const char* to_string(DiagramClass c) {
    switch (c) {
    case DiagramClass::local_field: return "local_field";
    case DiagramClass::cascading: return "cascading";
    case DiagramClass::equal_order_cascading: return "equal_order_cascading";
    }
    return "?";
}

enum class DiagramFilter { all, local_field, cascading, equal_order_cascading };

inline DiagramFilter diagram_filter_from_string(const std::string& s) {
    if (s == "all") return DiagramFilter::all;
    if (s == "local_field") return DiagramFilter::local_field;
    if (s == "cascading") return DiagramFilter::cascading;
    if (s == "equal_order_cascading") return DiagramFilter::equal_order_cascading;
    throw ModelError("unknown diagram class '" + s + "'");
}

enum class EventKind { field, vacuum, detection };

struct DiagramEvent {
    EventKind kind;
    int field = 0;       // 1-based pulse label for field events, 0 otherwise
    char molecule = 'a';
};

// One factor e^{i sign k.r_molecule}; sign +1 stands for the pulse's own zeta.
struct PhaseFactor {
    int field;  // 0 is the detection pulse
    int sign;
    char molecule;
};

struct DiagramTerm {
    int order = 0;
    std::vector<int> permutation;           // chronological order of field labels
    std::vector<char> assignment;           // assignment[i-1] is the molecule of field i
    std::vector<DiagramEvent> events;       // global chronological order, detection last
    int vacuum_slot_a = 0;                  // index of Va among a's interactions
    DiagramClass classification = DiagramClass::local_field;
    std::vector<PhaseFactor> phase_spec;

    int fields_on(char m) const { return static_cast<int>(std::count(assignment.begin(), assignment.end(), m)); }

    // Compact label such as "F1b F2a Vb Va S".
    std::string label() const {
        std::string s;
        for (const auto& e : events) {
            if (!s.empty()) s += ' ';
            switch (e.kind) {
            case EventKind::field: s += 'F' + std::to_string(e.field) + e.molecule; break;
            case EventKind::vacuum: s += std::string("V") + e.molecule; break;
            case EventKind::detection: s += 'S'; break;
            }
        }
        return s;
    }
};

inline std::uint64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    std::uint64_t r = 1;
    for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
    return r;
}

// Total number of diagrams at order n (fields in a fixed chronological order).
inline std::uint64_t count_total(int n) {
    if (n < 1) throw ModelError("diagram order must be at least 1");
    if (n > 62) throw ModelError("diagram order too large to count");
    std::uint64_t sum = 0;
    for (int m = 1; m <= n; ++m) sum += ((std::uint64_t{1} << m) - 1) * static_cast<std::uint64_t>(n - m + 1);
    return sum;
}

// Diagrams whose two response functions have equal order: b carries (n+1)/2
// fields and a carries (n-1)/2. At n = 1 the only diagram pairs two linear
// responses and is local-field, so the count is zero.
inline std::uint64_t count_equal_order_cascading(int n) {
    if (n < 1) throw ModelError("diagram order must be at least 1");
    if (n % 2 == 0) throw ModelError("equal-order cascading diagrams exist at odd orders only");
    const int k = (n + 1) / 2;
    if (k == 1) return 0;
    std::uint64_t sum = 0;
    for (int m = k; m <= n; ++m) sum += binomial(m, k) * static_cast<std::uint64_t>(n - m + 1);
    return sum;
}

inline DiagramClass classify(int fields_b, int fields_a) {
    // b's response has fields_b legs, a's has fields_a + 1 (the vacuum absorption)
    if (fields_b == 1 || fields_a == 0) return DiagramClass::local_field;
    if (fields_b == fields_a + 1) return DiagramClass::equal_order_cascading;
    return DiagramClass::cascading;
}

inline bool passes(DiagramFilter f, DiagramClass c) {
    switch (f) {
    case DiagramFilter::all: return true;
    case DiagramFilter::local_field: return c == DiagramClass::local_field;
    // equal-order cascading is a subset of cascading
    case DiagramFilter::cascading: return c != DiagramClass::local_field;
    case DiagramFilter::equal_order_cascading: return c == DiagramClass::equal_order_cascading;
    }
    return false;
}

// All diagrams at order n in {1, 2, 3}. Without permutations the fields arrive
// in label order 1..n; with permutations every chronological order is included.
inline std::vector<DiagramTerm> enumerate_2vmi(int n, bool include_permutations,
                                               DiagramFilter filter = DiagramFilter::all) {
    if (n < 1 || n > 3) throw ModelError("diagram enumeration supports orders 1 to 3");
    std::vector<DiagramTerm> out;
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 1);
    do {
        for (unsigned mask = 1; mask < (1u << n); ++mask) {
            // bit i of mask: the i-th field in chronological order is on b
            int last_b = 0;
            for (int i = 0; i < n; ++i)
                if (mask & (1u << i)) last_b = i + 1;
            const int nb = std::popcount(mask);
            const auto cls = classify(nb, n - nb);
            if (!passes(filter, cls)) continue;
            for (int vb = last_b; vb <= n; ++vb)
                for (int va = vb; va <= n; ++va) {
                    DiagramTerm t;
                    t.order = n;
                    t.permutation = perm;
                    t.assignment.assign(n, 'a');
                    t.classification = cls;
                    for (int i = 0; i < n; ++i)
                        if (mask & (1u << i)) t.assignment[perm[i] - 1] = 'b';
                    int a_count = 0;
                    // slot s holds the vacuum events placed after the s-th field
                    for (int s = 0; s <= n; ++s) {
                        if (s > 0) {
                            const char mol = (mask & (1u << (s - 1))) ? 'b' : 'a';
                            t.events.push_back({EventKind::field, perm[s - 1], mol});
                            if (mol == 'a') ++a_count;
                        }
                        if (s == vb) t.events.push_back({EventKind::vacuum, 0, 'b'});
                        if (s == va) {
                            t.vacuum_slot_a = a_count;
                            t.events.push_back({EventKind::vacuum, 0, 'a'});
                        }
                    }
                    t.events.push_back({EventKind::detection, 0, 'a'});
                    for (int f = 1; f <= n; ++f) t.phase_spec.push_back({f, +1, t.assignment[f - 1]});
                    t.phase_spec.push_back({0, -1, 'a'});
                    out.push_back(std::move(t));
                }
        }
    } while (include_permutations && std::next_permutation(perm.begin(), perm.end()));
    return out;
}

} // namespace vmisim
