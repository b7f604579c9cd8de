// cli_io.hpp: run configuration, presets and deterministic grid output
//
// Configs are JSON with a closed schema: unknown keys are errors and every
// violation found is reported, not just the first. Serialization writes doubles
// in shortest round-trip form, so parse(serialize(c)) == c.

#pragma once

#include "vmisim/signals.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace vmisim {

inline constexpr const char* kConfigVersion = "vmisim/1";
inline constexpr const char* kSoftwareVersion = "1.0.0";

struct DephasingSpec {
    int n = 0, m = 0;
    double rate = 0.0;
    bool operator==(const DephasingSpec&) const = default;
};

struct DipoleSpec {
    int n = 0, m = 0;
    Vec3 re = Vec3::Zero();
    Vec3 im = Vec3::Zero();
    bool operator==(const DipoleSpec&) const = default;
};

struct MoleculeSpec {
    std::string id;
    std::vector<double> energies;
    std::vector<std::string> labels;
    std::vector<DephasingSpec> dephasing;
    std::vector<DipoleSpec> dipoles;
    std::optional<Vec3> position;
    bool operator==(const MoleculeSpec&) const = default;
};

struct PulseSpec {
    std::string role = "drive";
    double center_time = 0.0;
    double center_frequency = 1.0;
    double width = 1.0;
    double amplitude_re = 1.0;
    double amplitude_im = 0.0;
    Vec3 k_direction = Vec3::UnitX();
    Vec3 polarization = Vec3::UnitZ();
    bool operator==(const PulseSpec&) const = default;
};

struct LatticeSpec {
    double spacing = 1.0;
    int M = 1;
    std::string shape = "cubic";
    bool operator==(const LatticeSpec&) const = default;
};

struct GeometrySpec {
    double c = 1.0;
    std::optional<std::vector<Vec3>> positions;
    std::optional<LatticeSpec> lattice;
    bool operator==(const GeometrySpec&) const = default;
};

struct ScanSpec {
    std::string axis;
    double start = 0.0, stop = 0.0;
    int steps = 1;
    bool operator==(const ScanSpec&) const = default;

    std::vector<double> values() const {
        std::vector<double> v(steps);
        for (int i = 0; i < steps; ++i) v[i] = steps == 1 ? start : start + (stop - start) * i / (steps - 1);
        return v;
    }
};

struct RunSpec {
    int order = 1;
    std::string domain = "freq";
    bool vmi = false;
    std::vector<ScanSpec> scan;
    double tolerance = 1e-6;
    std::string output;
    bool breakdown = false;
    Diagnostics diagnostics;
    bool operator==(const RunSpec&) const = default;
};

struct RunConfig {
    std::string version = kConfigVersion;
    std::vector<MoleculeSpec> molecules;
    std::vector<PulseSpec> pulses;
    GeometrySpec geometry;
    RunSpec run;
    bool operator==(const RunConfig&) const = default;
};

// --- parsing ----------------------------------------------------------------

namespace detail {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

// Collects schema problems with their JSON path.
class Checker {
public:
    std::vector<std::string> problems;

    void fail(const std::string& path, const std::string& msg) { problems.push_back(path + ": " + msg); }

    // Reports keys outside `allowed`; returns false if j is not an object.
    bool object(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
        if (!j.is_object()) {
            fail(path, "expected an object");
            return false;
        }
        const std::set<std::string> ok(allowed.begin(), allowed.end());
        for (const auto& [k, v] : j.items())
            if (!ok.count(k)) fail(path, "unknown key '" + k + "'");
        return true;
    }

    const json* field(const json& j, const std::string& path, const char* key, bool required) {
        const auto it = j.find(key);
        if (it == j.end()) {
            if (required) fail(path, std::string("missing required key '") + key + "'");
            return nullptr;
        }
        return &*it;
    }

    template <class T>
    void number(const json& j, const std::string& path, const char* key, T& out, bool required) {
        const json* v = field(j, path, key, required);
        if (!v) return;
        if (!v->is_number()) return fail(path + "." + key, "expected a number");
        if constexpr (std::is_integral_v<T>) {
            if (!v->is_number_integer()) return fail(path + "." + key, "expected an integer");
            out = v->get<T>();
        } else {
            out = v->get<double>();
            if (!std::isfinite(out)) fail(path + "." + key, "must be finite");
        }
    }

    void boolean(const json& j, const std::string& path, const char* key, bool& out) {
        const json* v = field(j, path, key, false);
        if (!v) return;
        if (!v->is_boolean()) return fail(path + "." + key, "expected true or false");
        out = v->get<bool>();
    }

    void string(const json& j, const std::string& path, const char* key, std::string& out, bool required) {
        const json* v = field(j, path, key, required);
        if (!v) return;
        if (!v->is_string()) return fail(path + "." + key, "expected a string");
        out = v->get<std::string>();
    }

    bool vec3(const json& v, const std::string& path, Vec3& out) {
        if (!v.is_array() || v.size() != 3) {
            fail(path, "expected an array of 3 numbers");
            return false;
        }
        for (int i = 0; i < 3; ++i) {
            if (!v[i].is_number()) {
                fail(path, "expected an array of 3 numbers");
                return false;
            }
            out(i) = v[i].get<double>();
        }
        return true;
    }

    void vec3(const json& j, const std::string& path, const char* key, Vec3& out, bool required) {
        if (const json* v = field(j, path, key, required)) vec3(*v, path + "." + key, out);
    }

    bool level_pair(const json& j, const std::string& path, int& n, int& m) {
        const json* v = field(j, path, "levels", true);
        if (!v) return false;
        if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number_integer() || !(*v)[1].is_number_integer()) {
            fail(path + ".levels", "expected two level indices");
            return false;
        }
        n = (*v)[0].get<int>();
        m = (*v)[1].get<int>();
        return true;
    }
};

inline MoleculeSpec parse_molecule(Checker& ck, const json& j, const std::string& path) {
    MoleculeSpec m;
    if (!ck.object(j, path, {"id", "energies", "labels", "dephasing", "dipoles", "position"})) return m;
    ck.string(j, path, "id", m.id, true);
    const std::string who = path + " ('" + m.id + "')";
    if (const json* e = ck.field(j, path, "energies", true)) {
        if (!e->is_array()) ck.fail(who + ".energies", "expected an array of numbers");
        else
            for (const auto& x : *e) {
                if (!x.is_number()) {
                    ck.fail(who + ".energies", "expected an array of numbers");
                    break;
                }
                m.energies.push_back(x.get<double>());
            }
        if (m.energies.size() < 2) ck.fail(who + ".energies", "a molecule needs at least two levels");
    }
    const int d = static_cast<int>(m.energies.size());
    if (const json* l = ck.field(j, path, "labels", false)) {
        if (!l->is_array()) ck.fail(who + ".labels", "expected an array of strings");
        else
            for (const auto& x : *l) {
                if (!x.is_string()) {
                    ck.fail(who + ".labels", "expected an array of strings");
                    break;
                }
                m.labels.push_back(x.get<std::string>());
            }
        if (!m.labels.empty() && static_cast<int>(m.labels.size()) != d)
            ck.fail(who + ".labels", "needs one label per level");
    }
    const auto check_pair = [&](const std::string& p, int n, int k) {
        if (n < 0 || k < 0 || n >= d || k >= d) {
            ck.fail(p, "level index out of range");
            return false;
        }
        if (n == k) {
            ck.fail(p, "levels of a pair must differ");
            return false;
        }
        return true;
    };
    if (const json* dp = ck.field(j, path, "dephasing", false)) {
        if (!dp->is_array()) ck.fail(who + ".dephasing", "expected a list");
        else
            for (std::size_t i = 0; i < dp->size(); ++i) {
                const std::string p = who + ".dephasing[" + std::to_string(i) + "]";
                DephasingSpec s;
                if (!ck.object((*dp)[i], p, {"levels", "rate"})) continue;
                const bool pair_ok = ck.level_pair((*dp)[i], p, s.n, s.m);
                ck.number((*dp)[i], p, "rate", s.rate, true);
                if (pair_ok && check_pair(p, s.n, s.m) && s.rate < 0.0)
                    ck.fail(p, "molecule '" + m.id + "' pair (" + std::to_string(s.n) + "," + std::to_string(s.m) +
                                   "): dephasing rate must be non-negative");
                m.dephasing.push_back(s);
            }
    }
    if (const json* dp = ck.field(j, path, "dipoles", false)) {
        if (!dp->is_array()) ck.fail(who + ".dipoles", "expected a list");
        else
            for (std::size_t i = 0; i < dp->size(); ++i) {
                const std::string p = who + ".dipoles[" + std::to_string(i) + "]";
                DipoleSpec s;
                if (!ck.object((*dp)[i], p, {"levels", "re", "im"})) continue;
                if (ck.level_pair((*dp)[i], p, s.n, s.m)) check_pair(p, s.n, s.m);
                ck.vec3((*dp)[i], p, "re", s.re, true);
                ck.vec3((*dp)[i], p, "im", s.im, false);
                m.dipoles.push_back(s);
            }
    }
    if (ck.field(j, path, "position", false)) {
        Vec3 r;
        ck.vec3(j, who, "position", r, true);
        m.position = r;
    }
    return m;
}

inline PulseSpec parse_pulse(Checker& ck, const json& j, const std::string& path) {
    PulseSpec p;
    if (!ck.object(j, path, {"role", "center_time", "center_frequency", "width", "amplitude_re", "amplitude_im",
                             "k_direction", "polarization"}))
        return p;
    ck.string(j, path, "role", p.role, true);
    if (p.role != "drive" && p.role != "detection") ck.fail(path + ".role", "must be 'drive' or 'detection'");
    ck.number(j, path, "center_time", p.center_time, true);
    ck.number(j, path, "center_frequency", p.center_frequency, true);
    ck.number(j, path, "width", p.width, true);
    ck.number(j, path, "amplitude_re", p.amplitude_re, false);
    ck.number(j, path, "amplitude_im", p.amplitude_im, false);
    ck.vec3(j, path, "k_direction", p.k_direction, true);
    ck.vec3(j, path, "polarization", p.polarization, true);
    if (!(p.width > 0.0)) ck.fail(path + ".width", "must be positive");
    if (!(p.center_frequency > 0.0)) ck.fail(path + ".center_frequency", "must be positive");
    if (p.k_direction.norm() == 0.0) ck.fail(path + ".k_direction", "must be nonzero");
    if (p.polarization.norm() == 0.0) ck.fail(path + ".polarization", "must be nonzero");
    else if (p.k_direction.norm() > 0.0 &&
             std::abs(p.k_direction.normalized().dot(p.polarization.normalized())) > 1e-12)
        ck.fail(path + ".polarization", "must be orthogonal to k_direction");
    return p;
}

inline Mat3c parse_matrix(Checker& ck, const json& v, const std::string& path) {
    Mat3c m = Mat3c::Zero();
    const auto bad = [&] { ck.fail(path, "expected 3 rows of 3 [re, im] pairs"); };
    if (!v.is_array() || v.size() != 3) return bad(), m;
    for (int r = 0; r < 3; ++r) {
        if (!v[r].is_array() || v[r].size() != 3) return bad(), m;
        for (int c = 0; c < 3; ++c) {
            const auto& e = v[r][c];
            if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) return bad(), m;
            m(r, c) = cplx(e[0].get<double>(), e[1].get<double>());
        }
    }
    return m;
}

inline RunSpec parse_run(Checker& ck, const json& j, const std::string& path) {
    RunSpec r;
    if (!ck.object(j, path, {"order", "domain", "vmi", "scan", "tolerance", "output", "breakdown", "diagnostics"}))
        return r;
    ck.number(j, path, "order", r.order, false);
    if (r.order < 1 || r.order > 3) ck.fail(path + ".order", "must be 1, 2 or 3");
    ck.string(j, path, "domain", r.domain, false);
    if (r.domain != "time" && r.domain != "freq") ck.fail(path + ".domain", "must be 'time' or 'freq'");
    ck.boolean(j, path, "vmi", r.vmi);
    ck.number(j, path, "tolerance", r.tolerance, false);
    if (!(r.tolerance > 0.0)) ck.fail(path + ".tolerance", "must be positive");
    ck.string(j, path, "output", r.output, false);
    ck.boolean(j, path, "breakdown", r.breakdown);
    if (const json* s = ck.field(j, path, "scan", false)) {
        if (!s->is_array()) ck.fail(path + ".scan", "expected a list");
        else
            for (std::size_t i = 0; i < s->size(); ++i) {
                const std::string p = path + ".scan[" + std::to_string(i) + "]";
                ScanSpec a;
                if (!ck.object((*s)[i], p, {"axis", "start", "stop", "steps"})) continue;
                ck.string((*s)[i], p, "axis", a.axis, true);
                ck.number((*s)[i], p, "start", a.start, true);
                ck.number((*s)[i], p, "stop", a.stop, true);
                ck.number((*s)[i], p, "steps", a.steps, true);
                if (a.steps < 1) ck.fail(p + ".steps", "must be at least 1");
                else if (a.steps > 1 && !(a.stop > a.start)) ck.fail(p, "stop must exceed start");
                r.scan.push_back(a);
            }
    }
    if (const json* d = ck.field(j, path, "diagnostics", false)) {
        const std::string p = path + ".diagnostics";
        if (ck.object(*d, p, {"ignore_retardation", "unit_phases", "rwa", "coupling_override"})) {
            ck.boolean(*d, p, "ignore_retardation", r.diagnostics.ignore_retardation);
            ck.boolean(*d, p, "unit_phases", r.diagnostics.unit_phases);
            ck.boolean(*d, p, "rwa", r.diagnostics.rwa);
            if (const json* m = ck.field(*d, p, "coupling_override", false))
                r.diagnostics.coupling_override = parse_matrix(ck, *m, p + ".coupling_override");
        }
    }
    return r;
}

inline GeometrySpec parse_geometry(Checker& ck, const json& j, const std::string& path) {
    GeometrySpec g;
    if (!ck.object(j, path, {"c", "positions", "lattice"})) return g;
    ck.number(j, path, "c", g.c, false);
    if (!(g.c > 0.0)) ck.fail(path + ".c", "must be positive");
    if (const json* p = ck.field(j, path, "positions", false)) {
        std::vector<Vec3> pos;
        if (!p->is_array()) ck.fail(path + ".positions", "expected a list of 3-vectors");
        else
            for (std::size_t i = 0; i < p->size(); ++i) {
                Vec3 r;
                if (ck.vec3((*p)[i], path + ".positions[" + std::to_string(i) + "]", r)) pos.push_back(r);
            }
        g.positions = pos;
    }
    if (const json* l = ck.field(j, path, "lattice", false)) {
        const std::string p = path + ".lattice";
        LatticeSpec s;
        if (ck.object(*l, p, {"spacing", "M", "shape"})) {
            ck.number(*l, p, "spacing", s.spacing, true);
            ck.number(*l, p, "M", s.M, true);
            ck.string(*l, p, "shape", s.shape, false);
            if (!(s.spacing > 0.0)) ck.fail(p + ".spacing", "must be positive");
            if (s.M < 1) ck.fail(p + ".M", "must be at least 1");
            if (s.shape != "cubic" && s.shape != "line") ck.fail(p + ".shape", "must be 'cubic' or 'line'");
        }
        g.lattice = s;
    }
    if (g.positions && g.lattice) ck.fail(path, "give either positions or lattice, not both");
    return g;
}

} // namespace detail

// Molecules after applying geometry: explicit positions, or lattice copies of a
// single template molecule tagged <id>000, <id>001, ...
inline std::vector<MolecularModel> build_molecules(const RunConfig& cfg) {
    std::vector<MolecularModel> out;
    for (const auto& s : cfg.molecules) {
        auto m = make_model(s.id, s.energies);
        m.labels = s.labels;
        for (const auto& d : s.dephasing) set_dephasing(m, d.n, d.m, d.rate);
        for (const auto& d : s.dipoles) {
            CVec3 mu;
            for (int i = 0; i < 3; ++i) mu(i) = cplx(d.re(i), d.im(i));
            set_dipole(m, d.n, d.m, mu);
        }
        if (s.position) m.position = *s.position;
        out.push_back(std::move(m));
    }
    const auto& g = cfg.geometry;
    if (g.positions) {
        if (g.positions->size() != out.size()) throw ModelError("geometry.positions needs one entry per molecule");
        for (std::size_t i = 0; i < out.size(); ++i) {
            if (cfg.molecules[i].position) throw ModelError("molecule '" + out[i].id + "' has a position and geometry.positions is set");
            out[i].position = (*g.positions)[i];
        }
    }
    if (g.lattice) {
        if (out.size() != 1) throw ModelError("geometry.lattice needs exactly one template molecule");
        const auto sites = lattice_positions(g.lattice->spacing, g.lattice->M,
                                             g.lattice->shape == "line" ? LatticeShape::line : LatticeShape::cubic);
        const MolecularModel tmpl = out.front();
        out.clear();
        for (std::size_t i = 0; i < sites.size(); ++i) {
            MolecularModel m = tmpl;
            char tag[24];
            std::snprintf(tag, sizeof tag, "%03zu", i);
            m.id = tmpl.id + tag;
            m.position = tmpl.position + sites[i];
            out.push_back(std::move(m));
        }
    }
    return out;
}

inline Pulse build_pulse(const PulseSpec& s, double c) {
    return make_pulse(s.role == "detection" ? PulseRole::detection : PulseRole::drive, s.center_time,
                      s.center_frequency, s.width, cplx(s.amplitude_re, s.amplitude_im), s.k_direction,
                      s.polarization, c);
}

inline Scenario to_scenario(const RunConfig& cfg) {
    Scenario s;
    s.molecules = build_molecules(cfg);
    s.c = cfg.geometry.c;
    for (const auto& p : cfg.pulses) s.pulses.push_back(build_pulse(p, s.c));
    s.domain = domain_from_string(cfg.run.domain);
    s.order = cfg.run.order;
    s.vmi = cfg.run.vmi;
    s.tolerance = cfg.run.tolerance;
    s.diagnostics = cfg.run.diagnostics;
    for (const auto& a : cfg.run.scan) s.scan.push_back({a.axis, a.values()});
    return s;
}

// Parses and validates a config. With require_signal the pulses must form a
// valid signal run (exactly one detection pulse, drives matching the order).
// Throws ConfigError listing every problem found.
inline RunConfig parse_config(const std::string& text, bool require_signal = true) {
    using detail::json;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError({std::string("malformed JSON: ") + e.what()});
    }
    detail::Checker ck;
    RunConfig cfg;
    if (!ck.object(j, "config", {"version", "molecules", "pulses", "geometry", "run"})) throw ConfigError(ck.problems);
    ck.string(j, "config", "version", cfg.version, true);
    if (cfg.version != kConfigVersion) ck.fail("config.version", std::string("expected '") + kConfigVersion + "'");
    if (const json* m = ck.field(j, "config", "molecules", true)) {
        if (!m->is_array() || m->empty()) ck.fail("molecules", "expected a nonempty list");
        else
            for (std::size_t i = 0; i < m->size(); ++i)
                cfg.molecules.push_back(detail::parse_molecule(ck, (*m)[i], "molecules[" + std::to_string(i) + "]"));
    }
    if (const json* p = ck.field(j, "config", "pulses", require_signal)) {
        if (!p->is_array()) ck.fail("pulses", "expected a list");
        else
            for (std::size_t i = 0; i < p->size(); ++i)
                cfg.pulses.push_back(detail::parse_pulse(ck, (*p)[i], "pulses[" + std::to_string(i) + "]"));
    }
    if (const json* g = ck.field(j, "config", "geometry", false)) cfg.geometry = detail::parse_geometry(ck, *g, "geometry");
    if (const json* r = ck.field(j, "config", "run", false)) cfg.run = detail::parse_run(ck, *r, "run");

    std::set<std::string> ids;
    for (const auto& m : cfg.molecules)
        if (!m.id.empty() && !ids.insert(m.id).second) ck.fail("molecules", "duplicate molecule id '" + m.id + "'");
    if (require_signal) {
        std::size_t detections = 0, drives = 0;
        for (const auto& p : cfg.pulses) (p.role == "detection" ? detections : drives) += 1;
        if (detections != 1) ck.fail("pulses", "exactly one detection pulse is required");
        if (drives != static_cast<std::size_t>(cfg.run.order))
            ck.fail("pulses", "order " + std::to_string(cfg.run.order) + " needs " + std::to_string(cfg.run.order) +
                                  " drive pulses, got " + std::to_string(drives));
    }
    if (!ck.problems.empty()) throw ConfigError(ck.problems);
    // physical invariants beyond the schema
    try {
        const Scenario s = to_scenario(cfg);
        if (require_signal) s.validate();
        else
            for (const auto& m : s.molecules) m.validate();
    } catch (const ModelError& e) {
        throw ConfigError({e.what()});
    }
    return cfg;
}

inline std::string serialize_config(const RunConfig& cfg) {
    using detail::ojson;
    const auto v3 = [](const Vec3& v) { return ojson::array({v(0), v(1), v(2)}); };
    ojson j;
    j["version"] = cfg.version;
    ojson mols = ojson::array();
    for (const auto& m : cfg.molecules) {
        ojson o;
        o["id"] = m.id;
        o["energies"] = m.energies;
        if (!m.labels.empty()) o["labels"] = m.labels;
        ojson dp = ojson::array();
        for (const auto& d : m.dephasing) dp.push_back({{"levels", {d.n, d.m}}, {"rate", d.rate}});
        o["dephasing"] = dp;
        ojson di = ojson::array();
        for (const auto& d : m.dipoles) {
            ojson e{{"levels", {d.n, d.m}}, {"re", v3(d.re)}};
            if (!d.im.isZero(0.0)) e["im"] = v3(d.im);
            di.push_back(e);
        }
        o["dipoles"] = di;
        if (m.position) o["position"] = v3(*m.position);
        mols.push_back(o);
    }
    j["molecules"] = mols;
    ojson ps = ojson::array();
    for (const auto& p : cfg.pulses)
        ps.push_back({{"role", p.role},
                      {"center_time", p.center_time},
                      {"center_frequency", p.center_frequency},
                      {"width", p.width},
                      {"amplitude_re", p.amplitude_re},
                      {"amplitude_im", p.amplitude_im},
                      {"k_direction", v3(p.k_direction)},
                      {"polarization", v3(p.polarization)}});
    j["pulses"] = ps;
    ojson g;
    g["c"] = cfg.geometry.c;
    if (cfg.geometry.positions) {
        ojson pos = ojson::array();
        for (const auto& r : *cfg.geometry.positions) pos.push_back(v3(r));
        g["positions"] = pos;
    }
    if (cfg.geometry.lattice)
        g["lattice"] = {{"spacing", cfg.geometry.lattice->spacing}, {"M", cfg.geometry.lattice->M},
                        {"shape", cfg.geometry.lattice->shape}};
    j["geometry"] = g;
    const auto& r = cfg.run;
    ojson run;
    run["order"] = r.order;
    run["domain"] = r.domain;
    run["vmi"] = r.vmi;
    ojson scan = ojson::array();
    for (const auto& a : r.scan) scan.push_back({{"axis", a.axis}, {"start", a.start}, {"stop", a.stop}, {"steps", a.steps}});
    run["scan"] = scan;
    run["tolerance"] = r.tolerance;
    run["output"] = r.output;
    run["breakdown"] = r.breakdown;
    ojson d{{"ignore_retardation", r.diagnostics.ignore_retardation},
            {"unit_phases", r.diagnostics.unit_phases},
            {"rwa", r.diagnostics.rwa}};
    if (r.diagnostics.coupling_override) {
        ojson m = ojson::array();
        for (int i = 0; i < 3; ++i) {
            ojson row = ojson::array();
            for (int k = 0; k < 3; ++k)
                row.push_back({(*r.diagnostics.coupling_override)(i, k).real(), (*r.diagnostics.coupling_override)(i, k).imag()});
            m.push_back(row);
        }
        d["coupling_override"] = m;
    }
    run["diagnostics"] = d;
    j["run"] = run;
    return j.dump(2) + "\n";
}

// "omega_s=0.5:1.5:11" -> axis omega_s, 11 points from 0.5 to 1.5.
inline ScanSpec parse_scan_flag(const std::string& s) {
    const auto eq = s.find('=');
    const auto c1 = s.find(':', eq == std::string::npos ? 0 : eq);
    const auto c2 = c1 == std::string::npos ? c1 : s.find(':', c1 + 1);
    if (eq == std::string::npos || c1 == std::string::npos || c2 == std::string::npos)
        throw ConfigError({"--scan expects <axis>=<start>:<stop>:<steps>, got '" + s + "'"});
    ScanSpec a;
    a.axis = s.substr(0, eq);
    try {
        std::size_t used = 0;
        const auto whole = [&](const std::string& t) {
            if (used != t.size()) throw std::invalid_argument(t);
        };
        const std::string t1 = s.substr(eq + 1, c1 - eq - 1), t2 = s.substr(c1 + 1, c2 - c1 - 1), t3 = s.substr(c2 + 1);
        a.start = std::stod(t1, &used);
        whole(t1);
        a.stop = std::stod(t2, &used);
        whole(t2);
        a.steps = std::stoi(t3, &used);
        whole(t3);
    } catch (const std::exception&) {
        throw ConfigError({"--scan expects <axis>=<start>:<stop>:<steps>, got '" + s + "'"});
    }
    if (a.steps < 1 || (a.steps > 1 && !(a.stop > a.start)))
        throw ConfigError({"--scan needs steps >= 1 and stop > start, got '" + s + "'"});
    return a;
}

// --- output -----------------------------------------------------------------

inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string grid_csv(const SignalGrid& g, bool breakdown) {
    std::string out;
    for (const auto& ax : g.axes) out += ax.name + ",";
    out += "signal";
    if (breakdown)
        for (const auto& t : g.term_names) out += "," + t;
    out += "\n";
    for (std::size_t i = 0; i < g.values.size(); ++i) {
        std::size_t rest = i;
        std::vector<double> coords(g.axes.size());
        for (std::size_t k = g.axes.size(); k-- > 0;) {
            coords[k] = g.axes[k].values[rest % g.axes[k].values.size()];
            rest /= g.axes[k].values.size();
        }
        for (double v : coords) out += format_double(v) + ",";
        out += format_double(g.values[i]);
        if (breakdown)
            for (double t : g.terms[i]) out += "," + format_double(t);
        out += "\n";
    }
    return out;
}

// Relative paths go under $VMISIM_OUTPUT_DIR when it is set.
inline std::filesystem::path resolve_output(const std::string& path) {
    std::filesystem::path p(path);
    if (const char* dir = std::getenv("VMISIM_OUTPUT_DIR"); dir && *dir && p.is_relative())
        p = std::filesystem::path(dir) / p;
    return p;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + p.string() + "' for writing");
    f << text;
    if (!f) throw std::runtime_error("failed writing '" + p.string() + "'");
}

// CSV plus a sidecar <path>.json holding the digest and software version.
inline void emit_grid(const SignalGrid& g, const std::string& path, bool breakdown) {
    const auto p = resolve_output(path);
    write_text(p, grid_csv(g, breakdown));
    detail::ojson meta;
    meta["software_version"] = kSoftwareVersion;
    meta["scenario_digest"] = g.digest;
    meta["rows"] = g.values.size();
    detail::ojson cols = detail::ojson::array();
    for (const auto& ax : g.axes) cols.push_back(ax.name);
    cols.push_back("signal");
    if (breakdown)
        for (const auto& t : g.term_names) cols.push_back(t);
    meta["columns"] = cols;
    write_text(p.string() + ".json", meta.dump(2) + "\n");
}

// --- presets ----------------------------------------------------------------

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"dimer_linear", "ladder_s2", "cascade_s3",
                                                "scramble_demo", "lattice_pm", "scaling"};
    return names;
}

namespace detail {

inline MoleculeSpec two_level_spec(std::string id, double w, double gamma, Vec3 pos) {
    MoleculeSpec m;
    m.id = std::move(id);
    m.energies = {0.0, w};
    m.labels = {"g", "e"};
    m.dephasing = {{0, 1, gamma}};
    m.dipoles = {{0, 1, Vec3(0, 0, 1), Vec3::Zero()}};
    m.position = pos;
    return m;
}

inline MoleculeSpec ladder_spec(std::string id, double gamma, Vec3 pos) {
    MoleculeSpec m;
    m.id = std::move(id);
    m.energies = {0.0, 1.0, 1.9};
    m.labels = {"g", "e", "f"};
    m.dephasing = {{0, 1, gamma}, {1, 2, gamma}, {0, 2, gamma}};
    m.dipoles = {{0, 1, Vec3(0, 0, 1.0), Vec3::Zero()},
                 {1, 2, Vec3(0, 0, 0.8), Vec3::Zero()},
                 {0, 2, Vec3(0, 0, 0.5), Vec3::Zero()}};
    m.position = pos;
    return m;
}

inline PulseSpec pulse_spec(const char* role, double t, double w, double sigma) {
    PulseSpec p;
    p.role = role;
    p.center_time = t;
    p.center_frequency = w;
    p.width = sigma;
    return p;
}

} // namespace detail

inline RunConfig preset(const std::string& name) {
    using detail::ladder_spec;
    using detail::pulse_spec;
    using detail::two_level_spec;
    RunConfig c;
    if (name == "dimer_linear") {
        // kappa r = 1 at resonance
        c.molecules = {two_level_spec("a", 1.0, 0.1, Vec3::Zero()), two_level_spec("b", 1.0, 0.1, Vec3(0, 0, 1))};
        c.pulses = {pulse_spec("drive", 0.0, 1.0, 3.0), pulse_spec("detection", 0.0, 1.0, 3.0)};
        c.run.order = 1;
        c.run.vmi = true;
        c.run.scan = {{"omega_s", 0.8, 1.2, 11}};
    } else if (name == "ladder_s2" || name == "cascade_s3") {
        // near field (kappa r ~ 2e-3), where the retarded static coupling
        // reproduces the frequency-dependent tensor
        c.geometry.c = 1000.0;
        c.molecules = {ladder_spec("a", 0.1, Vec3::Zero()), ladder_spec("b", 0.1, Vec3(0, 0, 1))};
        c.run.vmi = true;
        c.run.domain = "time";
        if (name == "ladder_s2") {
            c.run.order = 2;
            c.pulses = {pulse_spec("drive", 0.0, 1.0, 2.0), pulse_spec("drive", 6.0, 0.9, 2.0),
                        pulse_spec("detection", 12.0, 1.9, 2.0)};
        } else {
            c.run.order = 3;
            c.pulses = {pulse_spec("drive", 0.0, 1.0, 2.0), pulse_spec("drive", 6.0, 0.9, 2.0),
                        pulse_spec("drive", 12.0, 0.9, 2.0), pulse_spec("detection", 18.0, 1.0, 2.0)};
        }
    } else if (name == "scramble_demo") {
        // b keeps its coherence long after pulse 1, which ends 5 widths before pulse 2
        c.molecules = {ladder_spec("a", 0.1, Vec3::Zero()), ladder_spec("b", 0.01, Vec3(0, 0, 1))};
        c.pulses = {pulse_spec("drive", 0.0, 1.0, 2.0), pulse_spec("drive", 10.0, 0.9, 2.0),
                    pulse_spec("detection", 10.0, 1.9, 2.0)};
        c.run.order = 2;
        c.run.vmi = true;
        c.run.domain = "time";
    } else if (name == "lattice_pm") {
        // 5^3 cubic lattice, kappa a = 2; phase-matched detection along k_1
        c.molecules = {two_level_spec("m", 2.0, 0.1, Vec3::Zero())};
        c.geometry.lattice = LatticeSpec{1.0, 5, "cubic"};
        c.pulses = {pulse_spec("drive", 0.0, 2.0, 4.0), pulse_spec("detection", 0.0, 2.0, 4.0)};
        c.run.order = 1;
        c.run.vmi = true;
    } else if (name == "scaling") {
        // N molecules on a line; phases and coupling pinned so that every ordered
        // pair contributes the same amount
        c.molecules = {two_level_spec("m", 1.0, 0.1, Vec3::Zero())};
        c.geometry.lattice = LatticeSpec{1.0, 2, "line"};
        c.pulses = {pulse_spec("drive", 0.0, 1.0, 3.0), pulse_spec("detection", 0.0, 1.0, 3.0)};
        c.run.order = 1;
        c.run.vmi = true;
        c.run.diagnostics.unit_phases = true;
        c.run.diagnostics.coupling_override = tensor_C(Vec3(0, 0, 1)).matrix;
    } else {
        throw ConfigError({"unknown preset '" + name + "'"});
    }
    return c;
}

} // namespace vmisim
