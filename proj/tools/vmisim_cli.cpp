// vmisim command line: respond, signal, diagrams, preset, validate.
// Exit codes: 0 success, 2 configuration or model error, 3 numerical failure.

#include "vmisim/vmisim.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace vmisim;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError({"cannot read config '" + path + "'"});
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

RunConfig load(const std::string& config, const std::string& preset_name, bool require_signal = true) {
    if (!config.empty() && !preset_name.empty()) throw ConfigError({"give either --config or --preset"});
    if (!preset_name.empty()) return preset(preset_name);
    if (config.empty()) throw ConfigError({"--config or --preset is required"});
    return parse_config(read_file(config), require_signal);
}

void write_out(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    write_text(resolve_output(path), text);
}

std::vector<int> split_ints(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    for (std::string tok; std::getline(ss, tok, ',');) {
        std::size_t used = 0;
        int v = 0;
        try {
            v = std::stoi(tok, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != tok.size()) throw ConfigError({"bad index '" + tok + "' in '" + s + "'"});
        out.push_back(v);
    }
    return out;
}

struct RespondOpts {
    std::string config, preset, molecule, kind = "alpha", indices = "2,2", output;
    std::vector<double> args;
    bool time = false;
};

int run_respond(const RespondOpts& o) {
    const RunConfig cfg = load(o.config, o.preset, false);
    const auto mols = build_molecules(cfg);
    const MolecularModel* m = &mols.front();
    if (!o.molecule.empty()) {
        m = nullptr;
        for (const auto& x : mols)
            if (x.id == o.molecule) m = &x;
        if (!m) throw ConfigError({"no molecule '" + o.molecule + "' in config"});
    }
    m->validate();
    const SuperOpSpace space(*m);
    const auto r = evaluate_response(space, response_kind_from_string(o.kind), split_ints(o.indices), o.args, !o.time);
    std::string out = "kind,indices";
    for (std::size_t i = 0; i < r.arguments.size(); ++i) out += ",arg" + std::to_string(i + 1);
    out += ",re,im\n";
    out += std::string(to_string(r.kind)) + ",";
    for (std::size_t i = 0; i < r.indices.size(); ++i) out += (i ? ";" : "") + std::to_string(r.indices[i]);
    for (double a : r.arguments) out += "," + format_double(a);
    out += "," + format_double(r.value.real()) + "," + format_double(r.value.imag()) + "\n";
    write_out(o.output, out);
    return 0;
}

struct SignalOpts {
    std::string config, preset, domain, output;
    std::optional<int> order;
    std::optional<bool> vmi;
    std::vector<std::string> scan;
    bool breakdown = false, rwa = false;
};

int run_signal(const SignalOpts& o) {
    RunConfig cfg = load(o.config, o.preset);
    if (o.order) cfg.run.order = *o.order;
    if (!o.domain.empty()) cfg.run.domain = o.domain;
    if (o.vmi) cfg.run.vmi = *o.vmi;
    if (!o.scan.empty()) {
        cfg.run.scan.clear();
        for (const auto& s : o.scan) cfg.run.scan.push_back(parse_scan_flag(s));
    }
    if (o.breakdown) cfg.run.breakdown = true;
    if (o.rwa) cfg.run.diagnostics.rwa = true;
    if (!o.output.empty()) cfg.run.output = o.output;
    // overrides go through the same validation as a config file
    cfg = parse_config(serialize_config(cfg));
    const SignalGrid g = compute_signal(to_scenario(cfg));
    if (cfg.run.output.empty() || cfg.run.output == "-") std::cout << grid_csv(g, cfg.run.breakdown);
    else emit_grid(g, cfg.run.output, cfg.run.breakdown);
    return 0;
}

struct DiagramOpts {
    int order = 2;
    bool permutations = false, classify = false;
    std::string only = "all", output;
};

int run_diagrams(const DiagramOpts& o) {
    using nlohmann::ordered_json;
    ordered_json list = ordered_json::array();
    for (const auto& d : enumerate_2vmi(o.order, o.permutations, diagram_filter_from_string(o.only))) {
        ordered_json j;
        j["label"] = d.label();
        j["order"] = d.order;
        j["permutation"] = d.permutation;
        std::string assign;
        for (char c : d.assignment) assign += c;
        j["assignment"] = assign;
        j["vacuum_slot_a"] = d.vacuum_slot_a;
        if (o.classify) j["class"] = to_string(d.classification);
        ordered_json phases = ordered_json::array();
        for (const auto& p : d.phase_spec)
            phases.push_back({{"field", p.field}, {"sign", p.sign}, {"molecule", std::string(1, p.molecule)}});
        j["phases"] = phases;
        list.push_back(j);
    }
    write_out(o.output, list.dump(2) + "\n");
    return 0;
}

int run_preset(const std::string& name, const std::string& output) {
    if (name.empty()) {
        std::string out;
        for (const auto& n : preset_names()) out += n + "\n";
        write_out(output, out);
        return 0;
    }
    write_out(output, serialize_config(preset(name)));
    return 0;
}

int run_validate(const std::string& config) {
    const RunConfig cfg = parse_config(read_file(config));
    std::cout << "ok: " << cfg.molecules.size() << " molecule(s), " << cfg.pulses.size() << " pulse(s), digest "
              << scenario_digest(to_scenario(cfg)) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Vacuum-mediated interaction signals for molecular ensembles"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kSoftwareVersion);

    RespondOpts ro;
    auto* respond = app.add_subcommand("respond", "Evaluate one response function of a molecule");
    respond->add_option("--config", ro.config, "Config file");
    respond->add_option("--preset", ro.preset, "Preset name");
    respond->add_option("--molecule", ro.molecule, "Molecule id (default: first)");
    respond->add_option("--kind", ro.kind, "alpha, beta_bar, beta_ordered, gamma_bar or gamma_ordered");
    respond->add_option("--indices", ro.indices, "Cartesian indices, comma separated");
    respond->add_option("--args", ro.args, "Frequencies, or times with --time")->required()->delimiter(',');
    respond->add_flag("--time", ro.time, "Arguments are times");
    respond->add_option("--output", ro.output, "Output CSV (default stdout)");

    SignalOpts so;
    auto* signal = app.add_subcommand("signal", "Compute a signal over a scan grid");
    signal->add_option("--config", so.config, "Config file");
    signal->add_option("--preset", so.preset, "Preset name");
    signal->add_option("--order", so.order, "Signal order")->check(CLI::Range(1, 3));
    signal->add_option("--domain", so.domain, "time or freq")->check(CLI::IsMember({"time", "freq"}));
    signal->add_flag("--vmi,!--no-vmi", so.vmi, "Vacuum-mediated signal instead of the baseline");
    signal->add_option("--scan", so.scan, "<axis>=<start>:<stop>:<steps>, repeatable");
    signal->add_flag("--breakdown", so.breakdown, "Per-term columns");
    signal->add_flag("--rwa", so.rwa, "Keep only the resonant conjugation branch (diagnostic)");
    signal->add_option("--output", so.output, "Output CSV");

    DiagramOpts dgo;
    auto* diagrams = app.add_subcommand("diagrams", "List vacuum-mediated diagrams");
    diagrams->add_option("--order", dgo.order, "Order 1 to 3")->check(CLI::Range(1, 3));
    diagrams->add_flag("--permutations", dgo.permutations, "Include every chronological field order");
    diagrams->add_flag("--classify", dgo.classify, "Attach the diagram class");
    diagrams->add_option("--only", dgo.only, "all, local_field, cascading or equal_order_cascading");
    diagrams->add_option("--output", dgo.output, "Output JSON (default stdout)");

    std::string preset_name, preset_out;
    auto* pre = app.add_subcommand("preset", "Print a preset config, or list presets");
    pre->add_option("name", preset_name, "Preset name");
    pre->add_option("--output", preset_out, "Output file (default stdout)");

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "Check a config file");
    validate->add_option("config", validate_path, "Config file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (*respond) return run_respond(ro);
        if (*signal) return run_signal(so);
        if (*diagrams) return run_diagrams(dgo);
        if (*pre) return run_preset(preset_name, preset_out);
        if (*validate) return run_validate(validate_path);
    } catch (const ConfigError& e) {
        std::cerr << "config error:\n";
        for (const auto& p : e.problems()) std::cerr << "  " << p << "\n";
        return kExitConfig;
    } catch (const ModelError& e) {
        std::cerr << "model error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return 0;
}
