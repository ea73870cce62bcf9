// m3dram: derive DRAM organization parameters, calibrate the models, sweep the
// design space and run the close-page controller simulator.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <variant>

#include "CLI11.hpp"
#include "json.hpp"
#include "m3dram/error.hpp"
#include "m3dram/pipeline.hpp"
#include "m3dram/simcore.hpp"
#include "m3dram/traceio.hpp"

#ifndef M3DRAM_DATA_DIR
#define M3DRAM_DATA_DIR "data"
#endif

using namespace m3dram;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kCalibration = 3 };

// ---- tabular output ------------------------------------------------------------

using Cell = std::variant<std::string, double, long long>;

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<Cell>> rows;
};

std::string fmt_cell(const Cell& c, bool csv) {
    if (auto s = std::get_if<std::string>(&c)) {
        if (csv && s->find_first_of(",\"") != std::string::npos) {
            std::string q = "\"";
            for (char ch : *s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
            return q + "\"";
        }
        return *s;
    }
    if (auto i = std::get_if<long long>(&c)) return std::to_string(*i);
    char buf[32];
    std::snprintf(buf, sizeof buf, csv ? "%.10g" : "%.6g", std::get<double>(c));
    return buf;
}

void write_table(std::ostream& os, const Table& t, const std::string& format) {
    if (format == "csv") {
        for (std::size_t i = 0; i < t.header.size(); ++i) os << (i ? "," : "") << t.header[i];
        os << '\n';
        for (const auto& r : t.rows) {
            for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << fmt_cell(r[i], true);
            os << '\n';
        }
    } else if (format == "json") {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& r : t.rows) {
            nlohmann::ordered_json o;
            for (std::size_t i = 0; i < r.size(); ++i)
                std::visit([&](const auto& v) { o[t.header[i]] = v; }, r[i]);
            arr.push_back(o);
        }
        os << arr.dump(2) << '\n';
    } else {
        std::vector<std::size_t> w(t.header.size());
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = t.header[i].size();
        for (const auto& r : t.rows)
            for (std::size_t i = 0; i < r.size(); ++i) w[i] = std::max(w[i], fmt_cell(r[i], false).size());
        auto line = [&](auto&& get) {
            for (std::size_t i = 0; i < w.size(); ++i) {
                const std::string s = get(i);
                if (i == 0) os << std::left << std::setw(int(w[i])) << s;
                else os << "  " << std::right << std::setw(int(w[i])) << s;
            }
            os << '\n';
        };
        line([&](std::size_t i) { return t.header[i]; });
        for (const auto& r : t.rows) line([&](std::size_t i) { return fmt_cell(r[i], false); });
    }
}

// ---- shared options ------------------------------------------------------------

struct Common {
    std::string calibration = std::string(M3DRAM_DATA_DIR) + "/calibration.json";
    std::string format = "text";
    std::string out;
    double vdd = 0;
    double feature_nm = 0;
    double step_ps = 0;
    int segments = 0;
};

ModelSet load_model_set(const Common& c) {
    ModelSet m = std::filesystem::exists(c.calibration) ? load_models(c.calibration) : default_models();
    if (c.vdd > 0) m.tech.vdd = c.vdd;
    if (c.feature_nm > 0) m.tech.feature_size_nm = c.feature_nm;
    if (c.step_ps > 0) m.solver.step = c.step_ps * 1e-12;
    if (c.segments > 0) m.solver.segments = c.segments;
    m.tech.validate();
    m.solver.validate();
    return m;
}

std::vector<OrgSpec> resolve_orgs(const std::vector<std::string>& names) {
    std::vector<OrgSpec> out;
    for (const auto& n : names) out.push_back(org_by_name(n));
    return out;
}

template <class F>
void emit(const Common& c, F&& body) {
    if (c.out.empty()) {
        body(std::cout);
        return;
    }
    std::ofstream f(c.out);
    if (!f) throw InvalidConfig("cannot write " + c.out);
    body(f);
}

std::vector<OrgReport> derive_all(const std::vector<OrgSpec>& orgs, const ModelSet& m) {
    std::vector<std::future<OrgReport>> jobs;
    for (const auto& o : orgs) jobs.push_back(std::async(std::launch::async, derive_org, o, m));
    std::vector<OrgReport> out;
    for (auto& j : jobs) out.push_back(j.get());
    return out;
}

// ---- params --------------------------------------------------------------------

void cmd_params(const Common& c, const std::vector<std::string>& names, const std::string& waveform_prefix) {
    ModelSet m = load_model_set(c);
    m.solver.record_waveform = !waveform_prefix.empty();
    const auto reps = derive_all(resolve_orgs(names), m);
    for (const auto& r : reps) {
        if (waveform_prefix.empty()) break;
        const std::string path = waveform_prefix + "." + r.spec.name + ".csv";
        std::ofstream f(path);
        if (!f) throw InvalidConfig("cannot write " + path);
        circuit::write_waveform_csv(f, r.transient.waveform);
    }

    Table t;
    t.header = {"quantity", "unit"};
    for (const auto& r : reps) t.header.push_back(r.spec.name);
    auto row = [&](const char* q, const char* unit, auto get) {
        std::vector<Cell> cells{std::string(q), std::string(unit)};
        for (const auto& r : reps) cells.push_back(get(r));
        t.rows.push_back(std::move(cells));
    };
    auto ns = [](double s) { return s * 1e9; };
    auto nj = [](double j) { return j * 1e9; };
    row("banks", "", [](const OrgReport& r) { return Cell(static_cast<long long>(r.spec.banks)); });
    row("page_size", "bit", [](const OrgReport& r) { return Cell(static_cast<long long>(r.spec.page_size_bits)); });
    row("cells_per_bitline", "", [](const OrgReport& r) { return Cell(static_cast<long long>(r.spec.cells_per_local_bitline)); });
    row("t_rcd", "ns", [&](const OrgReport& r) { return Cell(ns(r.timing.t_rcd)); });
    row("t_cas", "ns", [&](const OrgReport& r) { return Cell(ns(r.timing.t_cas)); });
    row("t_rp", "ns", [&](const OrgReport& r) { return Cell(ns(r.timing.t_rp)); });
    row("t_ras", "ns", [&](const OrgReport& r) { return Cell(ns(r.timing.t_ras)); });
    row("t_rc", "ns", [&](const OrgReport& r) { return Cell(ns(r.timing.t_rc)); });
    row("t_faw", "ns", [&](const OrgReport& r) { return Cell(ns(r.timing.t_faw)); });
    row("t_refi", "ns", [&](const OrgReport& r) { return Cell(ns(r.timing.t_refi)); });
    row("t_burst", "ns", [&](const OrgReport& r) { return Cell(ns(r.timing.t_burst)); });
    row("close_page_latency", "ns", [&](const OrgReport& r) { return Cell(ns(r.timing.close_page_latency)); });
    row("charge_share_delta", "V", [](const OrgReport& r) { return Cell(r.transient.delta_v); });
    row("e_activate", "nJ", [&](const OrgReport& r) { return Cell(nj(r.energy.e_activate)); });
    row("e_read", "nJ", [&](const OrgReport& r) { return Cell(nj(r.energy.e_read)); });
    row("e_write", "nJ", [&](const OrgReport& r) { return Cell(nj(r.energy.e_write)); });
    row("e_refresh", "nJ", [&](const OrgReport& r) { return Cell(nj(r.energy.e_refresh)); });
    row("subarray_area", "mm2", [](const OrgReport& r) { return Cell(r.geo.subarray_area_mm2); });
    row("bank_area", "mm2", [](const OrgReport& r) { return Cell(r.geo.bank_area_mm2); });
    row("die_area", "mm2", [](const OrgReport& r) { return Cell(r.geo.die_area_mm2); });
    row("mivs_per_bank", "", [](const OrgReport& r) { return Cell(static_cast<long long>(r.geo.miv_count_per_bank)); });
    row("miv_area_per_bank", "mm2", [](const OrgReport& r) { return Cell(r.geo.miv_area_per_bank_mm2); });
    row("subarray_height", "F", [](const OrgReport& r) { return Cell(static_cast<long long>(r.geo.subarray_height)); });
    row("local_bitline_length", "F", [](const OrgReport& r) { return Cell(static_cast<long long>(r.geo.local_bitline_length)); });
    row("global_bitline_length", "F", [](const OrgReport& r) { return Cell(static_cast<long long>(r.geo.global_bitline_length)); });
    row("local_bitline_resistance", "ohm", [](const OrgReport& r) { return Cell(r.bl.r_local_bitline); });
    row("local_bitline_capacitance", "fF", [](const OrgReport& r) { return Cell(r.bl.c_local_bitline * 1e15); });
    row("cell_density", "cells/mm2", [](const OrgReport& r) { return Cell(r.geo.cell_density_per_mm2); });
    emit(c, [&](std::ostream& os) { write_table(os, t, c.format); });
}

// ---- calibrate -----------------------------------------------------------------

void cmd_calibrate(const Common& c, const std::string& reference, const std::string& model_out,
                   const std::vector<std::string>& holdout) {
    ModelSet start = default_models();
    if (c.vdd > 0) start.tech.vdd = c.vdd;
    if (c.feature_nm > 0) start.tech.feature_size_nm = c.feature_nm;
    if (c.step_ps > 0) start.solver.step = c.step_ps * 1e-12;
    if (c.segments > 0) start.solver.segments = c.segments;
    const auto ref = load_reference(reference);
    CalibrateOptions opts;
    opts.holdout = holdout;
    const auto rep = calibrate(ref, start, opts);
    save_models(model_out, rep.models, rep.rows);

    Table t;
    t.header = {"org", "quantity", "model", "target", "rel_error_pct", "role"};
    for (const auto& r : rep.rows)
        t.rows.push_back({r.org, r.quantity, r.model, r.target, r.relative_error() * 100,
                          std::string(r.fitted ? "fit" : "predicted")});
    emit(c, [&](std::ostream& os) { write_table(os, t, c.format); });
    std::cerr << "wrote " << model_out << " (" << rep.circuit_evaluations << " circuit evaluations"
              << (rep.circuit_underdetermined ? ", circuit fit underdetermined" : "") << ")\n";
}

// ---- sweep ---------------------------------------------------------------------

void cmd_sweep(const Common& c) {
    const ModelSet m = load_model_set(c);
    const auto reps = derive_all(builtin_orgs(), m);
    const OrgReport* base = nullptr;
    for (const auto& r : reps)
        if (r.spec.name == "ddr4-512") base = &r;
    Table t;
    t.header = {"org", "cells_per_bitline", "m3d", "die_area_mm2", "die_area_norm", "t_rcd_ns", "t_cas_ns",
                "close_page_latency_ns"};
    for (const auto& r : reps)
        t.rows.push_back({r.spec.name, static_cast<long long>(r.spec.cells_per_local_bitline),
                          static_cast<long long>(r.spec.is_m3d), r.geo.die_area_mm2,
                          r.geo.die_area_mm2 / base->geo.die_area_mm2, r.timing.t_rcd * 1e9,
                          r.timing.t_cas * 1e9, r.timing.close_page_latency * 1e9});
    emit(c, [&](std::ostream& os) { write_table(os, t, c.format); });
}

// ---- simulate ------------------------------------------------------------------

struct SimOptions {
    std::vector<std::string> orgs{"ddr4-512", "m3d-512", "m3d-128"};
    std::string trace_path;
    std::string kind = "uniform";
    std::size_t requests = 100000;
    std::uint64_t seed = 1;
    double mean_gap = 10.0;
    std::string params = "reference";
    std::string reference = std::string(M3DRAM_DATA_DIR) + "/table1.ref";
    double p_background = -1;
    bool no_refresh = false;
    double min_duration_ns = 0;
    std::string dump_commands;
};

std::pair<TimingParams, EnergyParams> org_params(const OrgSpec& spec, const ModelSet& m,
                                                 const std::string& source, const std::string& reference,
                                                 double p_background) {
    if (source == "model") {
        auto r = derive_org(spec, m);
        r.energy.p_background = p_background;
        return {r.timing, r.energy};
    }
    const auto ref = load_reference(reference);
    const auto* row = ref.find(spec.name);
    if (!row) throw InvalidConfig(spec.name + " has no row in " + reference + "; use --params model");
    return reference_params(*row, m.constants, p_background);
}

void cmd_simulate(const Common& c, const SimOptions& o) {
    const ModelSet m = load_model_set(c);
    const double p_bg = o.p_background >= 0 ? o.p_background : m.energy.p_background;
    const auto orgs = resolve_orgs(o.orgs);

    std::vector<sim::MemRequest> tr;
    if (!o.trace_path.empty()) {
        tr = trace::read_trace_file(o.trace_path);
    } else {
        trace::GeneratorConfig g;
        g.mean_interarrival_cycles = o.mean_gap;
        tr = trace::generate_trace(trace::parse_kind(o.kind), o.requests, o.seed, orgs.front(), g);
    }

    sim::SimConfig cfg;
    cfg.refresh = !o.no_refresh;
    cfg.rows_refreshed_per_ref = m.energy.rows_refreshed_per_ref;
    cfg.min_duration = sim::Ps(std::llround(o.min_duration_ns * 1e3));
    cfg.record_commands = !o.dump_commands.empty();

    Table t;
    t.header = {"org", "requests", "reads", "writes", "activates", "precharges", "refreshes",
                "avg_latency_ns", "max_latency_ns", "throughput_gbps", "wall_time_ns", "p_background_w",
                "p_activate_w", "p_burst_w", "p_refresh_w", "p_total_w", "edp_pj_ns_per_bit"};
    for (const auto& spec : orgs) {
        const auto [timing, energy] = org_params(spec, m, o.params, o.reference, p_bg);
        const auto r = sim::run_simulation(tr, spec, timing, energy, cfg);
        const auto& s = r.stats;
        t.rows.push_back({spec.name, static_cast<long long>(tr.size()), static_cast<long long>(s.n_reads),
                          static_cast<long long>(s.n_writes), static_cast<long long>(s.n_activates),
                          static_cast<long long>(s.n_precharges), static_cast<long long>(s.n_refreshes),
                          s.avg_access_latency_ns, double(s.max_latency) / 1e3, s.throughput_bits_per_s / 1e9,
                          s.wall_time_ns, r.power.p_background, r.power.p_activate, r.power.p_burst,
                          r.power.p_refresh, r.power.p_total,
                          r.edp ? edp_pj_ns_per_bit(*r.edp) : 0.0});
        if (cfg.record_commands) {
            const std::string path = o.dump_commands + "." + spec.name + ".csv";
            std::ofstream f(path);
            if (!f) throw InvalidConfig("cannot write " + path);
            sim::write_command_log(f, r.commands);
        }
    }
    emit(c, [&](std::ostream& os) { write_table(os, t, c.format); });
}

// ---- gen-trace / validate-log ----------------------------------------------------

void cmd_gen_trace(const SimOptions& o, const std::string& out) {
    trace::GeneratorConfig g;
    g.mean_interarrival_cycles = o.mean_gap;
    const auto tr = trace::generate_trace(trace::parse_kind(o.kind), o.requests, o.seed,
                                          org_by_name(o.orgs.front()), g);
    if (out.empty() || out == "-") trace::serialize_trace(std::cout, tr);
    else trace::write_trace_file(out, tr);
}

int cmd_validate_log(const Common& c, const SimOptions& o, const std::string& log_path) {
    const ModelSet m = load_model_set(c);
    const auto spec = org_by_name(o.orgs.front());
    const auto [timing, energy] = org_params(spec, m, o.params, o.reference, 0);
    std::ifstream f(log_path);
    if (!f) throw InvalidConfig("cannot open " + log_path);
    const auto log = sim::read_command_log(f, log_path);
    const auto tp = sim::TimingPs::from(timing);
    const auto v = sim::validate_command_log(log, tp, spec.banks, m.energy.rows_refreshed_per_ref);
    std::cout << log_path << ": " << log.size() << " commands, " << v.size() << " violations, max "
              << sim::max_acts_in_window(log, tp.t_faw) << " ACTs per tFAW window\n";
    for (std::size_t i = 0; i < std::min<std::size_t>(v.size(), 20); ++i)
        std::cout << "  #" << v[i].index << " " << v[i].rule << ": " << v[i].detail << '\n';
    return v.empty() ? kOk : kData;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DRAM organization modeling and close-page simulation"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "INI/TOML config file; command-line flags take precedence");
    Common c;
    app.add_option("--calibration", c.calibration, "Fitted model constants (JSON)")->capture_default_str();
    app.add_option("--format", c.format, "Output format")
        ->check(CLI::IsMember({"text", "csv", "json"}))
        ->capture_default_str();
    app.add_option("-o,--out", c.out, "Write the report here instead of stdout");
    app.add_option("--vdd", c.vdd, "Override supply voltage (V)");
    app.add_option("--feature-size", c.feature_nm, "Override feature size F (nm)");
    app.add_option("--step-ps", c.step_ps, "Override solver output step (ps, <= 10)");
    app.add_option("--segments", c.segments, "Override bitline ladder segments");

    std::vector<std::string> orgs{"ddr4-512", "m3d-512", "m3d-128"};
    auto* params = app.add_subcommand("params", "Per-organization geometry, timing and energy report");
    params->add_option("--org", orgs, "Organization(s), e.g. ddr4-512 m3d-128")->capture_default_str();
    std::string waveform_prefix;
    params->add_option("--waveform", waveform_prefix, "Write <prefix>.<org>.csv bitline/cell transients");

    std::string reference = std::string(M3DRAM_DATA_DIR) + "/table1.ref";
    std::string model_out = "calibration.json";
    std::vector<std::string> holdout;
    auto* cal = app.add_subcommand("calibrate", "Fit circuit, tCAS and energy constants to a reference table");
    cal->add_option("--reference", reference, "Reference table (INI)")->capture_default_str();
    cal->add_option("--model-out", model_out, "Where to write the fitted constants")->capture_default_str();
    cal->add_option("--holdout", holdout, "Exclude organization(s) from the fit and report predictions");

    auto* sweep = app.add_subcommand("sweep", "Area/latency sweep over all 2D and M3D organizations");

    SimOptions so;
    auto add_gen = [&](CLI::App* sc) {
        sc->add_option("--kind", so.kind, "Generator kind")
            ->check(CLI::IsMember({"uniform", "stream", "conflict", "mixed"}))
            ->capture_default_str();
        sc->add_option("-n,--requests", so.requests, "Generated requests")->capture_default_str();
        sc->add_option("--seed", so.seed, "Generator seed")->capture_default_str();
        sc->add_option("--mean-gap", so.mean_gap, "Mean inter-arrival time (cycles)")->capture_default_str();
    };
    auto add_params_source = [&](CLI::App* sc) {
        sc->add_option("--params", so.params, "Timing/energy source")
            ->check(CLI::IsMember({"reference", "model"}))
            ->capture_default_str();
        sc->add_option("--reference", so.reference, "Reference table for --params reference")->capture_default_str();
    };
    auto* simulate = app.add_subcommand("simulate", "Replay one trace on each organization");
    simulate->add_option("--org", so.orgs, "Organization(s)")->capture_default_str();
    simulate->add_option("--trace", so.trace_path, "Trace file (plain or gzip); default: generate");
    add_gen(simulate);
    add_params_source(simulate);
    simulate->add_option("--p-background", so.p_background, "Background power (W)");
    simulate->add_flag("--no-refresh", so.no_refresh, "Disable refresh");
    simulate->add_option("--min-duration-ns", so.min_duration_ns, "Simulate at least this long");
    simulate->add_option("--dump-commands", so.dump_commands, "Write <prefix>.<org>.csv command logs");

    std::string trace_out;
    auto* gen = app.add_subcommand("gen-trace", "Write a synthetic trace");
    add_gen(gen);
    gen->add_option("--org", so.orgs, "Organization used for address mapping")->capture_default_str();
    gen->add_option("--trace-out", trace_out, "Output path ('-' for stdout)");

    std::string log_path;
    auto* vlog = app.add_subcommand("validate-log", "Check a command log against every timing rule");
    vlog->add_option("--log", log_path, "Command log CSV")->required();
    vlog->add_option("--org", so.orgs, "Organization the log was produced for")->expected(1);
    add_params_source(vlog);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (params->parsed()) cmd_params(c, orgs, waveform_prefix);
        else if (cal->parsed()) cmd_calibrate(c, reference, model_out, holdout);
        else if (sweep->parsed()) cmd_sweep(c);
        else if (simulate->parsed()) cmd_simulate(c, so);
        else if (gen->parsed()) cmd_gen_trace(so, trace_out);
        else if (vlog->parsed()) return cmd_validate_log(c, so, log_path);
    } catch (const CalibrationFailure& e) {
        std::cerr << "calibration failed: " << e.what() << "\n  worst: " << e.worst_row() << '\n';
        return kCalibration;
    } catch (const Underdetermined& e) {
        std::cerr << "calibration failed: " << e.what() << '\n';
        return kCalibration;
    } catch (const InvalidConfig& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kData;
    }
    return kOk;
}
