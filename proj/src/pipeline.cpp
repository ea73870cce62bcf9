#include "m3dram/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "m3dram/error.hpp"

namespace m3dram {

OrgSpec org_by_name(const std::string& name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    for (const auto& spec : builtin_orgs())
        if (spec.name == lower) return spec;
    std::string known;
    for (const auto& spec : builtin_orgs()) known += (known.empty() ? "" : ", ") + spec.name;
    throw InvalidConfig("unknown organization '" + name + "'; known: " + known);
}

// ---- reference table ---------------------------------------------------------

namespace {

const std::set<std::string>& known_reference_keys() {
    static const std::set<std::string> keys = {
        "t_rcd_ns", "t_cas_ns", "t_rp_ns", "t_rc_ns", "t_faw_ns", "t_refi_ns",
        "e_activate_nj", "e_read_nj", "e_write_nj", "e_refresh_nj",
        "subarray_area_mm2", "bank_area_mm2", "miv_count", "miv_area_mm2",
        "subarray_height_F", "local_bitline_length_F", "global_bitline_length_F",
        "local_bitline_r_ohm", "local_bitline_c_ff"};
    return keys;
}

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

// Line of `key` inside `[section]` (or of the section header when key is empty).
std::size_t locate(const std::string& path, const std::string& section, const std::string& key) {
    std::ifstream f(path);
    std::string line, current;
    for (std::size_t n = 1; std::getline(f, line); ++n) {
        const std::string t = trim(line);
        if (t.size() > 2 && t.front() == '[' && t.back() == ']') {
            current = trim(t.substr(1, t.size() - 2));
            if (key.empty() && current == section) return n;
            continue;
        }
        if (current != section || key.empty()) continue;
        const auto eq = t.find('=');
        if (eq != std::string::npos && trim(t.substr(0, eq)) == key) return n;
    }
    return 0;
}

}  // namespace

std::optional<double> ReferenceRow::get(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end()) return std::nullopt;
    return it->second;
}

std::optional<double> ReferenceRow::si(const std::string& key) const {
    auto v = get(key);
    if (!v) return v;
    auto ends_with = [&](const char* suf) {
        const std::string s(suf);
        return key.size() >= s.size() && key.compare(key.size() - s.size(), s.size(), s) == 0;
    };
    if (ends_with("_ns")) return *v * 1e-9;
    if (ends_with("_nj")) return *v * 1e-9;
    if (ends_with("_ff")) return *v * 1e-15;
    return v;
}

const ReferenceRow* ReferenceTable::find(const std::string& org) const {
    for (const auto& r : rows)
        if (r.spec.name == org) return &r;
    return nullptr;
}

ReferenceTable load_reference(const std::string& path) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::ini_parser::read_ini(path, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ParseError(path, e.line(), e.message());
    }
    ReferenceTable table;
    table.source = path;
    for (const auto& [section, body] : tree) {
        if (body.empty()) throw ParseError(path, locate(path, section, section), "value outside any [organization] section");
        ReferenceRow row;
        try {
            row.spec = org_by_name(section);
        } catch (const InvalidConfig& e) {
            throw ParseError(path, locate(path, section, ""), e.what());
        }
        for (const auto& [key, val] : body) {
            if (!known_reference_keys().count(key))
                throw ParseError(path, locate(path, section, key), "unknown key '" + key + "'");
            const std::string text = trim(val.data());
            double x = 0;
            auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), x);
            if (ec != std::errc() || p != text.data() + text.size() || !(x >= 0))
                throw ParseError(path, locate(path, section, key),
                                 "'" + key + "' is not a non-negative number: '" + text + "'");
            row.values[key] = x;
        }
        table.rows.push_back(std::move(row));
    }
    if (table.rows.empty()) throw ParseError(path, 0, "no organizations defined");
    return table;
}

// ---- model pipeline ----------------------------------------------------------

ModelSet default_models() {
    ModelSet m;
    m.tcas.fixed_delay = 3.09100807e-9;
    m.tcas.per_F_delay = 4.52547101e-14;
    return m;
}

OrgReport derive_org(const OrgSpec& spec, const ModelSet& models) {
    spec.validate();
    OrgReport r;
    r.spec = spec;
    r.geo = compute_areas(spec, models.dims, models.tech);
    r.bl = circuit::BitlineElectricals::derive(spec, models.r_per_cell, models.c_per_cell);
    r.transient = circuit::simulate(models.cell, r.bl, models.sa, models.tech, models.solver);
    r.energy = derive_energy(models.energy, spec, r.geo, r.bl, models.tech);

    TimingConstants k = models.constants;
    const OrgSpec base = org_by_name(models.tfaw_baseline);
    k.base_act_energy = model_activation_energy(
        models.energy, base, circuit::BitlineElectricals::derive(base, models.r_per_cell, models.c_per_cell),
        models.tech);
    r.timing = assemble_timing(spec, r.geo, r.transient, models.tcas, r.energy, k);
    return r;
}

std::pair<TimingParams, EnergyParams> reference_params(const ReferenceRow& row,
                                                       const TimingConstants& constants,
                                                       double p_background) {
    auto need = [&](const char* key) {
        auto v = row.si(key);
        if (!v) throw InvalidConfig(row.spec.name + ": reference row lacks " + key);
        return *v;
    };
    TimingParams t;
    t.t_rcd = need("t_rcd_ns");
    t.t_cas = need("t_cas_ns");
    t.t_rp = need("t_rp_ns");
    t.t_rc = need("t_rc_ns");
    t.t_ras = t.t_rc - t.t_rp;
    t.t_rc = t.t_ras + t.t_rp;
    t.t_faw = need("t_faw_ns");
    t.t_refi = row.si("t_refi_ns").value_or(constants.t_refi);
    t.t_burst = constants.t_burst;
    t.close_page_latency = t.t_rcd + t.t_cas + t.t_burst;
    t.validate();

    EnergyParams e;
    e.e_activate = need("e_activate_nj");
    e.e_read = need("e_read_nj");
    e.e_write = row.si("e_write_nj").value_or(e.e_read);
    e.e_refresh = need("e_refresh_nj");
    e.p_background = p_background;
    e.spec_fingerprint = row.spec.fingerprint();
    return {t, e};
}

// ---- calibration -------------------------------------------------------------

CalibrationReport calibrate(const ReferenceTable& ref, const ModelSet& start,
                            const CalibrateOptions& opts) {
    auto held_out = [&](const std::string& org) {
        return std::find(opts.holdout.begin(), opts.holdout.end(), org) != opts.holdout.end();
    };
    for (const auto& h : opts.holdout)
        if (!ref.find(h)) throw InvalidConfig("held-out organization '" + h + "' is not in " + ref.source);

    CalibrationReport out;
    out.models = start;
    ModelSet& m = out.models;
    std::set<std::pair<std::string, std::string>> fitted;  // (org, quantity)

    std::vector<circuit::CircuitTarget> targets;
    std::vector<std::pair<double, double>> tcas_points;
    std::vector<ActivationSample> act;
    std::vector<ReadSample> read;
    std::vector<RefreshSample> refresh;

    for (const auto& row : ref.rows) {
        if (held_out(row.spec.name)) continue;
        const auto& name = row.spec.name;
        const auto bl = circuit::BitlineElectricals::derive(row.spec, m.r_per_cell, m.c_per_cell);
        const auto rcd = row.si("t_rcd_ns"), rp = row.si("t_rp_ns"), rc = row.si("t_rc_ns");
        if (rcd && rp && rc) {
            targets.push_back({row.spec, *rcd, *rp, *rc - *rp});
            for (const char* q : {"t_rcd", "t_rp", "t_rc"}) fitted.insert({name, q});
        }
        if (auto cas = row.si("t_cas_ns")) {
            tcas_points.emplace_back(double(derive_global_bitline_length(row.spec, m.dims)), *cas);
            fitted.insert({name, "t_cas"});
        }
        if (auto e = row.si("e_activate_nj")) {
            act.push_back({row.spec, bl.c_local_bitline, *e});
            fitted.insert({name, "e_activate"});
        }
        if (auto e = row.si("e_read_nj")) {
            read.push_back({name, double(derive_global_bitline_length(row.spec, m.dims)), *e});
            fitted.insert({name, "e_read"});
        }
        if (auto e = row.si("e_refresh_nj")) {
            refresh.push_back({row.spec, bl.c_local_bitline, *e});
            fitted.insert({name, "e_refresh"});
        }
    }

    circuit::CalibrationOptions copts;
    copts.tolerance = opts.timing_tolerance;
    const auto cc = circuit::calibrate_circuit(targets, m.cell, m.sa, m.tech, m.solver, copts);
    m.cell = cc.cell;
    m.sa = cc.sa;
    out.circuit_underdetermined = cc.underdetermined;
    out.circuit_evaluations = cc.evaluations;

    m.tcas = fit_tcas_model(tcas_points);
    fit_energy_model(m.energy, m.tech, act, read, refresh, opts.energy_tolerance);

    // Residual table over every reference row, held-out ones included.
    for (const auto& row : ref.rows) {
        const auto rep = derive_org(row.spec, m);
        const auto& name = row.spec.name;
        auto add = [&](const char* quantity, const char* key, double model) {
            if (auto target = row.si(key))
                out.rows.push_back({name, quantity, model, *target,
                                    !held_out(name) && fitted.count({name, quantity}) > 0});
        };
        add("t_rcd", "t_rcd_ns", rep.timing.t_rcd);
        add("t_cas", "t_cas_ns", rep.timing.t_cas);
        add("t_rp", "t_rp_ns", rep.timing.t_rp);
        add("t_rc", "t_rc_ns", rep.timing.t_rc);
        add("t_faw", "t_faw_ns", rep.timing.t_faw);
        add("e_activate", "e_activate_nj", rep.energy.e_activate);
        add("e_read", "e_read_nj", rep.energy.e_read);
        add("e_write", "e_write_nj", rep.energy.e_write);
        add("e_refresh", "e_refresh_nj", rep.energy.e_refresh);
        add("bank_area", "bank_area_mm2", rep.geo.bank_area_mm2);
    }
    return out;
}

}  // namespace m3dram
