#include <fstream>
#include <iomanip>

#include "json.hpp"
#include "m3dram/error.hpp"
#include "m3dram/pipeline.hpp"

namespace m3dram {

using nlohmann::ordered_json;

namespace {

// Field tables keep save and load in lockstep.
template <class F>
void visit(ModelSet& m, F&& f) {
    f("tech", "feature_size_nm", m.tech.feature_size_nm);
    f("tech", "vdd", m.tech.vdd);
    f("bitline", "r_per_cell_ohm", m.r_per_cell);
    f("bitline", "c_per_cell_f", m.c_per_cell);
    f("cell", "c_cell_f", m.cell.c_cell);
    f("cell", "access_on_resistance_ohm", m.cell.access_on_resistance);
    f("cell", "top_tier_current_derating", m.cell.top_tier_current_derating);
    f("cell", "wordline_voltage", m.cell.wordline_voltage);
    f("cell", "access_threshold_voltage", m.cell.access_threshold_voltage);
    f("sense_amp", "latch_transconductance", m.sa.latch_transconductance);
    f("sense_amp", "threshold_voltage", m.sa.threshold_voltage);
    f("sense_amp", "precharge_equalizer_resistance_ohm", m.sa.precharge_equalizer_resistance);
    f("sense_amp", "intrinsic_enable_delay_s", m.sa.intrinsic_enable_delay);
    f("sense_amp", "enable_ramp_s", m.sa.enable_ramp);
    f("sense_amp", "precharge_enable_delay_s", m.sa.precharge_enable_delay);
    f("sense_amp", "wire_resistance_ohm", m.sa.wire_resistance);
    f("sense_amp", "bottom_tier_wire_factor", m.sa.bottom_tier_wire_factor);
    f("tcas", "fixed_delay_s", m.tcas.fixed_delay);
    f("tcas", "per_F_delay_s", m.tcas.per_F_delay);
    f("tcas", "per_F2_delay_s", m.tcas.per_F2_delay);
    f("energy", "alpha", m.energy.alpha);
    f("energy", "e_act_fixed_j", m.energy.e_act_fixed);
    f("energy", "beta_j_per_F", m.energy.beta);
    f("energy", "e_io_j", m.energy.e_io);
    f("energy", "gamma", m.energy.gamma);
    f("energy", "e_ref_fixed_j", m.energy.e_ref_fixed);
    f("energy", "p_background_w", m.energy.p_background);
    f("timing", "t_burst_s", m.constants.t_burst);
    f("timing", "t_refi_s", m.constants.t_refi);
    f("timing", "base_tfaw_s", m.constants.base_tfaw);
}

}  // namespace

void save_models(const std::string& path, const ModelSet& models,
                 const std::vector<ResidualRow>& residuals) {
    ordered_json j;
    ModelSet m = models;
    visit(m, [&](const char* group, const char* key, double& v) { j[group][key] = v; });
    j["tcas"]["quadratic"] = m.tcas.quadratic;
    j["energy"]["rows_refreshed_per_ref"] = m.energy.rows_refreshed_per_ref;
    j["timing"]["tfaw_baseline"] = m.tfaw_baseline;
    if (!residuals.empty()) {
        auto& arr = j["residuals"] = ordered_json::array();
        for (const auto& r : residuals)
            arr.push_back({{"org", r.org}, {"quantity", r.quantity}, {"model", r.model},
                           {"target", r.target}, {"relative_error", r.relative_error()},
                           {"fitted", r.fitted}});
    }
    std::ofstream f(path);
    if (!f) throw InvalidConfig("cannot write " + path);
    f << std::setprecision(17) << j.dump(2) << '\n';
}

ModelSet load_models(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InvalidConfig("cannot open calibration file " + path);
    ordered_json j;
    try {
        j = ordered_json::parse(f);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path, 0, e.what());
    }
    ModelSet m = default_models();
    try {
        visit(m, [&](const char* group, const char* key, double& v) {
            if (j.contains(group) && j[group].contains(key)) v = j[group][key].get<double>();
        });
        if (j.contains("tcas")) m.tcas.quadratic = j["tcas"].value("quadratic", m.tcas.quadratic);
        if (j.contains("energy"))
            m.energy.rows_refreshed_per_ref = j["energy"].value("rows_refreshed_per_ref", m.energy.rows_refreshed_per_ref);
        if (j.contains("timing")) m.tfaw_baseline = j["timing"].value("tfaw_baseline", m.tfaw_baseline);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path, 0, e.what());
    }
    m.tech.validate();
    m.cell.validate();
    m.sa.validate();
    return m;
}

}  // namespace m3dram
