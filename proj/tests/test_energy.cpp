#include <gtest/gtest.h>

#include "m3dram/energy.hpp"
#include "m3dram/error.hpp"

using namespace m3dram;

namespace {

const TechNode kTech;

struct Fixture {
    std::vector<ActivationSample> act;
    std::vector<ReadSample> read;
    std::vector<RefreshSample> refresh;
    Fixture() {
        const std::tuple<OrgSpec, double, double, double, double, double> rows[] = {
            {OrgSpec::ddr4(512), 72e-15, 162687, 0.59e-9, 1.1e-9, 35.22e-9},
            {OrgSpec::m3d(512), 72.2e-15, 132969, 0.58e-9, 0.94e-9, 32.51e-9},
            {OrgSpec::m3d(128), 18.2e-15, 142569, 0.24e-9, 1.05e-9, 23.23e-9},
        };
        for (const auto& [s, c, l, ea, er, ef] : rows) {
            act.push_back({s, c, ea});
            read.push_back({s.name, l, er});
            refresh.push_back({s, c, ef});
        }
    }
};

}  // namespace

TEST(EnergyFit, CoefficientsMatchIndependentSolve) {
    Fixture f;
    EnergyModel m;
    m.alpha = 1;
    m.e_act_fixed = 0;
    const auto rep = fit_energy_model(m, kTech, f.act, f.read, f.refresh);
    EXPECT_NEAR(m.alpha, 0.54254826, 1e-7);
    EXPECT_NEAR(m.e_act_fixed, 1.23538021e-10, 1e-17);
    EXPECT_NEAR(m.beta, 4.93950434e-15, 1e-22);
    EXPECT_NEAR(m.e_io, 3.08461903e-10, 1e-17);
    EXPECT_NEAR(m.gamma, 3.85083898, 1e-7);
    EXPECT_NEAR(m.e_ref_fixed, 1.58408454e-8, 1e-15);
    EXPECT_EQ(rep.rows.size(), 9u);
    EXPECT_LE(rep.worst_relative_error(), 0.15);
}

TEST(EnergyFit, ShippedDefaultsAreTheFit) {
    Fixture f;
    EnergyModel fitted;
    fit_energy_model(fitted, kTech, f.act, f.read, f.refresh);
    const EnergyModel d;
    EXPECT_NEAR(d.alpha, fitted.alpha, 1e-4);
    EXPECT_NEAR(d.beta, fitted.beta, 1e-19);
    EXPECT_NEAR(d.gamma, fitted.gamma, 1e-4);
}

TEST(EnergyModel, ReferencePoints) {
    const EnergyModel m;
    auto act = [&](const OrgSpec& s) {
        return model_activation_energy(m, s, circuit::BitlineElectricals::derive(s), kTech);
    };
    EXPECT_NEAR(act(OrgSpec::ddr4(512)), 0.59e-9, 0.15 * 0.59e-9);
    EXPECT_NEAR(act(OrgSpec::m3d(128)), 0.24e-9, 0.15 * 0.24e-9);

    GeometryReport g512, gm512, gm128;
    g512.global_bitline_length = 162687;
    gm512.global_bitline_length = 132969;
    gm128.global_bitline_length = 142569;
    const auto r512 = model_rw_and_refresh_energy(m, g512, act(OrgSpec::ddr4(512)));
    const auto rm512 = model_rw_and_refresh_energy(m, gm512, act(OrgSpec::m3d(512)));
    const auto rm128 = model_rw_and_refresh_energy(m, gm128, act(OrgSpec::m3d(128)));
    EXPECT_NEAR(r512.e_read, 1.1e-9, 0.15 * 1.1e-9);
    EXPECT_NEAR(rm512.e_refresh, 32.51e-9, 0.15 * 32.51e-9);
    EXPECT_EQ(r512.e_read, r512.e_write);
    EXPECT_LT(rm512.e_read, rm128.e_read);
    EXPECT_LT(rm128.e_read, r512.e_read);
}

TEST(EnergyModel, NoLoadNoEnergy) {
    EnergyModel m;
    m.e_act_fixed = 0;
    circuit::BitlineElectricals bl;
    bl.c_local_bitline = 0;
    EXPECT_EQ(model_activation_energy(m, OrgSpec::ddr4(512), bl, kTech), 0.0);
}

TEST(EnergyFit, MissBeyondToleranceFails) {
    Fixture f;
    f.act[1].e_activate = 0.9e-9;  // inconsistent with the other two
    EnergyModel m;
    try {
        fit_energy_model(m, kTech, f.act, f.read, f.refresh);
        FAIL() << "expected CalibrationFailure";
    } catch (const CalibrationFailure& e) {
        EXPECT_NE(e.worst_row().find("e_activate"), std::string::npos);
    }
    EXPECT_DOUBLE_EQ(m.alpha, EnergyModel{}.alpha);  // untouched on failure
}

TEST(EnergyFit, TooFewSamples) {
    Fixture f;
    f.act.resize(1);
    EnergyModel m;
    EXPECT_THROW(fit_energy_model(m, kTech, f.act, f.read, f.refresh), Underdetermined);
}

TEST(Power, Aggregation) {
    EnergyParams e{0.59e-9, 1.1e-9, 1.1e-9, 35.22e-9, 0.115, 0};
    const auto idle = aggregate_power({}, e, 1e-3);
    EXPECT_EQ(idle.p_total, 0.115);
    const auto p = aggregate_power({1000000, 0, 0, 0}, e, 10e-3);
    EXPECT_NEAR(p.p_activate, 0.059, 1e-15);
    const auto q = aggregate_power({10, 20, 30, 4}, e, 1e-6);
    EXPECT_DOUBLE_EQ(q.p_burst, (20 * 1.1e-9 + 30 * 1.1e-9) / 1e-6);
    EXPECT_DOUBLE_EQ(q.p_refresh, 4 * 35.22e-9 / 1e-6);
    EXPECT_DOUBLE_EQ(q.p_total, q.p_background + q.p_activate + q.p_burst + q.p_refresh);
    EXPECT_THROW(aggregate_power({}, e, 0), InvalidStats);
}

TEST(Edp, Arithmetic) {
    PowerBreakdown p;
    p.p_total = 1.0;
    const double edp = compute_edp(p, 1e9, 20e-9);
    EXPECT_DOUBLE_EQ(edp, 20e-18);  // 1 nJ/bit x 20 ns
    EXPECT_DOUBLE_EQ(edp_pj_ns_per_bit(edp), 20000.0);
    EXPECT_DOUBLE_EQ(compute_edp(p, 1e9, 40e-9), 2 * edp);
    EXPECT_THROW(compute_edp(p, 0, 20e-9), InvalidStats);
}
