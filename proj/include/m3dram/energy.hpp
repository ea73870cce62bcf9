#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "m3dram/circuit.hpp"
#include "m3dram/orggeom.hpp"

namespace m3dram {

/// Per-operation energies in joules; background power in watts.
struct EnergyParams {
    double e_activate = 0;
    double e_read = 0;
    double e_write = 0;
    double e_refresh = 0;
    double p_background = 0;
    std::uint64_t spec_fingerprint = 0;
};

struct PowerBreakdown {
    double p_background = 0;
    double p_activate = 0;
    double p_burst = 0;
    double p_refresh = 0;
    double p_total = 0;
};

/// Fitted coefficients of the per-access energy models.
///   e_act     = alpha * N_bitlines * C_lbl * VDD * VDD/2 + e_act_fixed
///   e_read    = beta * L_GBL + e_io            (e_write identical)
///   e_refresh = gamma * rows_per_ref * e_act + e_ref_fixed
struct EnergyModel {
    double alpha = 0.54255;
    double e_act_fixed = 0.12354e-9;
    double beta = 4.9395e-15;    // J per F of global bitline
    double e_io = 0.30846e-9;
    double gamma = 3.8508;
    double e_ref_fixed = 15.841e-9;
    int rows_refreshed_per_ref = 8;
    double p_background = 0.115;  // W
};

struct ActivationSample {
    OrgSpec spec;
    double c_local_bitline = 0;
    double e_activate = 0;
};

struct ReadSample {
    std::string org;
    double global_bitline_length_F = 0;
    double e_read = 0;
};

/// The activation energy feeding the refresh term comes from the freshly
/// fitted activation model, not from the reference table.
struct RefreshSample {
    OrgSpec spec;
    double c_local_bitline = 0;
    double e_refresh = 0;
};

/// Switched-capacitance term of the activation model (alpha = 1, no offset).
double activation_switching_energy(const OrgSpec& spec, double c_local_bitline, const TechNode& tech);

double model_activation_energy(const EnergyModel& m, const OrgSpec& spec,
                               const circuit::BitlineElectricals& bl, const TechNode& tech);

struct RwRefreshEnergy {
    double e_read = 0;
    double e_write = 0;
    double e_refresh = 0;
};

RwRefreshEnergy model_rw_and_refresh_energy(const EnergyModel& m, const GeometryReport& geo,
                                            double e_activate);

EnergyParams derive_energy(const EnergyModel& m, const OrgSpec& spec, const GeometryReport& geo,
                           const circuit::BitlineElectricals& bl, const TechNode& tech);

struct EnergyFitReport {
    struct Row {
        std::string org;
        std::string quantity;
        double model = 0;
        double target = 0;
        double relative_error() const { return model / target - 1.0; }
    };
    std::vector<Row> rows;
    double worst_relative_error() const;
};

/// Fits every coefficient of `m` (except p_background and rows_refreshed_per_ref)
/// by deterministic linear least squares. Throws CalibrationFailure when any
/// fitted point misses its target by more than `tolerance`.
EnergyFitReport fit_energy_model(EnergyModel& m, const TechNode& tech,
                                 const std::vector<ActivationSample>& act,
                                 const std::vector<ReadSample>& read,
                                 const std::vector<RefreshSample>& refresh,
                                 double tolerance = 0.15);

struct ActivityCounters {
    std::uint64_t n_activates = 0;
    std::uint64_t n_reads = 0;
    std::uint64_t n_writes = 0;
    std::uint64_t n_refreshes = 0;
};

PowerBreakdown aggregate_power(const ActivityCounters& stats, const EnergyParams& energies,
                               double wall_time);

/// Energy-delay product in joule-seconds per bit.
double compute_edp(const PowerBreakdown& power, double throughput_bits_per_s, double avg_latency_s);

/// J*s/bit expressed as pJ/bit x ns.
inline double edp_pj_ns_per_bit(double edp_si) { return edp_si * 1e21; }

}  // namespace m3dram
