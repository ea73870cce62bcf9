#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "m3dram/orggeom.hpp"

namespace m3dram::circuit {

/// Local-bitline parasitics. For M3D organizations the MIV joining the
/// top-tier bitline to the bottom-tier SA is folded into the totals.
struct BitlineElectricals {
    double r_per_cell = 20000.0 / 512;   // ohms
    double c_per_cell = 72e-15 / 512;    // farads
    double r_local_bitline = 20000.0;    // ohms
    double c_local_bitline = 72e-15;     // farads
    bool is_m3d = false;
    double miv_r = 10.0;
    double miv_c = 0.2e-15;
    double worst_case_vertical_r = 20.0;
    double worst_case_vertical_c = 0.23e-15;
    std::uint64_t spec_fingerprint = 0;

    static BitlineElectricals derive(const OrgSpec& spec,
                                     double r_per_cell = 20000.0 / 512,
                                     double c_per_cell = 72e-15 / 512);
};

/// 1T1C cell. The access device is a square-law NMOS whose gate is driven to
/// the boosted wordline level; `access_on_resistance` is its small-signal
/// resistance with the bitline side at VDD/2.
struct CellModel {
    double c_cell = 24e-15;
    double access_on_resistance = 8833.5;
    double top_tier_current_derating = 0.85;
    double wordline_voltage = 2.5;
    double access_threshold_voltage = 1.33;

    void validate() const;
};

/// Cross-coupled square-law latch plus its precharge/equalize circuitry.
struct SenseAmpModel {
    double latch_transconductance = 153.66e-6;  // A/V^2
    double threshold_voltage = 0.58;            // V
    double precharge_equalizer_resistance = 12576.0;
    double intrinsic_enable_delay = 4.3263e-9;  // wordline assert -> latch enable
    double enable_ramp = 0.75e-9;               // latch supply slew time
    double precharge_enable_delay = 2.8306e-9;  // PRE -> equalizer on
    double wire_resistance = 250.0;             // latch source lines
    double bottom_tier_wire_factor = 2.0;       // tungsten wiring on the M3D bottom tier

    void validate() const;
};

struct SolverConfig {
    double step = 5e-12;       // output step; RK4 substeps further for stability
    double horizon = 100e-9;
    int segments = 8;
    bool record_waveform = false;
    double waveform_interval = 20e-12;

    void validate() const;
};

struct WaveformSample {
    double t;
    double v_bitline;  // at the sense amplifier
    double v_cell;
};

struct TransientResult {
    double delta_v = 0;      // charge-share plateau at latch enable
    double t_enable = 0;
    double t_rcd = 0;
    double t_ras = 0;
    double t_rp = 0;
    std::uint64_t spec_fingerprint = 0;
    /// Charge pushed in by the latch between enable and restore-complete,
    /// and the matching rise of stored charge on every capacitor.
    double latch_charge = 0;
    double stored_charge_change = 0;
    /// Same balance for the precharge phase (equalizer charge vs. stored charge).
    double equalizer_charge = 0;
    double precharge_stored_charge_change = 0;
    std::vector<WaveformSample> waveform;
};

double charge_share_delta(const CellModel& cell, const BitlineElectricals& bl, const TechNode& tech);

TransientResult simulate_activation(const CellModel& cell, const BitlineElectricals& bl,
                                    const SenseAmpModel& sa, const TechNode& tech,
                                    const SolverConfig& cfg);

/// Time to equalize a fully amplified bitline back to VDD/2 (within 1%).
double simulate_precharge(const CellModel& cell, const BitlineElectricals& bl,
                          const SenseAmpModel& sa, const TechNode& tech, const SolverConfig& cfg,
                          std::vector<WaveformSample>* waveform = nullptr,
                          std::pair<double, double>* charge_balance = nullptr);

/// CSV with header `time_ns,v_bitline,v_cell`.
void write_waveform_csv(std::ostream& os, const std::vector<WaveformSample>& waveform);

/// Activation followed by precharge.
TransientResult simulate(const CellModel& cell, const BitlineElectricals& bl,
                         const SenseAmpModel& sa, const TechNode& tech, const SolverConfig& cfg);

// ---------------------------------------------------------------------------
// Calibration

struct CircuitTarget {
    OrgSpec spec;
    double t_rcd = 0;
    double t_rp = 0;
    double t_ras = 0;  // 0 when the reference row has no tRC
};

struct CircuitResidual {
    std::string org;
    double t_rcd_model = 0, t_rcd_target = 0;
    double t_rp_model = 0, t_rp_target = 0;
    double t_ras_model = 0, t_ras_target = 0;

    double worst_relative_error() const;
};

struct CircuitCalibration {
    CellModel cell;
    SenseAmpModel sa;
    std::vector<CircuitResidual> residuals;
    bool underdetermined = false;  // defaults returned unfitted
    int evaluations = 0;
};

struct CalibrationOptions {
    double tolerance = 0.10;
    int max_sweeps = 12;
};

CircuitCalibration calibrate_circuit(const std::vector<CircuitTarget>& reference,
                                     const CellModel& cell_start, const SenseAmpModel& sa_start,
                                     const TechNode& tech, const SolverConfig& cfg,
                                     const CalibrationOptions& opts = {});

}  // namespace m3dram::circuit
