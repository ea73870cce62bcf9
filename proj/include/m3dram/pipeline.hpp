#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "m3dram/circuit.hpp"
#include "m3dram/energy.hpp"
#include "m3dram/orggeom.hpp"
#include "m3dram/timing.hpp"

namespace m3dram {

/// Parses "ddr4-N" / "m3d-N" (case-insensitive). Throws InvalidConfig listing
/// the known names on failure.
OrgSpec org_by_name(const std::string& name);

/// One row of a reference table. SI units; absent fields are empty.
struct ReferenceRow {
    OrgSpec spec;
    std::map<std::string, double> values;  // keys as written in the file, e.g. "t_rcd_ns"

    std::optional<double> get(const std::string& key) const;
    /// Value converted to SI (ns -> s, nJ -> J, fF -> F); other keys unchanged.
    std::optional<double> si(const std::string& key) const;
};

struct ReferenceTable {
    std::string source;
    std::vector<ReferenceRow> rows;
    const ReferenceRow* find(const std::string& org) const;
};

/// INI file, one section per organization. Throws ParseError with path and line.
ReferenceTable load_reference(const std::string& path);

/// Everything needed to turn an OrgSpec into timing and energy numbers.
struct ModelSet {
    TechNode tech;
    PeripheralDims dims;
    double r_per_cell = 20000.0 / 512;
    double c_per_cell = 72e-15 / 512;
    circuit::CellModel cell;
    circuit::SenseAmpModel sa;
    circuit::SolverConfig solver;
    TcasModel tcas;
    EnergyModel energy;
    TimingConstants constants;
    std::string tfaw_baseline = "ddr4-512";  // org whose tFAW equals constants.base_tfaw
};

/// Calibrated defaults (identical to data/calibration.json as shipped).
ModelSet default_models();

struct OrgReport {
    OrgSpec spec;
    GeometryReport geo;
    circuit::BitlineElectricals bl;
    circuit::TransientResult transient;
    EnergyParams energy;
    TimingParams timing;
};

OrgReport derive_org(const OrgSpec& spec, const ModelSet& models);

/// Timing and energy taken straight from a reference row (t_rcd, t_cas, t_rp,
/// t_rc, t_faw and the four energies must be present).
std::pair<TimingParams, EnergyParams> reference_params(const ReferenceRow& row,
                                                       const TimingConstants& constants,
                                                       double p_background);

struct ResidualRow {
    std::string org;
    std::string quantity;
    double model = 0;
    double target = 0;
    bool fitted = true;  // false for held-out predictions
    double relative_error() const { return model / target - 1.0; }
};

struct CalibrationReport {
    ModelSet models;
    std::vector<ResidualRow> rows;
    bool circuit_underdetermined = false;
    int circuit_evaluations = 0;
};

struct CalibrateOptions {
    double timing_tolerance = 0.10;
    double energy_tolerance = 0.15;
    std::vector<std::string> holdout;  // orgs excluded from every fit
};

/// Fits circuit constants, the tCAS model and the energy model to `ref`.
/// Throws CalibrationFailure naming the worst fitted row.
CalibrationReport calibrate(const ReferenceTable& ref, const ModelSet& start,
                            const CalibrateOptions& opts = {});

/// JSON round trip of the fitted constants (plus residuals on save).
void save_models(const std::string& path, const ModelSet& models,
                 const std::vector<ResidualRow>& residuals = {});
ModelSet load_models(const std::string& path);

}  // namespace m3dram
