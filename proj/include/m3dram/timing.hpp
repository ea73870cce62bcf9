#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "m3dram/circuit.hpp"
#include "m3dram/orggeom.hpp"

namespace m3dram {

struct EnergyParams;

/// All values in seconds.
struct TimingParams {
    double t_rcd = 0;
    double t_cas = 0;
    double t_rp = 0;
    double t_ras = 0;
    double t_rc = 0;
    double t_faw = 0;
    double t_refi = 0;
    double t_burst = 0;
    double close_page_latency = 0;

    /// Throws InvalidConfig when an identity or positivity invariant is broken.
    void validate() const;
};

/// tCAS as a polynomial in global-bitline length (F units).
struct TcasModel {
    double fixed_delay = 0;   // s
    double per_F_delay = 0;   // s/F
    double per_F2_delay = 0;  // s/F^2, zero unless the quadratic term earned its place
    bool quadratic = false;
    double rss = 0;           // residual sum of squares, s^2
    std::vector<double> residuals;  // model - target per input point, s

    double predict(double global_bitline_length_F) const;
};

/// Least-squares fit of t_cas = a + b L (+ c L^2). The quadratic term is kept
/// only if it cuts the residual sum of squares by at least 20%.
TcasModel fit_tcas_model(const std::vector<std::pair<double, double>>& points);

/// tFAW proportional to activation energy (fixed charge budget per window).
double scale_tfaw(double base_tfaw, double base_act_energy, double new_act_energy);

struct TimingConstants {
    double t_burst = 4e-9;      // 4 cycles at 1 GHz
    double t_refi = 7800e-9;
    double base_tfaw = 35.8e-9;
    double base_act_energy = 0.59e-9;  // activation energy of the tFAW baseline org
};

TimingParams assemble_timing(const OrgSpec& spec, const GeometryReport& geo,
                             const circuit::TransientResult& transient, const TcasModel& tcas,
                             const EnergyParams& energy, const TimingConstants& constants = {});

}  // namespace m3dram
