#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "m3dram/circuit.hpp"
#include "m3dram/error.hpp"

namespace m3dram::circuit {

double CircuitResidual::worst_relative_error() const {
    auto rel = [](double model, double target) {
        return target > 0 ? std::abs(model / target - 1.0) : 0.0;
    };
    double w = std::max(rel(t_rcd_model, t_rcd_target), rel(t_rp_model, t_rp_target));
    // tRAS is checked through tRC = tRAS + tRP, the quantity actually reported.
    if (t_ras_target > 0)
        w = std::max(w, rel(t_ras_model + t_rp_model, t_ras_target + t_rp_target));
    return w;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_err2(double model, double target) {
    const double e = std::log(model / target);
    return e * e;
}

// One golden-section line search per coordinate, in log space, with a bracket
// that halves every sweep. Ordering is fixed so results are reproducible.
template <class Cost>
double coordinate_descent(std::vector<double*> params, const Cost& cost, int sweeps, int& evals) {
    double best = cost();
    ++evals;
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double span = std::log(2.0);
    for (int sweep = 0; sweep < sweeps; ++sweep, span *= 0.5) {
        for (double* p : params) {
            const double centre = std::log(*p);
            double a = centre - span, b = centre + span;
            auto eval_at = [&](double x) {
                const double saved = *p;
                *p = std::exp(x);
                const double c = cost();
                ++evals;
                *p = saved;
                return c;
            };
            double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
            double f1 = eval_at(x1), f2 = eval_at(x2);
            for (int it = 0; it < 10; ++it) {
                if (f1 <= f2) {
                    b = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = b - phi * (b - a);
                    f1 = eval_at(x1);
                } else {
                    a = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = a + phi * (b - a);
                    f2 = eval_at(x2);
                }
            }
            const double xb = f1 <= f2 ? x1 : x2;
            const double fb = std::min(f1, f2);
            if (fb < best) {
                best = fb;
                *p = std::exp(xb);
            }
        }
    }
    return best;
}

}  // namespace

CircuitCalibration calibrate_circuit(const std::vector<CircuitTarget>& reference,
                                     const CellModel& cell_start, const SenseAmpModel& sa_start,
                                     const TechNode& tech, const SolverConfig& cfg,
                                     const CalibrationOptions& opts) {
    CircuitCalibration out;
    out.cell = cell_start;
    out.sa = sa_start;

    std::set<std::uint64_t> distinct;
    for (const auto& r : reference) distinct.insert(r.spec.fingerprint());

    std::vector<BitlineElectricals> bls;
    for (const auto& r : reference) bls.push_back(BitlineElectricals::derive(r.spec));

    if (distinct.size() >= 2) {
        CellModel& cell = out.cell;
        SenseAmpModel& sa = out.sa;

        auto activation_cost = [&]() {
            double c = 0;
            for (std::size_t i = 0; i < reference.size(); ++i) {
                try {
                    const auto tr = simulate_activation(cell, bls[i], sa, tech, cfg);
                    c += log_err2(tr.t_rcd, reference[i].t_rcd);
                    if (reference[i].t_ras > 0) c += log_err2(tr.t_ras, reference[i].t_ras);
                } catch (const NonConvergence&) {
                    return kInf;
                }
            }
            return c;
        };
        auto precharge_cost = [&]() {
            double c = 0;
            for (std::size_t i = 0; i < reference.size(); ++i) {
                try {
                    c += log_err2(simulate_precharge(cell, bls[i], sa, tech, cfg), reference[i].t_rp);
                } catch (const NonConvergence&) {
                    return kInf;
                }
            }
            return c;
        };

        coordinate_descent({&sa.latch_transconductance, &sa.intrinsic_enable_delay,
                            &cell.access_on_resistance},
                           activation_cost, opts.max_sweeps, out.evaluations);
        coordinate_descent({&sa.precharge_equalizer_resistance, &sa.precharge_enable_delay},
                           precharge_cost, opts.max_sweeps, out.evaluations);
    } else {
        out.underdetermined = true;
    }

    const CircuitResidual* worst = nullptr;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        const auto tr = simulate(out.cell, bls[i], out.sa, tech, cfg);
        CircuitResidual res;
        res.org = reference[i].spec.name;
        res.t_rcd_model = tr.t_rcd;
        res.t_rcd_target = reference[i].t_rcd;
        res.t_rp_model = tr.t_rp;
        res.t_rp_target = reference[i].t_rp;
        res.t_ras_model = tr.t_ras;
        res.t_ras_target = reference[i].t_ras;
        out.residuals.push_back(res);
    }
    for (const auto& r : out.residuals)
        if (!worst || r.worst_relative_error() > worst->worst_relative_error()) worst = &r;

    if (!out.underdetermined && worst && worst->worst_relative_error() > opts.tolerance) {
        std::ostringstream os;
        os << "circuit calibration misses tolerance " << opts.tolerance * 100 << "%: worst row "
           << worst->org << " (" << worst->worst_relative_error() * 100 << "%)";
        throw CalibrationFailure(os.str(), worst->org);
    }
    return out;
}

}  // namespace m3dram::circuit
