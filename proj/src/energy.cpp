#include "m3dram/energy.hpp"

#include <cmath>
#include <sstream>

#include "lsq.hpp"
#include "m3dram/error.hpp"

namespace m3dram {

double activation_switching_energy(const OrgSpec& spec, double c_local_bitline, const TechNode& tech) {
    const double vdd = tech.vdd;
    return double(spec.active_bitlines()) * c_local_bitline * vdd * (vdd / 2);
}

double model_activation_energy(const EnergyModel& m, const OrgSpec& spec,
                               const circuit::BitlineElectricals& bl, const TechNode& tech) {
    return m.alpha * activation_switching_energy(spec, bl.c_local_bitline, tech) + m.e_act_fixed;
}

RwRefreshEnergy model_rw_and_refresh_energy(const EnergyModel& m, const GeometryReport& geo,
                                            double e_activate) {
    RwRefreshEnergy e;
    e.e_read = m.beta * double(geo.global_bitline_length) + m.e_io;
    e.e_write = e.e_read;
    e.e_refresh = m.gamma * m.rows_refreshed_per_ref * e_activate + m.e_ref_fixed;
    return e;
}

EnergyParams derive_energy(const EnergyModel& m, const OrgSpec& spec, const GeometryReport& geo,
                           const circuit::BitlineElectricals& bl, const TechNode& tech) {
    if (geo.spec_fingerprint != spec.fingerprint() || bl.spec_fingerprint != spec.fingerprint())
        throw InconsistentInputs(spec.name + ": geometry or electricals belong to another organization");
    EnergyParams p;
    p.e_activate = model_activation_energy(m, spec, bl, tech);
    const auto rw = model_rw_and_refresh_energy(m, geo, p.e_activate);
    p.e_read = rw.e_read;
    p.e_write = rw.e_write;
    p.e_refresh = rw.e_refresh;
    p.p_background = m.p_background;
    p.spec_fingerprint = spec.fingerprint();
    if (p.e_activate < 0 || p.e_read < 0 || p.e_refresh < 0)
        throw InvalidConfig(spec.name + ": energy model yields a negative energy");
    return p;
}

double EnergyFitReport::worst_relative_error() const {
    double w = 0;
    for (const auto& r : rows) w = std::max(w, std::abs(r.relative_error()));
    return w;
}

namespace {

// Fits y = k*x + c over the samples.
std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y,
                                   const char* what) {
    if (x.size() < 2) throw Underdetermined(std::string(what) + " fit needs at least two samples");
    const auto n = Eigen::Index(x.size());
    Eigen::MatrixXd a(n, 2);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        a(i, 0) = x[std::size_t(i)];
        a(i, 1) = 1.0;
        b(i) = y[std::size_t(i)];
    }
    const auto fit = detail::least_squares(a, b);
    if (fit.rank < 2) throw Underdetermined(std::string(what) + " fit is rank-deficient");
    return {fit.coef(0), fit.coef(1)};
}

}  // namespace

EnergyFitReport fit_energy_model(EnergyModel& m, const TechNode& tech,
                                 const std::vector<ActivationSample>& act,
                                 const std::vector<ReadSample>& read,
                                 const std::vector<RefreshSample>& refresh,
                                 double tolerance) {
    EnergyModel fitted = m;
    EnergyFitReport report;

    std::vector<double> x, y;
    for (const auto& s : act) {
        x.push_back(activation_switching_energy(s.spec, s.c_local_bitline, tech));
        y.push_back(s.e_activate);
    }
    std::tie(fitted.alpha, fitted.e_act_fixed) = fit_line(x, y, "activation energy");
    for (std::size_t i = 0; i < act.size(); ++i)
        report.rows.push_back({act[i].spec.name, "e_activate",
                               fitted.alpha * x[i] + fitted.e_act_fixed, y[i]});

    x.clear();
    y.clear();
    for (const auto& s : read) {
        x.push_back(s.global_bitline_length_F);
        y.push_back(s.e_read);
    }
    std::tie(fitted.beta, fitted.e_io) = fit_line(x, y, "read energy");
    for (std::size_t i = 0; i < read.size(); ++i)
        report.rows.push_back({read[i].org, "e_read", fitted.beta * x[i] + fitted.e_io, y[i]});

    x.clear();
    y.clear();
    for (const auto& s : refresh) {
        const double e_act =
            fitted.alpha * activation_switching_energy(s.spec, s.c_local_bitline, tech) + fitted.e_act_fixed;
        x.push_back(fitted.rows_refreshed_per_ref * e_act);
        y.push_back(s.e_refresh);
    }
    std::tie(fitted.gamma, fitted.e_ref_fixed) = fit_line(x, y, "refresh energy");
    for (std::size_t i = 0; i < refresh.size(); ++i)
        report.rows.push_back({refresh[i].spec.name, "e_refresh",
                               fitted.gamma * x[i] + fitted.e_ref_fixed, y[i]});

    const EnergyFitReport::Row* worst = nullptr;
    for (const auto& r : report.rows)
        if (!worst || std::abs(r.relative_error()) > std::abs(worst->relative_error())) worst = &r;
    if (worst && std::abs(worst->relative_error()) > tolerance) {
        std::ostringstream os;
        os << worst->org << " " << worst->quantity << ": model " << worst->model << " J, target "
           << worst->target << " J (" << worst->relative_error() * 100 << "%)";
        throw CalibrationFailure("energy fit misses tolerance", os.str());
    }
    m = fitted;
    return report;
}

PowerBreakdown aggregate_power(const ActivityCounters& stats, const EnergyParams& energies,
                               double wall_time) {
    if (!(wall_time > 0)) throw InvalidStats("wall time must be positive");
    PowerBreakdown p;
    p.p_background = energies.p_background;
    p.p_activate = double(stats.n_activates) * energies.e_activate / wall_time;
    p.p_burst = (double(stats.n_reads) * energies.e_read + double(stats.n_writes) * energies.e_write) /
                wall_time;
    p.p_refresh = double(stats.n_refreshes) * energies.e_refresh / wall_time;
    p.p_total = p.p_background + p.p_activate + p.p_burst + p.p_refresh;
    return p;
}

double compute_edp(const PowerBreakdown& power, double throughput_bits_per_s, double avg_latency_s) {
    if (!(throughput_bits_per_s > 0)) throw InvalidStats("throughput must be positive to compute EDP");
    return power.p_total / throughput_bits_per_s * avg_latency_s;
}

}  // namespace m3dram
