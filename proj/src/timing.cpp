#include "m3dram/timing.hpp"

#include <cmath>
#include <set>

#include "lsq.hpp"
#include "m3dram/energy.hpp"
#include "m3dram/error.hpp"

namespace m3dram {

void TimingParams::validate() const {
    const double all[] = {t_rcd, t_cas, t_rp, t_ras, t_rc, t_faw, t_refi, t_burst, close_page_latency};
    for (double v : all)
        if (!(v > 0)) throw InvalidConfig("timing parameters must be positive");
    const double eps = 1e-15;
    if (std::abs(t_rc - (t_ras + t_rp)) > eps) throw InvalidConfig("tRC != tRAS + tRP");
    if (std::abs(close_page_latency - (t_rcd + t_cas + t_burst)) > eps)
        throw InvalidConfig("close-page latency != tRCD + tCAS + tBURST");
    if (t_faw < t_burst) throw InvalidConfig("tFAW shorter than tBURST");
}

double TcasModel::predict(double l) const {
    return fixed_delay + per_F_delay * l + per_F2_delay * l * l;
}

TcasModel fit_tcas_model(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 3) throw Underdetermined("tCAS fit needs at least three points");
    std::set<double> distinct;
    for (const auto& p : points) distinct.insert(p.first);
    if (distinct.size() < 2)
        throw Underdetermined("tCAS fit is rank-deficient: all points share one bitline length");

    const auto n = Eigen::Index(points.size());
    Eigen::MatrixXd a(n, 3);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double l = points[std::size_t(i)].first;
        a(i, 0) = 1.0;
        a(i, 1) = l;
        a(i, 2) = l * l;
        b(i) = points[std::size_t(i)].second;
    }

    const auto lin = detail::least_squares(a.leftCols(2), b);
    TcasModel m;
    m.fixed_delay = lin.coef(0);
    m.per_F_delay = lin.coef(1);
    m.rss = lin.rss;
    m.residuals = lin.residuals;

    if (distinct.size() >= 4) {  // quadratic needs a spare point or it interpolates exactly
        const auto quad = detail::least_squares(a, b);
        if (quad.rank == 3 && quad.rss <= 0.8 * lin.rss) {
            m.fixed_delay = quad.coef(0);
            m.per_F_delay = quad.coef(1);
            m.per_F2_delay = quad.coef(2);
            m.quadratic = true;
            m.rss = quad.rss;
            m.residuals = quad.residuals;
        }
    }
    if (!(m.fixed_delay > 0)) throw Underdetermined("tCAS fit produced a non-positive fixed delay");
    return m;
}

double scale_tfaw(double base_tfaw, double base_act_energy, double new_act_energy) {
    if (!(base_act_energy > 0 && new_act_energy > 0))
        throw InvalidConfig("activation energies must be positive");
    return base_tfaw * (new_act_energy / base_act_energy);
}

TimingParams assemble_timing(const OrgSpec& spec, const GeometryReport& geo,
                             const circuit::TransientResult& transient, const TcasModel& tcas,
                             const EnergyParams& energy, const TimingConstants& constants) {
    const auto fp = spec.fingerprint();
    if (geo.spec_fingerprint != fp || transient.spec_fingerprint != fp ||
        energy.spec_fingerprint != fp)
        throw InconsistentInputs(spec.name + ": geometry, transient and energy were derived for different organizations");

    TimingParams t;
    t.t_rcd = transient.t_rcd;
    t.t_ras = transient.t_ras;
    t.t_rp = transient.t_rp;
    t.t_rc = t.t_ras + t.t_rp;
    t.t_cas = tcas.predict(double(geo.global_bitline_length));
    t.t_burst = constants.t_burst;
    t.t_refi = constants.t_refi;
    t.t_faw = scale_tfaw(constants.base_tfaw, constants.base_act_energy, energy.e_activate);
    t.close_page_latency = t.t_rcd + t.t_cas + t.t_burst;
    t.validate();
    return t;
}

}  // namespace m3dram
