#include "m3dram/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <limits>

#include "m3dram/error.hpp"

namespace m3dram::circuit {

BitlineElectricals BitlineElectricals::derive(const OrgSpec& spec, double r_per_cell,
                                              double c_per_cell) {
    BitlineElectricals bl;
    bl.r_per_cell = r_per_cell;
    bl.c_per_cell = c_per_cell;
    bl.is_m3d = spec.is_m3d;
    bl.spec_fingerprint = spec.fingerprint();
    bl.r_local_bitline = spec.cells_per_local_bitline * r_per_cell;
    bl.c_local_bitline = spec.cells_per_local_bitline * c_per_cell;
    if (spec.is_m3d) {
        bl.r_local_bitline += bl.miv_r;
        bl.c_local_bitline += bl.miv_c;
    }
    return bl;
}

void CellModel::validate() const {
    if (!(c_cell > 0)) throw InvalidConfig("cell capacitance must be positive");
    if (!(access_on_resistance > 0)) throw InvalidConfig("access resistance must be positive");
    if (!(top_tier_current_derating > 0 && top_tier_current_derating <= 1))
        throw InvalidConfig("top-tier derating must lie in (0, 1]");
    if (!(wordline_voltage > access_threshold_voltage))
        throw InvalidConfig("wordline voltage must exceed the access threshold");
}

void SenseAmpModel::validate() const {
    if (!(latch_transconductance > 0 && threshold_voltage > 0 &&
          precharge_equalizer_resistance > 0 && intrinsic_enable_delay > 0))
        throw InvalidConfig("sense-amplifier parameters must be positive");
    if (enable_ramp < 0 || precharge_enable_delay < 0 || wire_resistance < 0 ||
        bottom_tier_wire_factor <= 0)
        throw InvalidConfig("sense-amplifier timing/wiring parameters must be non-negative");
}

void SolverConfig::validate() const {
    if (!(step > 0)) throw InvalidConfig("solver step must be positive");
    if (step > 10e-12 * (1 + 1e-9)) throw InvalidConfig("solver step must not exceed 10 ps");
    if (!(horizon > 0)) throw InvalidConfig("solver horizon must be positive");
    if (segments < 1) throw InvalidConfig("bitline needs at least one segment");
    if (record_waveform && !(waveform_interval > 0))
        throw InvalidConfig("waveform interval must be positive");
}

double charge_share_delta(const CellModel& cell, const BitlineElectricals& bl, const TechNode& tech) {
    if (cell.c_cell < 0 || bl.c_local_bitline < 0 || cell.c_cell + bl.c_local_bitline <= 0)
        throw InvalidConfig("capacitances must be positive");
    return 0.5 * tech.vdd * cell.c_cell / (cell.c_cell + bl.c_local_bitline);
}

namespace {

// Shichman-Hodges drain current, vds >= 0.
double mos_current(double k, double vth, double vgs, double vds) {
    const double ov = vgs - vth;
    if (ov <= 0 || vds <= 0) return 0;
    if (vds < ov) return k * (ov * vds - 0.5 * vds * vds);
    return 0.5 * k * ov * ov;
}

enum class Phase { Activation, Precharge };

// Node 0 is the cell; nodes 1..N+1 are the bitline ladder from the far end
// to the sense amplifier. The last state entry integrates latch current.
class BitlineNetwork {
public:
    BitlineNetwork(const CellModel& cell, const BitlineElectricals& bl, const SenseAmpModel& sa,
                   const TechNode& tech, int segments, Phase phase)
        : vdd_(tech.vdd), phase_(phase), sa_(sa) {
        const int n = segments;
        double r = bl.r_local_bitline;
        double c = bl.c_local_bitline;
        if (bl.is_m3d) {
            r -= bl.miv_r;
            c -= bl.miv_c;
        }
        if (!(r > 0 && c > 0)) throw InvalidConfig("bitline parasitics must be positive");

        cap_.assign(std::size_t(n) + 2, c / n);
        cap_[0] = cell.c_cell;
        cap_[1] = c / (2.0 * n);
        cap_[n + 1] = c / (2.0 * n);
        res_.assign(std::size_t(n), r / n);
        if (bl.is_m3d) {
            cap_[n + 1] += bl.miv_c;
            res_.back() += bl.miv_r;
        }

        vg_ = cell.wordline_voltage;
        vth_access_ = cell.access_threshold_voltage;
        const double ov_ref = vg_ - 0.5 * vdd_ - vth_access_;
        if (!(ov_ref > 0)) throw InvalidConfig("access device is off at VDD/2");
        k_access_ = 1.0 / (cell.access_on_resistance * ov_ref);
        if (bl.is_m3d) k_access_ *= cell.top_tier_current_derating;

        // Source-line wiring degenerates the latch: K / (1 + K R Vov).
        const double wire_r = sa.wire_resistance * (bl.is_m3d ? sa.bottom_tier_wire_factor : 1.0);
        const double k = sa.latch_transconductance;
        k_latch_ = k / (1.0 + k * wire_r * (vdd_ - sa.threshold_voltage));
    }

    std::size_t nodes() const { return cap_.size(); }
    std::size_t sa_node() const { return cap_.size() - 1; }
    const std::vector<double>& caps() const { return cap_; }

    double latch_enable_time() const { return sa_.intrinsic_enable_delay; }

    // Largest diagonal conductance-over-capacitance; bounds the spectral radius.
    double stable_step() const {
        const double g_access = k_access_ * (vg_ - vth_access_);
        const double g_latch = 2.0 * k_latch_ * vdd_;
        const double g_eq = 1.0 / sa_.precharge_equalizer_resistance;
        double worst = 0;
        for (std::size_t i = 0; i < cap_.size(); ++i) {
            double g = 0;
            if (i == 0) g += g_access;
            if (i == 1) g += g_access;
            if (i >= 1 && i - 1 < res_.size()) g += 1.0 / res_[i - 1];
            if (i >= 2) g += 1.0 / res_[i - 2];
            if (i == sa_node()) g += std::max(g_latch, g_eq);
            worst = std::max(worst, g / cap_[i]);
        }
        return 1.0 / worst;
    }

    void derivative(double t, const std::vector<double>& y, std::vector<double>& dy) const {
        const std::size_t n = cap_.size();
        std::fill(dy.begin(), dy.end(), 0.0);
        if (phase_ == Phase::Activation) {
            const double ia = access_current(y[0], y[1]);
            dy[0] -= ia;
            dy[1] += ia;
        }
        for (std::size_t k = 0; k < res_.size(); ++k) {
            const double i = (y[k + 1] - y[k + 2]) / res_[k];
            dy[k + 1] -= i;
            dy[k + 2] += i;
        }
        double i_latch = 0;
        if (phase_ == Phase::Activation) {
            const double t_en = sa_.intrinsic_enable_delay;
            if (t > t_en) {
                double scale = 1.0;
                if (sa_.enable_ramp > 0) scale = std::min(1.0, (t - t_en) / sa_.enable_ramp);
                i_latch = latch_current(y[n - 1], scale);
            }
        } else {
            i_latch = (0.5 * vdd_ - y[n - 1]) / sa_.precharge_equalizer_resistance;
        }
        dy[n - 1] += i_latch;
        for (std::size_t i = 0; i < n; ++i) dy[i] /= cap_[i];
        dy[n] = i_latch;
    }

private:
    double access_current(double v_cell, double v_bl) const {
        const double lo = std::min(v_cell, v_bl);
        const double hi = std::max(v_cell, v_bl);
        const double i = mos_current(k_access_, vth_access_, vg_ - lo, hi - lo);
        return v_cell > v_bl ? i : -i;
    }

    // Folded pair with a mirrored reference line: the high-side PMOS sees
    // |Vgs| = V and the high-side NMOS sees Vgs = VDD - V.
    double latch_raw(double v) const {
        const double k = k_latch_;
        const double vth = sa_.threshold_voltage;
        return mos_current(k, vth, v, vdd_ - v) - mos_current(k, vth, vdd_ - v, v);
    }

    double latch_current(double v_node, double scale) const {
        if (scale <= 0) return 0;
        return scale * latch_raw(v_node);
    }

    double vdd_;
    Phase phase_;
    SenseAmpModel sa_;
    std::vector<double> cap_;
    std::vector<double> res_;
    double vg_ = 0, vth_access_ = 0, k_access_ = 0, k_latch_ = 0;
};

class Rk4 {
public:
    explicit Rk4(std::size_t n) : k1_(n), k2_(n), k3_(n), k4_(n), tmp_(n) {}

    template <class F>
    void step(const F& f, double t, double h, std::vector<double>& y) {
        const std::size_t n = y.size();
        f(t, y, k1_);
        for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + 0.5 * h * k1_[i];
        f(t + 0.5 * h, tmp_, k2_);
        for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + 0.5 * h * k2_[i];
        f(t + 0.5 * h, tmp_, k3_);
        for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + h * k3_[i];
        f(t + h, tmp_, k4_);
        for (std::size_t i = 0; i < n; ++i)
            y[i] += h / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
    }

private:
    std::vector<double> k1_, k2_, k3_, k4_, tmp_;
};

// Advances `y` from t to t + dt using equal substeps no longer than h_max.
template <class F>
void advance(Rk4& rk, const F& f, double t, double dt, double h_max, std::vector<double>& y) {
    const int sub = std::max(1, int(std::ceil(dt / h_max)));
    const double h = dt / sub;
    for (int s = 0; s < sub; ++s) rk.step(f, t + s * h, h, y);
}

double stored_charge(const BitlineNetwork& net, const std::vector<double>& y) {
    double q = 0;
    for (std::size_t i = 0; i < net.nodes(); ++i) q += net.caps()[i] * y[i];
    return q;
}

double interpolate_crossing(double t0, double v0, double t1, double v1, double level) {
    if (v1 == v0) return t1;
    return t0 + (level - v0) / (v1 - v0) * (t1 - t0);
}

}  // namespace

TransientResult simulate_activation(const CellModel& cell, const BitlineElectricals& bl,
                                    const SenseAmpModel& sa, const TechNode& tech,
                                    const SolverConfig& cfg) {
    cfg.validate();
    cell.validate();
    sa.validate();
    tech.validate();

    const BitlineNetwork net(cell, bl, sa, tech, cfg.segments, Phase::Activation);
    auto f = [&net](double t, const std::vector<double>& y, std::vector<double>& dy) {
        net.derivative(t, y, dy);
    };
    const double vdd = tech.vdd;
    const std::size_t sa_node = net.sa_node();
    const double h_max = net.stable_step();

    std::vector<double> y(net.nodes() + 1, 0.5 * vdd);
    y[0] = vdd;  // worst case: reading a stored '1'
    y.back() = 0;
    Rk4 rk(y.size());

    TransientResult r;
    r.spec_fingerprint = bl.spec_fingerprint;
    double next_sample = 0;
    auto record = [&](double t) {
        if (!cfg.record_waveform) return;
        while (t + 1e-18 >= next_sample) {
            r.waveform.push_back({t, y[sa_node], y[0]});
            next_sample += cfg.waveform_interval;
        }
    };
    record(0);

    // Charge sharing: latch off until the enable instant, which lands on a step boundary.
    const double t_en = net.latch_enable_time();
    if (t_en > cfg.horizon) throw NonConvergence("latch enable lies beyond the solver horizon");
    const int n1 = std::max(1, int(std::ceil(t_en / cfg.step)));
    const double dt1 = t_en / n1;
    double t = 0;
    for (int i = 0; i < n1; ++i) {
        advance(rk, f, t, dt1, h_max, y);
        t = (i + 1 == n1) ? t_en : t + dt1;
        record(t);
    }
    r.t_enable = t_en;
    r.delta_v = y[sa_node] - 0.5 * vdd;
    const double q_start = stored_charge(net, y);
    const double latch_q_start = y.back();

    const double v_rcd = 0.75 * vdd;
    const double v_ras = 0.95 * vdd;
    bool have_rcd = false;
    if (y[sa_node] >= v_rcd) {
        r.t_rcd = t_en;
        have_rcd = true;
    }

    while (true) {
        if (t >= cfg.horizon) {
            if (!have_rcd)
                throw NonConvergence("bitline never reached 0.75 VDD within the solver horizon");
            throw NonConvergence("cell never restored to 0.95 VDD within the solver horizon");
        }
        const double v_sa0 = y[sa_node];
        const double v_cell0 = y[0];
        advance(rk, f, t, cfg.step, h_max, y);
        const double t1 = t + cfg.step;
        if (!have_rcd && y[sa_node] >= v_rcd) {
            r.t_rcd = interpolate_crossing(t, v_sa0, t1, y[sa_node], v_rcd);
            have_rcd = true;
        }
        t = t1;
        record(t);
        if (have_rcd && y[0] >= v_ras) {
            r.t_ras = interpolate_crossing(t - cfg.step, v_cell0, t, y[0], v_ras);
            break;
        }
    }
    r.latch_charge = y.back() - latch_q_start;
    r.stored_charge_change = stored_charge(net, y) - q_start;
    return r;
}

double simulate_precharge(const CellModel& cell, const BitlineElectricals& bl,
                          const SenseAmpModel& sa, const TechNode& tech, const SolverConfig& cfg,
                          std::vector<WaveformSample>* waveform,
                          std::pair<double, double>* charge_balance) {
    cfg.validate();
    cell.validate();
    sa.validate();
    tech.validate();

    const BitlineNetwork net(cell, bl, sa, tech, cfg.segments, Phase::Precharge);
    auto f = [&net](double t, const std::vector<double>& y, std::vector<double>& dy) {
        net.derivative(t, y, dy);
    };
    const double vdd = tech.vdd;
    const double mid = 0.5 * vdd;
    const double tol = 0.01 * mid;
    const double h_max = net.stable_step();

    std::vector<double> y(net.nodes() + 1, vdd);
    y.back() = 0;
    Rk4 rk(y.size());
    const double q_start = stored_charge(net, y);

    auto deviation = [&]() {
        double d = 0;
        for (std::size_t i = 1; i < net.nodes(); ++i) d = std::max(d, std::abs(y[i] - mid));
        return d;
    };

    const double t0 = sa.precharge_enable_delay;
    double t = 0;
    double next_sample = 0;
    auto record = [&](double tt) {
        if (!waveform) return;
        while (tt + 1e-18 >= next_sample) {
            waveform->push_back({t0 + tt, y[net.sa_node()], y[0]});
            next_sample += cfg.waveform_interval;
        }
    };
    record(0);
    double dev = deviation();
    while (dev > tol) {
        if (t0 + t >= cfg.horizon)
            throw NonConvergence("bitline did not settle to VDD/2 within the solver horizon");
        advance(rk, f, t, cfg.step, h_max, y);
        const double dev1 = deviation();
        if (dev1 <= tol) {
            t = interpolate_crossing(t, dev, t + cfg.step, dev1, tol);
            dev = dev1;
            break;
        }
        t += cfg.step;
        dev = dev1;
        record(t);
    }
    if (charge_balance) *charge_balance = {y.back(), stored_charge(net, y) - q_start};
    return t0 + t;
}

void write_waveform_csv(std::ostream& os, const std::vector<WaveformSample>& waveform) {
    os << "time_ns,v_bitline,v_cell\n";
    char line[96];
    for (const auto& w : waveform) {
        std::snprintf(line, sizeof line, "%.4f,%.6f,%.6f\n", w.t * 1e9, w.v_bitline, w.v_cell);
        os << line;
    }
}

TransientResult simulate(const CellModel& cell, const BitlineElectricals& bl,
                         const SenseAmpModel& sa, const TechNode& tech, const SolverConfig& cfg) {
    TransientResult r = simulate_activation(cell, bl, sa, tech, cfg);
    std::vector<WaveformSample> pre;
    std::pair<double, double> balance;
    r.t_rp = simulate_precharge(cell, bl, sa, tech, cfg, cfg.record_waveform ? &pre : nullptr, &balance);
    r.equalizer_charge = balance.first;
    r.precharge_stored_charge_change = balance.second;
    for (auto s : pre) {
        s.t += r.t_ras;
        r.waveform.push_back(s);
    }
    return r;
}

}  // namespace m3dram::circuit
