#include "m3dram/simcore.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <deque>
#include <limits>

#include "m3dram/error.hpp"

namespace m3dram::sim {

namespace {

int log2_exact(std::int64_t v, const char* what) {
    if (v <= 0 || !std::has_single_bit(std::uint64_t(v)))
        throw InvalidConfig(std::string(what) + " must be a power of two for address slicing");
    return std::countr_zero(std::uint64_t(v));
}

struct Slicing {
    int column_bits, bank_bits, row_bits;
    explicit Slicing(const OrgSpec& spec)
        : column_bits(log2_exact(spec.page_size_bits / 8 / kLineBytes, "lines per row")),
          bank_bits(log2_exact(spec.banks, "bank count")),
          row_bits(log2_exact(spec.rows_per_bank, "rows per bank")) {}
};

constexpr int kOffsetBits = 6;
static_assert((1 << kOffsetBits) == kLineBytes);

}  // namespace

DecodedAddress decode_address(std::uint64_t addr, const OrgSpec& spec) {
    const Slicing s(spec);
    std::uint64_t x = addr >> kOffsetBits;
    DecodedAddress d;
    d.column = int(x & ((1ull << s.column_bits) - 1));
    x >>= s.column_bits;
    d.bank = int(x & ((1ull << s.bank_bits) - 1));
    x >>= s.bank_bits;
    d.row = std::int64_t(x & ((1ull << s.row_bits) - 1));
    return d;
}

std::uint64_t encode_address(const DecodedAddress& d, const OrgSpec& spec) {
    const Slicing s(spec);
    std::uint64_t x = std::uint64_t(d.row);
    x = (x << s.bank_bits) | std::uint64_t(d.bank);
    x = (x << s.column_bits) | std::uint64_t(d.column);
    return x << kOffsetBits;
}

TimingPs TimingPs::from(const TimingParams& t) {
    auto ps = [](double s) { return Ps(std::llround(s * 1e12)); };
    TimingPs q;
    q.t_rcd = ps(t.t_rcd);
    q.t_cas = ps(t.t_cas);
    q.t_rp = ps(t.t_rp);
    q.t_ras = ps(t.t_ras);
    q.t_rc = q.t_ras + q.t_rp;
    q.t_faw = ps(t.t_faw);
    q.t_refi = ps(t.t_refi);
    q.t_burst = ps(t.t_burst);
    return q;
}

const char* to_string(Cmd c) {
    switch (c) {
        case Cmd::ACT: return "ACT";
        case Cmd::RD: return "RD";
        case Cmd::WR: return "WR";
        case Cmd::PRE: return "PRE";
        case Cmd::REF: return "REF";
    }
    return "?";
}

namespace {

constexpr Ps kNever = std::numeric_limits<Ps>::max();

class Controller {
public:
    Controller(const std::vector<MemRequest>& trace, const OrgSpec& spec, const TimingPs& t,
               const SimConfig& cfg)
        : trace_(trace), t_(t), cfg_(cfg), banks_(std::size_t(spec.banks)) {
        for (std::size_t i = 0; i < trace.size(); ++i) {
            if (i && trace[i].arrival_cycle < trace[i - 1].arrival_cycle)
                throw InvalidConfig("trace is not sorted by arrival cycle");
            if (trace[i].arrival_cycle < 0) throw InvalidConfig("negative arrival cycle");
            const auto d = decode_address(trace[i].address, spec);
            banks_[std::size_t(d.bank)].queue.push_back({i, d.row});
        }
        remaining_ = trace.size();
        next_ref_ = t_.t_refi;
    }

    void run() {
        while (step()) {
        }
        if (remaining_ != 0) throw TimingViolation("scheduler stalled with requests outstanding");
    }

    SimStats stats;
    std::vector<Command> log;
    Ps last_completion = 0;

private:
    struct Pending {
        std::size_t index;
        std::int64_t row;
    };
    struct Bank {
        std::deque<Pending> queue;
        bool open = false;
        bool column_done = false;
        std::int64_t row = -1;
        std::size_t served = 0;  // request behind the open row
        Ps act = 0;
        Ps next_act = 0;  // max(ACT + tRC, PRE + tRP, refresh end)
    };

    struct Choice {
        Ps time = kNever;
        std::int64_t order = 0;
        Cmd cmd = Cmd::ACT;
        int bank = -1;
        bool better_than(const Choice& o) const {
            return time < o.time || (time == o.time && order < o.order);
        }
    };

    Ps arrival(std::size_t i) const { return trace_[i].arrival_cycle * kCyclePs; }

    Ps faw_ready() const {
        return acts_seen_ < 4 ? 0 : faw_[acts_seen_ % 4] + t_.t_faw;
    }

    bool refresh_pending() const {
        if (!cfg_.refresh) return false;
        return remaining_ > 0 || next_ref_ <= std::max(cfg_.min_duration, last_completion);
    }

    bool step() {
        const bool ref_pending = refresh_pending();
        Choice best;

        if (ref_pending) {
            bool all_closed = true;
            Ps t = std::max(next_ref_, cmd_free_);
            for (const auto& b : banks_) {
                all_closed = all_closed && !b.open;
                t = std::max(t, b.next_act);
            }
            if (all_closed) best = {t, -1, Cmd::REF, -1};
        }

        for (int bi = 0; bi < int(banks_.size()); ++bi) {
            const Bank& b = banks_[std::size_t(bi)];
            if (!b.open && b.queue.empty()) continue;
            Choice c;
            c.bank = bi;
            c.order = std::int64_t(b.open ? b.served : b.queue.front().index);
            if (!b.open) {
                const auto& head = b.queue.front();
                c.cmd = Cmd::ACT;
                c.time = std::max({arrival(head.index), b.next_act, cmd_free_, faw_ready()});
                if (ref_pending && c.time >= next_ref_) continue;  // refresh goes first
            } else if (!b.column_done) {
                const bool rd = trace_[b.served].op == Op::Read;
                c.cmd = rd ? Cmd::RD : Cmd::WR;
                c.time = std::max({b.act + t_.t_rcd, cmd_free_, rd ? data_free_ - t_.t_cas : data_free_});
            } else {
                c.cmd = Cmd::PRE;
                c.time = std::max(b.act + t_.t_ras, cmd_free_);
            }
            if (c.better_than(best)) best = c;
        }

        if (best.time == kNever) return false;
        issue(best);
        return true;
    }

    void issue(const Choice& c) {
        if (c.time < cmd_free_) throw TimingViolation("command bus double-booked");
        Command out{c.time, c.cmd, c.bank, -1};
        switch (c.cmd) {
            case Cmd::REF:
                for (auto& b : banks_) b.next_act = c.time + cfg_.rows_refreshed_per_ref * t_.t_rc;
                next_ref_ += t_.t_refi;
                ++stats.n_refreshes;
                break;
            case Cmd::ACT: {
                Bank& b = banks_[std::size_t(c.bank)];
                if (b.open || c.time < b.next_act || c.time < faw_ready())
                    throw TimingViolation("ACT issued early");
                b.open = true;
                b.column_done = false;
                b.row = b.queue.front().row;
                b.served = b.queue.front().index;
                b.queue.pop_front();
                b.act = c.time;
                faw_[acts_seen_ % 4] = c.time;
                ++acts_seen_;
                ++stats.n_activates;
                out.row = b.row;
                break;
            }
            case Cmd::RD:
            case Cmd::WR: {
                Bank& b = banks_[std::size_t(c.bank)];
                if (c.time < b.act + t_.t_rcd) throw TimingViolation("column command before tRCD");
                b.column_done = true;
                const Ps burst_start = c.cmd == Cmd::RD ? c.time + t_.t_cas : c.time;
                if (burst_start < data_free_) throw TimingViolation("data bus double-booked");
                const Ps done = burst_start + t_.t_burst;
                data_free_ = done;
                const Ps lat = done - arrival(b.served);
                stats.sum_latency += lat;
                stats.max_latency = std::max(stats.max_latency, lat);
                last_completion = std::max(last_completion, done);
                (c.cmd == Cmd::RD ? stats.n_reads : stats.n_writes)++;
                --remaining_;
                out.row = b.row;
                break;
            }
            case Cmd::PRE: {
                Bank& b = banks_[std::size_t(c.bank)];
                if (c.time < b.act + t_.t_ras) throw TimingViolation("PRE before tRAS");
                b.open = false;
                b.next_act = std::max(b.act + t_.t_rc, c.time + t_.t_rp);
                ++stats.n_precharges;
                out.row = b.row;
                break;
            }
        }
        cmd_free_ = c.time + kCyclePs;
        if (cfg_.record_commands) log.push_back(out);
    }

    const std::vector<MemRequest>& trace_;
    TimingPs t_;
    SimConfig cfg_;
    std::vector<Bank> banks_;
    std::size_t remaining_ = 0;
    Ps cmd_free_ = 0;
    Ps data_free_ = 0;
    Ps next_ref_ = 0;
    std::array<Ps, 4> faw_{};
    std::uint64_t acts_seen_ = 0;
};

}  // namespace

SimResult run_simulation(const std::vector<MemRequest>& trace, const OrgSpec& spec,
                         const TimingParams& timings, const EnergyParams& energies,
                         const SimConfig& cfg) {
    spec.validate();
    if (cfg.rows_refreshed_per_ref <= 0) throw InvalidConfig("rows_refreshed_per_ref must be positive");
    if (cfg.min_duration < 0) throw InvalidConfig("min_duration must be non-negative");
    const TimingPs t = TimingPs::from(timings);
    if (t.t_refi <= cfg.rows_refreshed_per_ref * t.t_rc && cfg.refresh)
        throw InvalidConfig("refresh interval shorter than the refresh blocking time");

    Controller ctl(trace, spec, t, cfg);
    ctl.run();

    SimResult r;
    r.stats = ctl.stats;
    r.commands = std::move(ctl.log);
    const Ps wall = std::max(cfg.min_duration, ctl.last_completion);
    auto& s = r.stats;
    const std::uint64_t accesses = s.n_reads + s.n_writes;
    s.wall_time_ns = double(wall) / 1e3;
    if (accesses) s.avg_access_latency_ns = double(s.sum_latency) / double(accesses) / 1e3;

    if (wall > 0) {
        const double wall_s = double(wall) * 1e-12;
        s.throughput_bits_per_s = double(accesses) * kLineBytes * 8 / wall_s;
        r.power = aggregate_power({s.n_activates, s.n_reads, s.n_writes, s.n_refreshes}, energies, wall_s);
    } else {
        r.power.p_background = r.power.p_total = energies.p_background;
    }
    if (accesses)
        r.edp = compute_edp(r.power, s.throughput_bits_per_s, s.avg_access_latency_ns * 1e-9);
    return r;
}

}  // namespace m3dram::sim
