// Command-log serialization and the post-hoc protocol checker. Nothing here
// depends on the scheduler's internals.
#include <algorithm>
#include <charconv>
#include <cstdio>
#include <deque>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "m3dram/error.hpp"
#include "m3dram/simcore.hpp"

namespace m3dram::sim {

void write_command_log(std::ostream& os, const std::vector<Command>& log) {
    os << "cycle,command,bank,row\n";
    char frac[8];
    for (const auto& c : log) {
        std::snprintf(frac, sizeof frac, "%03lld", static_cast<long long>(c.time % 1000));
        os << c.time / 1000 << '.' << frac << ',' << to_string(c.cmd) << ',' << c.bank << ','
           << c.row << '\n';
    }
}

namespace {

template <class T>
bool parse_int(std::string_view s, T& out) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size();
}

bool parse_cycle(std::string_view s, Ps& out) {
    const auto dot = s.find('.');
    std::int64_t whole = 0, frac = 0;
    if (!parse_int(s.substr(0, dot), whole) || whole < 0) return false;
    if (dot != std::string_view::npos) {
        auto f = s.substr(dot + 1);
        if (f.empty() || f.size() > 3 || !parse_int(f, frac) || frac < 0) return false;
        for (std::size_t k = f.size(); k < 3; ++k) frac *= 10;
    }
    out = whole * 1000 + frac;
    return true;
}

}  // namespace

std::vector<Command> read_command_log(std::istream& is, const std::string& source) {
    std::vector<Command> log;
    std::string line;
    std::size_t n = 0;
    while (std::getline(is, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (n == 1 && line.rfind("cycle,", 0) == 0) continue;
        std::vector<std::string_view> f;
        std::string_view rest(line);
        for (std::size_t pos; (pos = rest.find(',')) != std::string_view::npos; rest.remove_prefix(pos + 1))
            f.push_back(rest.substr(0, pos));
        f.push_back(rest);
        if (f.size() != 4) throw ParseError(source, n, "expected 4 comma-separated fields");
        Command c;
        if (!parse_cycle(f[0], c.time)) throw ParseError(source, n, "bad cycle '" + std::string(f[0]) + "'");
        if (f[1] == "ACT") c.cmd = Cmd::ACT;
        else if (f[1] == "RD") c.cmd = Cmd::RD;
        else if (f[1] == "WR") c.cmd = Cmd::WR;
        else if (f[1] == "PRE") c.cmd = Cmd::PRE;
        else if (f[1] == "REF") c.cmd = Cmd::REF;
        else throw ParseError(source, n, "unknown command '" + std::string(f[1]) + "'");
        if (!parse_int(f[2], c.bank)) throw ParseError(source, n, "bad bank");
        if (!parse_int(f[3], c.row)) throw ParseError(source, n, "bad row");
        log.push_back(c);
    }
    return log;
}

std::vector<Violation> validate_command_log(const std::vector<Command>& log, const TimingPs& t,
                                            int banks, int rows_refreshed_per_ref) {
    constexpr Ps kMin = std::numeric_limits<Ps>::min() / 4;
    struct BankTrack {
        bool open = false;
        std::int64_t row = -1;
        Ps act = kMin, pre = kMin, blocked_until = kMin;
        int columns = 0;
    };
    std::vector<BankTrack> bank(std::size_t(std::max(banks, 0)));
    std::vector<Violation> out;
    std::deque<Ps> recent_acts;
    std::vector<std::pair<Ps, Ps>> bursts;

    auto flag = [&](std::size_t i, const char* rule, const std::string& detail) {
        out.push_back({i, rule, detail});
    };
    auto ns = [](Ps p) { return std::to_string(double(p) / 1000.0) + " ns"; };

    for (std::size_t i = 0; i < log.size(); ++i) {
        const Command& c = log[i];
        if (i > 0) {
            if (c.time < log[i - 1].time) flag(i, "order", "log is not time-ordered");
            else if (c.time - log[i - 1].time < kCyclePs) flag(i, "command-bus", "two commands within one cycle");
        }
        if (c.cmd == Cmd::REF) {
            for (int b = 0; b < banks; ++b) {
                const auto& bk = bank[std::size_t(b)];
                if (bk.open) flag(i, "REF-open", "bank " + std::to_string(b) + " still open");
                if (c.time - bk.pre < t.t_rp) flag(i, "tRP", "REF too soon after PRE on bank " + std::to_string(b));
                if (c.time < bk.blocked_until) flag(i, "refresh-overlap", "REF during previous refresh");
            }
            for (auto& bk : bank) bk.blocked_until = c.time + Ps(rows_refreshed_per_ref) * t.t_rc;
            continue;
        }
        if (c.bank < 0 || c.bank >= banks) {
            flag(i, "bank", "bank index out of range");
            continue;
        }
        BankTrack& bk = bank[std::size_t(c.bank)];
        switch (c.cmd) {
            case Cmd::ACT:
                if (bk.open) flag(i, "ACT-open", "ACT to an open bank");
                if (c.time - bk.pre < t.t_rp) flag(i, "tRP", "ACT " + ns(c.time - bk.pre) + " after PRE");
                if (c.time - bk.act < t.t_rc) flag(i, "tRC", "ACT " + ns(c.time - bk.act) + " after previous ACT");
                if (c.time < bk.blocked_until) flag(i, "refresh", "ACT while bank is refreshing");
                if (recent_acts.size() == 4 && c.time - recent_acts.front() < t.t_faw)
                    flag(i, "tFAW", "fifth ACT " + ns(c.time - recent_acts.front()) + " after the first");
                recent_acts.push_back(c.time);
                if (recent_acts.size() > 4) recent_acts.pop_front();
                bk.open = true;
                bk.row = c.row;
                bk.act = c.time;
                bk.columns = 0;
                break;
            case Cmd::RD:
            case Cmd::WR: {
                if (!bk.open) flag(i, "closed", "column command to a closed bank");
                if (c.row != bk.row) flag(i, "row", "column command to a row that is not open");
                if (c.time - bk.act < t.t_rcd) flag(i, "tRCD", "column command " + ns(c.time - bk.act) + " after ACT");
                if (++bk.columns > 1) flag(i, "close-page", "more than one column command per activation");
                const Ps start = c.cmd == Cmd::RD ? c.time + t.t_cas : c.time;
                bursts.emplace_back(start, start + t.t_burst);
                break;
            }
            case Cmd::PRE:
                if (!bk.open) flag(i, "PRE-closed", "PRE to a closed bank");
                if (c.time - bk.act < t.t_ras) flag(i, "tRAS", "PRE " + ns(c.time - bk.act) + " after ACT");
                if (bk.columns != 1) flag(i, "close-page", "PRE without exactly one column access");
                bk.open = false;
                bk.pre = c.time;
                break;
            case Cmd::REF:
                break;
        }
    }
    for (int b = 0; b < banks; ++b)
        if (bank[std::size_t(b)].open)
            flag(log.size(), "unterminated", "bank " + std::to_string(b) + " left open");

    std::sort(bursts.begin(), bursts.end());
    for (std::size_t k = 1; k < bursts.size(); ++k)
        if (bursts[k].first < bursts[k - 1].second)
            flag(log.size(), "data-bus", "overlapping bursts at " + ns(bursts[k].first));
    return out;
}

int max_acts_in_window(const std::vector<Command>& log, Ps window) {
    std::vector<Ps> acts;
    for (const auto& c : log)
        if (c.cmd == Cmd::ACT) acts.push_back(c.time);
    std::sort(acts.begin(), acts.end());
    int best = 0;
    std::size_t lo = 0;
    for (std::size_t hi = 0; hi < acts.size(); ++hi) {
        while (acts[hi] - acts[lo] >= window) ++lo;
        best = std::max(best, int(hi - lo + 1));
    }
    return best;
}

}  // namespace m3dram::sim
