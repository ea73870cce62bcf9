#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "m3dram/energy.hpp"
#include "m3dram/orggeom.hpp"
#include "m3dram/timing.hpp"

namespace m3dram::sim {

/// Simulation time base. One controller cycle is 1 ns (1 GHz).
using Ps = std::int64_t;
inline constexpr Ps kCyclePs = 1000;
inline constexpr int kLineBytes = 64;

enum class Op : std::uint8_t { Read, Write };

struct DecodedAddress {
    int bank = 0;
    std::int64_t row = 0;
    int column = 0;  // cache-line slot within the row
    bool operator==(const DecodedAddress&) const = default;
};

struct MemRequest {
    std::int64_t arrival_cycle = 0;
    Op op = Op::Read;
    std::uint64_t address = 0;
    bool operator==(const MemRequest&) const = default;
};

/// Bit slicing, low to high: 6 offset bits | column bits | bank bits | row bits.
/// Column bits cover page_size / 64 B lines; bits above the row field are ignored.
DecodedAddress decode_address(std::uint64_t addr, const OrgSpec& spec);
/// Inverse of decode_address with a zero line offset.
std::uint64_t encode_address(const DecodedAddress& d, const OrgSpec& spec);

/// Timing constraints quantized to picoseconds.
struct TimingPs {
    Ps t_rcd = 0, t_cas = 0, t_rp = 0, t_ras = 0, t_rc = 0, t_faw = 0, t_refi = 0, t_burst = 0;
    Ps close_page_latency() const { return t_rcd + t_cas + t_burst; }
    static TimingPs from(const TimingParams& t);
};

enum class Cmd : std::uint8_t { ACT, RD, WR, PRE, REF };
const char* to_string(Cmd c);

struct Command {
    Ps time = 0;
    Cmd cmd = Cmd::ACT;
    int bank = -1;         // -1 for all-bank REF
    std::int64_t row = -1;
    bool operator==(const Command&) const = default;
};

struct SimConfig {
    bool refresh = true;
    int rows_refreshed_per_ref = 8;  // a REF blocks every bank for this many tRC
    Ps min_duration = 0;             // run at least this long (refreshes still fire)
    bool record_commands = false;
};

struct SimStats {
    std::uint64_t n_reads = 0;
    std::uint64_t n_writes = 0;
    std::uint64_t n_activates = 0;
    std::uint64_t n_precharges = 0;
    std::uint64_t n_refreshes = 0;
    Ps sum_latency = 0;
    Ps max_latency = 0;
    double avg_access_latency_ns = 0;
    double throughput_bits_per_s = 0;
    double wall_time_ns = 0;
};

struct SimResult {
    SimStats stats;
    PowerBreakdown power;
    std::optional<double> edp;  // J*s/bit; empty when nothing was transferred
    std::vector<Command> commands;
};

/// Close-page, FCFS-per-bank controller for one channel / one rank.
/// Throws InvalidConfig for unsorted traces and TimingViolation if an internal
/// constraint check fails.
SimResult run_simulation(const std::vector<MemRequest>& trace, const OrgSpec& spec,
                         const TimingParams& timings, const EnergyParams& energies,
                         const SimConfig& cfg = {});

// ---- command log -------------------------------------------------------------

/// CSV with header `cycle,command,bank,row`; cycle is printed with 3 decimals (ps exact).
void write_command_log(std::ostream& os, const std::vector<Command>& log);
std::vector<Command> read_command_log(std::istream& is, const std::string& source = "<log>");

struct Violation {
    std::size_t index = 0;  // position in the log
    std::string rule;
    std::string detail;
};

/// Re-checks a command log against every timing and protocol rule. Written
/// independently of the scheduler so that it can act as its oracle.
std::vector<Violation> validate_command_log(const std::vector<Command>& log, const TimingPs& t,
                                            int banks, int rows_refreshed_per_ref = 8);

/// Largest number of ACTs found in any half-open window of length `window`.
int max_acts_in_window(const std::vector<Command>& log, Ps window);

}  // namespace m3dram::sim
