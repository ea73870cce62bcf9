#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "m3dram/orggeom.hpp"
#include "m3dram/simcore.hpp"

namespace m3dram::trace {

using sim::MemRequest;

/// Grammar, one record per line:
///   line    := ws* (record ws*)? ('#' any*)?
///   record  := cycle ws+ op ws+ address
///   cycle   := [0-9]+
///   op      := 'R' | 'W'
///   address := '0x' [0-9a-fA-F]{1,16}
/// Cycles must be non-decreasing.
std::vector<MemRequest> parse_trace(std::istream& in, const std::string& source = "<trace>");

/// Reads a plain or gzip-compressed trace file.
std::vector<MemRequest> read_trace_file(const std::string& path);

void serialize_trace(std::ostream& out, const std::vector<MemRequest>& trace);
void write_trace_file(const std::string& path, const std::vector<MemRequest>& trace);

enum class Kind { Uniform, Stream, Conflict, Mixed };
Kind parse_kind(const std::string& name);
const char* to_string(Kind k);

struct GeneratorConfig {
    double mean_interarrival_cycles = 10.0;  // Poisson arrivals
    double mixed_read_fraction = 0.70;
};

/// Deterministic for a fixed seed.
///   uniform:  random lines over the whole device, reads only
///   stream:   consecutive cache lines, reads only
///   conflict: bank 0 only, a different random row each time
///   mixed:    uniform addresses, 70% reads
std::vector<MemRequest> generate_trace(Kind kind, std::size_t n, std::uint64_t seed,
                                       const OrgSpec& spec, const GeneratorConfig& cfg = {});

}  // namespace m3dram::trace
