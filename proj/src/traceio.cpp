#include "m3dram/traceio.hpp"

#include <zlib.h>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "m3dram/error.hpp"

namespace m3dram::trace {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r'; }

std::string_view next_token(std::string_view& s) {
    std::size_t i = 0;
    while (i < s.size() && is_space(s[i])) ++i;
    std::size_t j = i;
    while (j < s.size() && !is_space(s[j])) ++j;
    auto tok = s.substr(i, j - i);
    s.remove_prefix(j);
    return tok;
}

}  // namespace

std::vector<MemRequest> parse_trace(std::istream& in, const std::string& source) {
    std::vector<MemRequest> out;
    std::string raw;
    std::size_t n = 0;
    while (std::getline(in, raw)) {
        ++n;
        std::string_view line(raw);
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        auto cyc = next_token(line);
        if (cyc.empty()) continue;
        auto op = next_token(line);
        auto addr = next_token(line);
        if (op.empty() || addr.empty()) throw TraceParseError(source, n, "expected '<cycle> <R|W> <0xADDRESS>'");
        if (!next_token(line).empty()) throw TraceParseError(source, n, "trailing characters");

        MemRequest r;
        auto [pc, ec] = std::from_chars(cyc.data(), cyc.data() + cyc.size(), r.arrival_cycle);
        if (ec != std::errc() || pc != cyc.data() + cyc.size() || r.arrival_cycle < 0)
            throw TraceParseError(source, n, "bad cycle '" + std::string(cyc) + "'");
        if (op == "R") r.op = sim::Op::Read;
        else if (op == "W") r.op = sim::Op::Write;
        else throw TraceParseError(source, n, "bad op '" + std::string(op) + "', expected R or W");
        if (addr.size() < 3 || addr.size() > 18 || addr[0] != '0' || (addr[1] != 'x' && addr[1] != 'X'))
            throw TraceParseError(source, n, "bad address '" + std::string(addr) + "'");
        auto hex = addr.substr(2);
        auto [pa, ea] = std::from_chars(hex.data(), hex.data() + hex.size(), r.address, 16);
        if (ea != std::errc() || pa != hex.data() + hex.size())
            throw TraceParseError(source, n, "bad address '" + std::string(addr) + "'");

        if (!out.empty() && r.arrival_cycle < out.back().arrival_cycle)
            throw OrderViolation(source, n, "cycle " + std::to_string(r.arrival_cycle) +
                                                " precedes previous cycle " +
                                                std::to_string(out.back().arrival_cycle));
        out.push_back(r);
    }
    return out;
}

std::vector<MemRequest> read_trace_file(const std::string& path) {
    gzFile f = gzopen(path.c_str(), "rb");
    if (!f) throw TraceParseError(path, 0, "cannot open file");
    std::string data;
    char buf[1 << 16];
    int got;
    while ((got = gzread(f, buf, sizeof buf)) > 0) data.append(buf, std::size_t(got));
    int err = 0;
    const char* msg = gzerror(f, &err);
    const bool failed = got < 0 || (err != Z_OK && err != Z_STREAM_END);
    const std::string reason = failed ? msg : "";
    gzclose(f);
    if (failed) throw TraceParseError(path, 0, "read error: " + reason);
    std::istringstream in(data);
    return parse_trace(in, path);
}

void serialize_trace(std::ostream& out, const std::vector<MemRequest>& trace) {
    char line[64];
    for (const auto& r : trace) {
        const int len = std::snprintf(line, sizeof line, "%lld %c 0x%llx\n",
                                      static_cast<long long>(r.arrival_cycle),
                                      r.op == sim::Op::Read ? 'R' : 'W',
                                      static_cast<unsigned long long>(r.address));
        out.write(line, len);
    }
}

void write_trace_file(const std::string& path, const std::vector<MemRequest>& trace) {
    std::ofstream f(path);
    if (!f) throw InvalidConfig("cannot write " + path);
    serialize_trace(f, trace);
}

Kind parse_kind(const std::string& name) {
    if (name == "uniform") return Kind::Uniform;
    if (name == "stream") return Kind::Stream;
    if (name == "conflict") return Kind::Conflict;
    if (name == "mixed") return Kind::Mixed;
    throw InvalidConfig("unknown trace kind '" + name + "' (uniform, stream, conflict, mixed)");
}

const char* to_string(Kind k) {
    switch (k) {
        case Kind::Uniform: return "uniform";
        case Kind::Stream: return "stream";
        case Kind::Conflict: return "conflict";
        case Kind::Mixed: return "mixed";
    }
    return "?";
}

std::vector<MemRequest> generate_trace(Kind kind, std::size_t n, std::uint64_t seed,
                                       const OrgSpec& spec, const GeneratorConfig& cfg) {
    if (n == 0) throw InvalidConfig("trace length must be positive");
    if (!(cfg.mean_interarrival_cycles > 0)) throw InvalidConfig("mean inter-arrival must be positive");
    spec.validate();

    std::mt19937_64 rng(seed);
    std::poisson_distribution<std::int64_t> gap(cfg.mean_interarrival_cycles);
    std::bernoulli_distribution is_read(cfg.mixed_read_fraction);
    const int lines_per_row = int(spec.page_size_bits / 8 / sim::kLineBytes);
    std::uniform_int_distribution<int> bank_d(0, spec.banks - 1), col_d(0, lines_per_row - 1);
    std::uniform_int_distribution<std::int64_t> row_d(0, spec.rows_per_bank - 1);

    std::vector<MemRequest> out;
    out.reserve(n);
    std::int64_t cycle = 0;
    std::int64_t prev_row = -1;
    for (std::size_t i = 0; i < n; ++i) {
        if (i) cycle += gap(rng);
        MemRequest r;
        r.arrival_cycle = cycle;
        sim::DecodedAddress d;
        switch (kind) {
            case Kind::Uniform:
            case Kind::Mixed:
                d.bank = bank_d(rng);
                d.row = row_d(rng);
                d.column = col_d(rng);
                break;
            case Kind::Stream: {
                const std::uint64_t line = i;
                d.column = int(line % std::uint64_t(lines_per_row));
                d.bank = int(line / std::uint64_t(lines_per_row) % std::uint64_t(spec.banks));
                d.row = std::int64_t(line / std::uint64_t(lines_per_row * spec.banks) %
                                     std::uint64_t(spec.rows_per_bank));
                break;
            }
            case Kind::Conflict:
                d.bank = 0;
                do d.row = row_d(rng);
                while (d.row == prev_row);
                d.column = col_d(rng);
                break;
        }
        prev_row = d.row;
        r.address = sim::encode_address(d, spec);
        r.op = kind == Kind::Mixed && !is_read(rng) ? sim::Op::Write : sim::Op::Read;
        out.push_back(r);
    }
    return out;
}

}  // namespace m3dram::trace
