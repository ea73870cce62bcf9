#include <gtest/gtest.h>
#include <zlib.h>

#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include "m3dram/error.hpp"
#include "m3dram/traceio.hpp"

using namespace m3dram;
using namespace m3dram::trace;

namespace {
const OrgSpec kSpec = OrgSpec::ddr4(512);

std::vector<MemRequest> parse(const std::string& text) {
    std::istringstream in(text);
    return parse_trace(in, "t");
}
}  // namespace

TEST(Parse, SingleRecord) {
    const auto t = parse("0 R 0x0\n");
    ASSERT_EQ(t.size(), 1u);
    EXPECT_EQ(t[0], (MemRequest{0, sim::Op::Read, 0}));
}

TEST(Parse, CommentsBlanksAndWhitespace) {
    const auto t = parse("# header\n\n  3\tW  0xFFff  # trailing\n7 R 0x40\r\n");
    ASSERT_EQ(t.size(), 2u);
    EXPECT_EQ(t[0], (MemRequest{3, sim::Op::Write, 0xffff}));
    EXPECT_EQ(t[1].arrival_cycle, 7);
}

TEST(Parse, Errors) {
    auto line_of = [](const std::string& text) -> std::size_t {
        try {
            parse(text);
        } catch (const TraceParseError& e) {
            return e.line();
        }
        return 0;
    };
    try {
        parse("5 X 0x10\n");
        FAIL();
    } catch (const TraceParseError& e) {
        EXPECT_EQ(e.line(), 1u);
        EXPECT_NE(e.reason().find("op"), std::string::npos);
    }
    EXPECT_EQ(line_of("0 R 0x0\n1 R 10\n"), 2u);
    EXPECT_EQ(line_of("0 R 0x0\n1 R\n"), 2u);
    EXPECT_EQ(line_of("-1 R 0x0\n"), 1u);
    EXPECT_EQ(line_of("0 R 0x0 extra\n"), 1u);
    EXPECT_EQ(line_of("0 R 0x11112222333344445\n"), 1u);
    EXPECT_THROW(parse("9 R 0x0\n# c\n8 R 0x0\n"), OrderViolation);
    EXPECT_EQ(line_of("9 R 0x0\n# c\n8 R 0x0\n"), 3u);
}

TEST(Serialize, RoundTripAllKinds) {
    for (auto k : {Kind::Uniform, Kind::Stream, Kind::Conflict, Kind::Mixed})
        for (std::uint64_t seed : {1, 2, 99}) {
            const auto t = generate_trace(k, 2000, seed, kSpec);
            std::stringstream ss;
            serialize_trace(ss, t);
            EXPECT_EQ(parse_trace(ss), t) << to_string(k) << " " << seed;
        }
}

TEST(Files, PlainAndGzip) {
    const auto dir = std::filesystem::temp_directory_path();
    const auto plain = (dir / "m3dram_trace_test.trc").string();
    const auto gz = (dir / "m3dram_trace_test.trc.gz").string();
    const auto t = generate_trace(Kind::Mixed, 300, 4, kSpec);
    write_trace_file(plain, t);
    EXPECT_EQ(read_trace_file(plain), t);

    std::stringstream ss;
    serialize_trace(ss, t);
    const std::string text = ss.str();
    gzFile f = gzopen(gz.c_str(), "wb");
    ASSERT_NE(f, nullptr);
    gzwrite(f, text.data(), unsigned(text.size()));
    gzclose(f);
    EXPECT_EQ(read_trace_file(gz), t);
    EXPECT_THROW(read_trace_file((dir / "does_not_exist.trc").string()), TraceParseError);
    std::filesystem::remove(plain);
    std::filesystem::remove(gz);
}

TEST(Generate, Deterministic) {
    EXPECT_EQ(generate_trace(Kind::Uniform, 8, 42, kSpec), generate_trace(Kind::Uniform, 8, 42, kSpec));
    EXPECT_NE(generate_trace(Kind::Uniform, 8, 42, kSpec), generate_trace(Kind::Uniform, 8, 43, kSpec));
    EXPECT_THROW(generate_trace(Kind::Uniform, 0, 1, kSpec), InvalidConfig);
}

TEST(Generate, ConflictStaysInOneBank) {
    std::set<std::int64_t> rows;
    const auto t = generate_trace(Kind::Conflict, 1000, 3, kSpec);
    for (std::size_t i = 0; i < t.size(); ++i) {
        const auto d = sim::decode_address(t[i].address, kSpec);
        EXPECT_EQ(d.bank, 0);
        if (i) EXPECT_NE(d.row, sim::decode_address(t[i - 1].address, kSpec).row);
        rows.insert(d.row);
    }
    EXPECT_GT(rows.size(), 1u);
}

TEST(Generate, UniformBalancesBanks) {
    const std::size_t n = 80000;
    std::vector<int> per_bank(8);
    for (const auto& r : generate_trace(Kind::Uniform, n, 7, kSpec)) per_bank[std::size_t(sim::decode_address(r.address, kSpec).bank)]++;
    for (int c : per_bank) EXPECT_NEAR(c, n / 8.0, 0.05 * n / 8.0);
}

TEST(Generate, StreamWalksLines) {
    const auto t = generate_trace(Kind::Stream, 100, 1, kSpec);
    for (std::size_t i = 0; i < t.size(); ++i) {
        EXPECT_EQ(t[i].address, i * 64);
        EXPECT_EQ(t[i].op, sim::Op::Read);
    }
}

TEST(Generate, MixedReadFractionAndArrivals) {
    const auto t = generate_trace(Kind::Mixed, 100000, 9, kSpec);
    std::size_t reads = 0;
    for (const auto& r : t) reads += r.op == sim::Op::Read;
    EXPECT_NEAR(double(reads) / t.size(), 0.70, 0.01);
    const double mean_gap = double(t.back().arrival_cycle) / double(t.size() - 1);
    EXPECT_NEAR(mean_gap, 10.0, 0.1);
    for (std::size_t i = 1; i < t.size(); ++i) ASSERT_GE(t[i].arrival_cycle, t[i - 1].arrival_cycle);
}

TEST(Kind, Names) {
    for (auto k : {Kind::Uniform, Kind::Stream, Kind::Conflict, Kind::Mixed}) EXPECT_EQ(parse_kind(to_string(k)), k);
    EXPECT_THROW(parse_kind("random"), InvalidConfig);
}
