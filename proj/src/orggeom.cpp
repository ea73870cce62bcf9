#include "m3dram/orggeom.hpp"

#include <bit>
#include <functional>

#include "m3dram/error.hpp"

namespace m3dram {

void TechNode::validate() const {
    if (!(feature_size_nm > 0)) throw InvalidConfig("feature size must be positive");
    if (!(vdd > 0)) throw InvalidConfig("supply voltage must be positive");
}

std::uint64_t OrgSpec::fingerprint() const {
    // FNV-1a over the structural fields; the name is deliberately excluded.
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xffu;
            h *= 1099511628211ull;
        }
    };
    mix(std::uint64_t(cells_per_local_bitline));
    mix(is_m3d ? 1 : 0);
    mix(std::uint64_t(banks));
    mix(std::uint64_t(rows_per_bank));
    mix(std::uint64_t(tiles_per_subarray));
    mix(std::uint64_t(cells_per_local_wordline));
    mix(std::uint64_t(page_size_bits));
    return h;
}

void OrgSpec::validate() const {
    const int n = cells_per_local_bitline;
    if (n < 32 || n > 512 || !std::has_single_bit(unsigned(n)))
        throw InvalidConfig(name + ": cells_per_local_bitline must be one of 32, 64, 128, 256, 512");
    if (banks <= 0 || rows_per_bank <= 0 || tiles_per_subarray <= 0 ||
        cells_per_local_wordline <= 0 || page_size_bits <= 0)
        throw InvalidConfig(name + ": structural counts must be positive");
    if (rows_per_bank % n != 0)
        throw InvalidConfig(name + ": rows_per_bank must be divisible by cells_per_local_bitline");
}

std::string canonical_name(int cells_per_bitline, bool is_m3d) {
    return std::string(is_m3d ? "m3d-" : "ddr4-") + std::to_string(cells_per_bitline);
}

OrgSpec OrgSpec::ddr4(int cells_per_bitline) {
    OrgSpec s;
    s.name = canonical_name(cells_per_bitline, false);
    s.cells_per_local_bitline = cells_per_bitline;
    s.is_m3d = false;
    return s;
}

OrgSpec OrgSpec::m3d(int cells_per_bitline) {
    OrgSpec s;
    s.name = canonical_name(cells_per_bitline, true);
    s.cells_per_local_bitline = cells_per_bitline;
    s.is_m3d = true;
    return s;
}

std::vector<OrgSpec> builtin_orgs() {
    std::vector<OrgSpec> out;
    for (bool m3d : {false, true})
        for (int n : {512, 256, 128, 64, 32}) out.push_back(m3d ? OrgSpec::m3d(n) : OrgSpec::ddr4(n));
    return out;
}

void PeripheralDims::validate() const {
    if (sa_height <= 0 || sa_pitch <= 0 || precharge_height <= 0 || write_driver_height <= 0 ||
        residual_strip_height < 0 || cell_area <= 0 || cell_bitline_pitch <= 0 ||
        cell_wordline_pitch <= 0 || miv_footprint_mm2 < 0)
        throw InvalidConfig("peripheral dimensions must be positive");
}

LengthF local_bitline_length(const OrgSpec& spec, const PeripheralDims& dims) {
    return LengthF{spec.cells_per_local_bitline} * dims.cell_bitline_pitch;
}

LengthF derive_subarray_height(const OrgSpec& spec, const PeripheralDims& dims) {
    LengthF h = local_bitline_length(spec, dims) + dims.residual_strip_height;
    if (!spec.is_m3d) h += dims.peripheral_strip_height();
    return h;
}

LengthF derive_global_bitline_length(const OrgSpec& spec, const PeripheralDims& dims) {
    // The global bitline spans every subarray but the one holding the global SA.
    return LengthF{spec.subarrays_per_bank() - 1} * derive_subarray_height(spec, dims);
}

std::int64_t count_mivs(const OrgSpec& spec) {
    if (!spec.is_m3d) return 0;
    const std::int64_t bitlines = spec.active_bitlines();
    const std::int64_t sa_io = bitlines / 2;  // folded pair per SA
    const std::int64_t wordline_drivers =
        std::int64_t{spec.cells_per_local_bitline} * spec.tiles_per_subarray;
    const std::int64_t per_subarray = bitlines + sa_io + wordline_drivers + 1;
    return per_subarray * spec.subarrays_per_bank();
}

GeometryReport compute_areas(const OrgSpec& spec, const PeripheralDims& dims, const TechNode& tech) {
    spec.validate();
    dims.validate();
    tech.validate();

    GeometryReport g;
    g.org = spec.name;
    g.spec_fingerprint = spec.fingerprint();
    g.subarrays_per_bank = spec.subarrays_per_bank();
    g.local_bitline_length = local_bitline_length(spec, dims);
    g.subarray_height = derive_subarray_height(spec, dims);
    g.global_bitline_length = derive_global_bitline_length(spec, dims);
    g.subarray_width = spec.active_bitlines() * dims.cell_wordline_pitch;
    g.bank_height = LengthF{g.subarrays_per_bank} * g.subarray_height;

    const double f = tech.feature_size_mm();
    const double f2 = f * f;
    g.subarray_area_mm2 = double(g.subarray_width) * double(g.subarray_height) * f2;
    g.bank_area_mm2 = double(g.subarray_width) * double(g.bank_height) * f2;
    g.die_area_mm2 = spec.banks * g.bank_area_mm2;
    g.miv_count_per_bank = count_mivs(spec);
    g.miv_area_per_bank_mm2 = double(g.miv_count_per_bank) * dims.miv_footprint_mm2;
    g.cell_density_per_mm2 = double(spec.capacity_bits()) / g.die_area_mm2;
    return g;
}

}  // namespace m3dram
