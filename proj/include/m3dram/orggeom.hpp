#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace m3dram {

/// Lengths measured in multiples of the feature size F.
using LengthF = std::int64_t;

struct TechNode {
    double feature_size_nm = 22.0;
    double vdd = 1.2;  // volts

    double feature_size_mm() const { return feature_size_nm * 1e-6; }
    void validate() const;
};

/// Declarative description of one DRAM organization.
struct OrgSpec {
    std::string name;
    int cells_per_local_bitline = 512;
    bool is_m3d = false;
    int banks = 8;
    int rows_per_bank = 65536;
    int tiles_per_subarray = 32;
    int cells_per_local_wordline = 512;
    int page_size_bits = 16384;

    int subarrays_per_bank() const { return rows_per_bank / cells_per_local_bitline; }
    /// Bitlines that open together on one ACT (one per column of the row).
    std::int64_t active_bitlines() const {
        return std::int64_t{tiles_per_subarray} * cells_per_local_wordline;
    }
    std::uint64_t capacity_bits() const {
        return std::uint64_t(banks) * std::uint64_t(rows_per_bank) * std::uint64_t(page_size_bits);
    }

    /// Stable hash over every structural field; used to detect mixed-up inputs.
    std::uint64_t fingerprint() const;
    void validate() const;

    static OrgSpec ddr4(int cells_per_bitline);
    static OrgSpec m3d(int cells_per_bitline);
};

/// Canonical names are "ddr4-<N>" and "m3d-<N>".
std::string canonical_name(int cells_per_bitline, bool is_m3d);

/// The ten built-in organizations, 2D first then M3D, each in 512..32 order.
std::vector<OrgSpec> builtin_orgs();

struct PeripheralDims {
    LengthF sa_height = 117;
    LengthF sa_pitch = 6;
    LengthF precharge_height = 90;
    LengthF write_driver_height = 27;
    LengthF residual_strip_height = 23;
    LengthF cell_area = 6;  // F^2
    LengthF cell_bitline_pitch = 2;
    LengthF cell_wordline_pitch = 3;
    double miv_footprint_mm2 = 1.96e-9;

    /// Height of the SA/precharge/write-driver strip that M3D moves to the bottom tier.
    LengthF peripheral_strip_height() const {
        return sa_height + precharge_height + write_driver_height;
    }
    void validate() const;
};

struct GeometryReport {
    std::string org;
    LengthF local_bitline_length = 0;
    LengthF global_bitline_length = 0;
    LengthF subarray_height = 0;
    LengthF subarray_width = 0;
    LengthF bank_height = 0;
    int subarrays_per_bank = 0;
    double subarray_area_mm2 = 0;
    double bank_area_mm2 = 0;
    double die_area_mm2 = 0;
    std::int64_t miv_count_per_bank = 0;
    double miv_area_per_bank_mm2 = 0;
    double cell_density_per_mm2 = 0;
    std::uint64_t spec_fingerprint = 0;
};

LengthF local_bitline_length(const OrgSpec& spec, const PeripheralDims& dims);
LengthF derive_subarray_height(const OrgSpec& spec, const PeripheralDims& dims);
LengthF derive_global_bitline_length(const OrgSpec& spec, const PeripheralDims& dims);
std::int64_t count_mivs(const OrgSpec& spec);
GeometryReport compute_areas(const OrgSpec& spec, const PeripheralDims& dims, const TechNode& tech);

}  // namespace m3dram
