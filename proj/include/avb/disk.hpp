#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <vector>

#include "avb/error.hpp"
#include "avb/types.hpp"

namespace avb {

/// Sector-addressed disk. Every write marks the touched sectors' archive bits;
/// only a caller holding the bound token may read or clear them. The boot
/// pointer models where the standard (interceptable) BIOS view of the MBR
/// points; raw reads ignore it.
class VirtualDisk {
public:
    VirtualDisk(std::uint32_t sector_count, std::uint32_t sector_size);

    std::uint32_t sector_count() const { return sector_count_; }
    std::uint32_t sector_size() const { return sector_size_; }

    /// One-shot binding of the authorization secret; rebinding with a
    /// different value is refused.
    void bind_token(AuthToken token);

    void write_sectors(SectorIndex start, ByteView data);
    Bytes read_sectors_raw(SectorIndex start, std::uint32_t n) const;

    /// Standard-BIOS view of the MBR: content of the sector the boot pointer
    /// names. A facade attack redirects this while raw sector 0 stays put.
    Bytes read_mbr_standard() const;

    SectorIndex boot_pointer() const { return boot_pointer_; }
    void set_boot_pointer(SectorIndex s);

    std::set<SectorIndex> changed_sectors(AuthToken token) const;
    void clear_archive_bits(const std::set<SectorIndex>& sectors, AuthToken token);
    bool sector_dirty(SectorIndex s) const;

    /// First-fit allocation of n sectors (not necessarily contiguous).
    std::vector<SectorIndex> allocate(std::uint32_t n);
    std::optional<SectorIndex> allocate_one();
    void release(const std::vector<SectorIndex>& sectors);
    bool sector_allocated(SectorIndex s) const;
    std::uint32_t free_sector_count() const;

private:
    void require_token(AuthToken token) const;

    std::uint32_t sector_count_;
    std::uint32_t sector_size_;
    Bytes data_;
    std::vector<bool> archive_bits_;
    std::vector<bool> free_map_;
    SectorIndex boot_pointer_ = 0;
    std::optional<AuthToken> token_;
};

}  // namespace avb
