#include "avb/disk.hpp"

#include <algorithm>

namespace avb {

VirtualDisk::VirtualDisk(std::uint32_t sector_count, std::uint32_t sector_size)
    : sector_count_(sector_count), sector_size_(sector_size) {
    if (sector_count < 8 || sector_size < 64) {
        throw Error(ErrorCode::InvalidGeometry, "need at least 8 sectors of at least 64 bytes");
    }
    data_.assign(static_cast<std::size_t>(sector_count) * sector_size, 0);
    archive_bits_.assign(sector_count, false);
    free_map_.assign(sector_count, false);
    free_map_[0] = true;  // sector 0 reserved for the MBR
}

void VirtualDisk::bind_token(AuthToken token) {
    if (token_ && !(*token_ == token)) {
        throw Error(ErrorCode::Unauthorized, "disk already bound to a different token");
    }
    token_ = token;
}

void VirtualDisk::require_token(AuthToken token) const {
    if (!token_ || !(*token_ == token)) {
        throw Error(ErrorCode::Unauthorized, "token does not match");
    }
}

void VirtualDisk::write_sectors(SectorIndex start, ByteView data) {
    if (data.size() % sector_size_ != 0) {
        throw Error(ErrorCode::BadLength, "write must be sector-aligned");
    }
    const std::uint64_t n = data.size() / sector_size_;
    if (static_cast<std::uint64_t>(start) + n > sector_count_) {
        throw Error(ErrorCode::OutOfRange, "write past end of disk");
    }
    std::copy(data.begin(), data.end(), data_.begin() + static_cast<std::size_t>(start) * sector_size_);
    for (std::uint64_t i = 0; i < n; ++i) archive_bits_[start + i] = true;
}

Bytes VirtualDisk::read_sectors_raw(SectorIndex start, std::uint32_t n) const {
    if (static_cast<std::uint64_t>(start) + n > sector_count_) {
        throw Error(ErrorCode::OutOfRange, "read past end of disk");
    }
    const auto begin = data_.begin() + static_cast<std::size_t>(start) * sector_size_;
    return Bytes(begin, begin + static_cast<std::size_t>(n) * sector_size_);
}

Bytes VirtualDisk::read_mbr_standard() const { return read_sectors_raw(boot_pointer_, 1); }

void VirtualDisk::set_boot_pointer(SectorIndex s) {
    if (s >= sector_count_) throw Error(ErrorCode::OutOfRange, "boot pointer past end of disk");
    boot_pointer_ = s;
}

std::set<SectorIndex> VirtualDisk::changed_sectors(AuthToken token) const {
    require_token(token);
    std::set<SectorIndex> out;
    for (SectorIndex i = 0; i < sector_count_; ++i) {
        if (archive_bits_[i]) out.insert(i);
    }
    return out;
}

void VirtualDisk::clear_archive_bits(const std::set<SectorIndex>& sectors, AuthToken token) {
    require_token(token);
    for (SectorIndex s : sectors) {
        if (s >= sector_count_) throw Error(ErrorCode::OutOfRange, "sector index past end of disk");
    }
    for (SectorIndex s : sectors) archive_bits_[s] = false;
}

bool VirtualDisk::sector_dirty(SectorIndex s) const {
    if (s >= sector_count_) throw Error(ErrorCode::OutOfRange, "sector index past end of disk");
    return archive_bits_[s];
}

std::vector<SectorIndex> VirtualDisk::allocate(std::uint32_t n) {
    std::vector<SectorIndex> out;
    out.reserve(n);
    for (SectorIndex i = 0; i < sector_count_ && out.size() < n; ++i) {
        if (!free_map_[i]) out.push_back(i);
    }
    if (out.size() < n) throw Error(ErrorCode::DiskFull, "not enough free sectors");
    for (SectorIndex s : out) free_map_[s] = true;
    return out;
}

std::optional<SectorIndex> VirtualDisk::allocate_one() {
    for (SectorIndex i = 0; i < sector_count_; ++i) {
        if (!free_map_[i]) {
            free_map_[i] = true;
            return i;
        }
    }
    return std::nullopt;
}

void VirtualDisk::release(const std::vector<SectorIndex>& sectors) {
    for (SectorIndex s : sectors) {
        if (s >= sector_count_) throw Error(ErrorCode::OutOfRange, "sector index past end of disk");
    }
    for (SectorIndex s : sectors) free_map_[s] = false;
}

bool VirtualDisk::sector_allocated(SectorIndex s) const {
    if (s >= sector_count_) throw Error(ErrorCode::OutOfRange, "sector index past end of disk");
    return free_map_[s];
}

std::uint32_t VirtualDisk::free_sector_count() const {
    std::uint32_t n = 0;
    for (SectorIndex i = 0; i < sector_count_; ++i) {
        if (!free_map_[i]) ++n;
    }
    return n;
}

}  // namespace avb
