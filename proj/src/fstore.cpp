#include "avb/fstore.hpp"

#include <algorithm>

#include "avb/error.hpp"

namespace avb {

FileStore::FileStore(const FileStore& other, VirtualDisk& disk)
    : disk_(&disk),
      entries_(other.entries_),
      interceptors_(other.interceptors_),
      next_id_(other.next_id_) {}

FileId FileStore::create_file(std::string name, FileKind kind, ByteView content) {
    if (find(name)) throw Error(ErrorCode::DuplicateName, name);
    FileEntry entry;
    entry.id = next_id_;
    entry.name = std::move(name);
    entry.kind = kind;
    store_content(entry, content);
    ++next_id_;
    auto [it, _] = entries_.emplace(entry.id, std::move(entry));
    notify_write(it->second);
    return it->second.id;
}

void FileStore::overwrite_file(FileId id, ByteView content) {
    auto it = entries_.find(id);
    if (it == entries_.end()) throw Error(ErrorCode::UnknownFile, "overwrite_file");
    FileEntry& entry = it->second;
    const std::uint32_t sector_size = disk_->sector_size();
    const std::uint64_t needed = (content.size() + sector_size - 1) / sector_size;
    if (needed != entry.sectors.size()) {
        disk_->release(entry.sectors);
        entry.sectors.clear();
        store_content(entry, content);
    } else {
        entry.length = content.size();
        Bytes padded(entry.sectors.size() * sector_size, 0);
        std::copy(content.begin(), content.end(), padded.begin());
        for (std::size_t i = 0; i < entry.sectors.size(); ++i) {
            disk_->write_sectors(entry.sectors[i],
                                 ByteView(padded).subspan(i * sector_size, sector_size));
        }
    }
    notify_write(entry);
}

void FileStore::store_content(FileEntry& entry, ByteView content) {
    const std::uint32_t sector_size = disk_->sector_size();
    const std::uint64_t needed = (content.size() + sector_size - 1) / sector_size;
    entry.length = content.size();
    entry.sectors = disk_->allocate(static_cast<std::uint32_t>(needed));
    Bytes padded(needed * sector_size, 0);
    std::copy(content.begin(), content.end(), padded.begin());
    for (std::size_t i = 0; i < entry.sectors.size(); ++i) {
        disk_->write_sectors(entry.sectors[i],
                             ByteView(padded).subspan(i * sector_size, sector_size));
    }
}

void FileStore::notify_write(const FileEntry& entry) {
    if (write_hook_ && entry.kind != FileKind::AvComponent) write_hook_(entry.id);
}

Bytes FileStore::read_file(FileId id, ReadView view) const {
    auto it = entries_.find(id);
    if (it == entries_.end()) throw Error(ErrorCode::UnknownFile, "read_file");
    if (view == ReadView::Standard) {
        auto sub = interceptors_.find(id);
        if (sub != interceptors_.end()) return sub->second;
    }
    const FileEntry& entry = it->second;
    Bytes out;
    out.reserve(entry.length);
    const std::uint32_t sector_size = disk_->sector_size();
    for (std::size_t i = 0; i < entry.sectors.size() && out.size() < entry.length; ++i) {
        Bytes sector = disk_->read_sectors_raw(entry.sectors[i], 1);
        const std::uint64_t take = std::min<std::uint64_t>(sector_size, entry.length - out.size());
        out.insert(out.end(), sector.begin(), sector.begin() + take);
    }
    return out;
}

void FileStore::rename_file(FileId id, std::string name) {
    auto it = entries_.find(id);
    if (it == entries_.end()) throw Error(ErrorCode::UnknownFile, "rename_file");
    if (auto existing = find(name); existing && *existing != id) {
        throw Error(ErrorCode::DuplicateName, name);
    }
    it->second.name = std::move(name);
}

void FileStore::install_interceptor(FileId id, Bytes substitute) {
    if (!exists(id)) throw Error(ErrorCode::UnknownFile, "install_interceptor");
    interceptors_[id] = std::move(substitute);
}

void FileStore::remove_interceptor(FileId id) {
    if (!exists(id)) throw Error(ErrorCode::UnknownFile, "remove_interceptor");
    interceptors_.erase(id);
}

bool FileStore::has_interceptor(FileId id) const { return interceptors_.contains(id); }

const FileEntry& FileStore::entry(FileId id) const {
    auto it = entries_.find(id);
    if (it == entries_.end()) throw Error(ErrorCode::UnknownFile, "entry");
    return it->second;
}

bool FileStore::exists(FileId id) const { return entries_.contains(id); }

std::optional<FileId> FileStore::find(std::string_view name) const {
    for (const auto& [id, entry] : entries_) {
        if (entry.name == name) return id;
    }
    return std::nullopt;
}

std::vector<FileId> FileStore::file_ids() const {
    std::vector<FileId> out;
    out.reserve(entries_.size());
    for (const auto& [id, _] : entries_) out.push_back(id);
    return out;
}

Bytes rle_compress(ByteView data) {
    Bytes runs;
    std::uint32_t run_count = 0;
    std::size_t i = 0;
    while (i < data.size()) {
        const std::uint8_t value = data[i];
        std::uint32_t count = 0;
        while (i < data.size() && data[i] == value && count < kRleMaxRunLength) {
            ++count;
            ++i;
        }
        put_u16le(runs, static_cast<std::uint16_t>(count));
        runs.push_back(value);
        ++run_count;
    }
    Bytes out{'R', 'L', 'E', '1'};
    put_u32le(out, run_count);
    out.insert(out.end(), runs.begin(), runs.end());
    return out;
}

RleResult rle_decompress_stream(ByteView container, Meter& meter) {
    RleResult result;
    if (container.size() < 8 || container[0] != 'R' || container[1] != 'L' ||
        container[2] != 'E' || container[3] != '1') {
        result.status = RleStatus::FormatError;
        return result;
    }
    const std::uint32_t run_count = get_u32le(container, 4);
    if (container.size() != 8 + static_cast<std::size_t>(run_count) * 3) {
        result.status = RleStatus::FormatError;
        return result;
    }
    for (std::uint32_t r = 0; r < run_count; ++r) {
        const std::size_t off = 8 + static_cast<std::size_t>(r) * 3;
        const std::uint16_t count = get_u16le(container, off);
        const std::uint8_t value = container[off + 2];
        if (count == 0) {
            result.status = RleStatus::FormatError;
            return result;
        }
        result.output.insert(result.output.end(), count, value);
        if (meter.consume(count) == MeterResult::Break) {
            result.status = RleStatus::Break;
            return result;
        }
    }
    result.status = RleStatus::Ok;
    return result;
}

}  // namespace avb
