#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "avb/budget.hpp"
#include "avb/disk.hpp"
#include "avb/types.hpp"

namespace avb {

enum class FileKind { Executable, Data, CompressedArchive, AvComponent };

enum class ReadView { Raw, Standard };

struct FileEntry {
    FileId id = 0;
    std::string name;
    FileKind kind = FileKind::Data;
    std::vector<SectorIndex> sectors;
    std::uint64_t length = 0;
};

/// File table over a VirtualDisk. Standard reads go through the interceptor
/// table (the rootkit hook); raw reads always return disk bytes. Writes fan
/// out to write_sectors, so archive bits are set no matter who writes.
class FileStore {
public:
    explicit FileStore(VirtualDisk& disk) : disk_(&disk) {}

    /// Rebinds a copied store onto a copied disk (scenario cloning).
    FileStore(const FileStore& other, VirtualDisk& disk);

    FileId create_file(std::string name, FileKind kind, ByteView content);
    void overwrite_file(FileId id, ByteView content);
    Bytes read_file(FileId id, ReadView view) const;
    void rename_file(FileId id, std::string name);

    void install_interceptor(FileId id, Bytes substitute);
    void remove_interceptor(FileId id);
    bool has_interceptor(FileId id) const;

    const FileEntry& entry(FileId id) const;
    bool exists(FileId id) const;
    std::optional<FileId> find(std::string_view name) const;
    std::vector<FileId> file_ids() const;

    VirtualDisk& disk() { return *disk_; }
    const VirtualDisk& disk() const { return *disk_; }

    /// Called after any create/overwrite of a non-AvComponent file; the
    /// engine uses it to keep scan-state bookkeeping current.
    using WriteHook = std::function<void(FileId)>;
    void set_write_hook(WriteHook hook) { write_hook_ = std::move(hook); }

private:
    void store_content(FileEntry& entry, ByteView content);
    void notify_write(const FileEntry& entry);

    VirtualDisk* disk_;
    std::map<FileId, FileEntry> entries_;
    std::map<FileId, Bytes> interceptors_;
    FileId next_id_ = 1;
    WriteHook write_hook_;
};

inline constexpr std::uint32_t kRleMaxRunLength = 65535;

/// "RLE1" magic, u32 LE run count, then (u16 LE count >= 1, u8 value) per run.
Bytes rle_compress(ByteView data);

enum class RleStatus { Ok, Break, FormatError };

struct RleResult {
    RleStatus status = RleStatus::Ok;
    Bytes output;
};

/// Decompresses run by run, charging every produced byte to the meter and
/// stopping the moment it trips. Malformed input yields FormatError, never
/// unbounded work.
RleResult rle_decompress_stream(ByteView container, Meter& meter);

}  // namespace avb
