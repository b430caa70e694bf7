#pragma once

// Binary embedding store, the on-disk format behind the embedding cache.
//
//   header: magic "SBE1" | dimension u32 LE | count u32 LE
//   row:    id_len u32 LE | id bytes (UTF-8) | dimension * f32 LE
//
// Reads are tolerant: a truncated or garbled file yields the rows that
// parse plus warnings, never an exception, so a corrupt cache degrades to
// cache misses instead of killing a run.

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "sembench/errors.hpp"

namespace sembench {

inline constexpr char kEmbeddingStoreMagic[4] = {'S', 'B', 'E', '1'};
inline constexpr std::size_t kEmbeddingStoreHeaderSize = 4 + 4 + 4;

struct EmbeddingStoreEntry {
    std::string id;
    std::vector<float> vector;
};

struct EmbeddingStoreContents {
    int dimension = 0;
    std::vector<EmbeddingStoreEntry> entries;
    std::vector<std::string> warnings;
};

namespace detail {

inline void put_u32_le(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline bool get_u32_le(std::istream& in, std::uint32_t& v) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) {
        return false;
    }
    v = static_cast<std::uint32_t>(b[0]) |
        (static_cast<std::uint32_t>(b[1]) << 8) |
        (static_cast<std::uint32_t>(b[2]) << 16) |
        (static_cast<std::uint32_t>(b[3]) << 24);
    return true;
}

inline std::string encode_store_row(const std::string& id,
                                    const std::vector<float>& vec) {
    std::string row;
    row.reserve(4 + id.size() + 4 * vec.size());
    put_u32_le(row, static_cast<std::uint32_t>(id.size()));
    row.append(id);
    for (float f : vec) {
        put_u32_le(row, std::bit_cast<std::uint32_t>(f));
    }
    return row;
}

} // namespace detail

inline EmbeddingStoreContents
read_embedding_store(const std::filesystem::path& path) {
    EmbeddingStoreContents contents;
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        contents.warnings.push_back("embedding store not readable: " +
                                    path.string());
        return contents;
    }
    char magic[4];
    if (!in.read(magic, 4) ||
        !std::equal(magic, magic + 4, kEmbeddingStoreMagic)) {
        contents.warnings.push_back("embedding store has bad magic, ignoring: " +
                                    path.string());
        return contents;
    }
    std::uint32_t dimension = 0;
    std::uint32_t count = 0;
    if (!detail::get_u32_le(in, dimension) || !detail::get_u32_le(in, count) ||
        dimension == 0) {
        contents.warnings.push_back("embedding store has bad header, ignoring: " +
                                    path.string());
        return contents;
    }
    contents.dimension = static_cast<int>(dimension);
    for (std::uint32_t row = 0; row < count; ++row) {
        std::uint32_t id_len = 0;
        if (!detail::get_u32_le(in, id_len)) {
            contents.warnings.push_back("embedding store truncated at row " +
                                        std::to_string(row) + ", keeping " +
                                        std::to_string(row) + " entries");
            return contents;
        }
        EmbeddingStoreEntry entry;
        entry.id.resize(id_len);
        if (id_len > 0 && !in.read(entry.id.data(), id_len)) {
            contents.warnings.push_back("embedding store truncated at row " +
                                        std::to_string(row) + ", keeping " +
                                        std::to_string(row) + " entries");
            return contents;
        }
        entry.vector.resize(dimension);
        bool ok = true;
        for (std::uint32_t i = 0; i < dimension; ++i) {
            std::uint32_t bits = 0;
            if (!detail::get_u32_le(in, bits)) {
                ok = false;
                break;
            }
            entry.vector[i] = std::bit_cast<float>(bits);
        }
        if (!ok) {
            contents.warnings.push_back("embedding store truncated at row " +
                                        std::to_string(row) + ", keeping " +
                                        std::to_string(row) + " entries");
            return contents;
        }
        contents.entries.push_back(std::move(entry));
    }
    return contents;
}

// Appends rows as they arrive and keeps the header count current, so a
// store interrupted mid-run still reads back cleanly.
class EmbeddingStoreWriter {
public:
    EmbeddingStoreWriter(std::filesystem::path path, int dimension)
        : path_(std::move(path)), dimension_(dimension) {
        if (dimension_ < 1) {
            throw ValidationError("embedding store dimension must be >= 1");
        }
        EmbeddingStoreContents existing;
        if (std::filesystem::exists(path_)) {
            existing = read_embedding_store(path_);
            if (existing.dimension != 0 && existing.dimension != dimension_) {
                throw ValidationError(
                    "embedding store " + path_.string() + " holds dimension " +
                    std::to_string(existing.dimension) + ", cannot append " +
                    std::to_string(dimension_));
            }
        }
        count_ = static_cast<std::uint32_t>(existing.entries.size());
        // Rewrite from the rows that survived the tolerant read. This
        // drops any trailing bytes a crashed run may have left behind.
        {
            std::ofstream out(path_, std::ios::binary | std::ios::trunc);
            if (!out) {
                throw ValidationError("cannot open embedding store for writing: " +
                                      path_.string());
            }
            out.write(kEmbeddingStoreMagic, 4);
            std::string header;
            detail::put_u32_le(header, static_cast<std::uint32_t>(dimension_));
            detail::put_u32_le(header, count_);
            out.write(header.data(),
                      static_cast<std::streamsize>(header.size()));
            for (const auto& e : existing.entries) {
                const std::string row = detail::encode_store_row(e.id, e.vector);
                out.write(row.data(), static_cast<std::streamsize>(row.size()));
            }
        }
        file_.open(path_, std::ios::binary | std::ios::in | std::ios::out);
        if (!file_) {
            throw ValidationError("cannot open embedding store for writing: " +
                                  path_.string());
        }
        file_.seekp(0, std::ios::end);
    }

    void append(const std::string& id, const std::vector<float>& vec) {
        if (static_cast<int>(vec.size()) != dimension_) {
            throw ValidationError("embedding store row dimension " +
                                  std::to_string(vec.size()) + " != " +
                                  std::to_string(dimension_));
        }
        const std::string row = detail::encode_store_row(id, vec);
        file_.seekp(0, std::ios::end);
        file_.write(row.data(), static_cast<std::streamsize>(row.size()));
        ++count_;
        std::string count_bytes;
        detail::put_u32_le(count_bytes, count_);
        file_.seekp(8, std::ios::beg);
        file_.write(count_bytes.data(), 4);
        file_.flush();
    }

    int dimension() const { return dimension_; }
    std::uint32_t count() const { return count_; }

private:
    std::filesystem::path path_;
    int dimension_;
    std::uint32_t count_ = 0;
    std::fstream file_;
};

inline void write_embedding_store(const std::filesystem::path& path,
                                  int dimension,
                                  const std::vector<EmbeddingStoreEntry>& entries) {
    EmbeddingStoreWriter writer(path, dimension);
    for (const auto& e : entries) {
        writer.append(e.id, e.vector);
    }
}

} // namespace sembench
