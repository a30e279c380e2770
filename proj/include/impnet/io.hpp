#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "impnet/tensor.hpp"

namespace impnet {

// Binary containers. Everything is little-endian.
//
// Tensor container ("IMPT"):
//   bytes 0..3   magic "IMPT"
//   u32          version (1)
//   u32 x 3      freq_bins, time_steps, maps
//   f64 x N      values in linear order (frequency fastest, then time, then map)
//
// Archive container ("IMPA"), a keyed sequence of tensors:
//   bytes 0..3   magic "IMPA"
//   u32          version (1)
//   u32          record count
//   per record:  u32 id length, id bytes, u32 x 3 dims, f64 x N values

void write_tensor(std::ostream& out, const Tensor& t);
Tensor read_tensor(std::istream& in);

void save_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor load_tensor(const std::filesystem::path& path);

struct ArchiveRecord {
    std::string id;
    Tensor tensor;
};

void save_archive(const std::filesystem::path& path,
                  const std::vector<ArchiveRecord>& records);
std::vector<ArchiveRecord> load_archive(const std::filesystem::path& path);

// CSV export: one line per (map, freq) row, time across columns, prefixed
// by the map and frequency indices. Values are printed with 17 significant
// digits so a re-parse is bit-exact.
void export_tensor_csv(const std::filesystem::path& path, const Tensor& t);

std::string format_double(double v);  // shortest-round-trip-safe (%.17g)

// Label table: one "utt_id,label,shift" row per sample.
struct LabelRow {
    std::string id;
    int label = 0;
    int shift = 0;
};

void save_labels_csv(const std::filesystem::path& path,
                     const std::vector<LabelRow>& rows);
std::vector<LabelRow> load_labels_csv(const std::filesystem::path& path);

// Writes to <path>.tmp then renames, so readers never see partial files.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

std::string read_file_bytes(const std::filesystem::path& path);

// Git blob hash of the given bytes: SHA-1 over "blob <len>\0" + bytes,
// hex-encoded.
std::string git_blob_sha1(const std::string& bytes);

}  // namespace impnet
