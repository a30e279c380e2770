#include "impnet/io.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace impnet {

namespace {

static_assert(std::endian::native == std::endian::little,
              "container I/O assumes a little-endian host");

void put_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t get_u32(std::istream& in, const char* what) {
    std::uint32_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
        throw IoError(std::string("truncated container while reading ") + what);
    }
    return v;
}

void put_magic(std::ostream& out, const char magic[4]) { out.write(magic, 4); }

void expect_magic(std::istream& in, const char magic[4], const char* name) {
    char buf[4] = {};
    if (!in.read(buf, 4) || std::memcmp(buf, magic, 4) != 0) {
        throw IoError(std::string("bad magic, not a ") + name + " container");
    }
}

void put_dims(std::ostream& out, const Shape& s) {
    put_u32(out, static_cast<std::uint32_t>(s.freq_bins));
    put_u32(out, static_cast<std::uint32_t>(s.time_steps));
    put_u32(out, static_cast<std::uint32_t>(s.maps));
}

Tensor read_body(std::istream& in) {
    std::uint32_t f = get_u32(in, "freq_bins");
    std::uint32_t t = get_u32(in, "time_steps");
    std::uint32_t m = get_u32(in, "maps");
    if (f == 0 || t == 0 || m == 0) {
        throw IoError("container declares a zero dimension");
    }
    Tensor out((Shape(f, t, m)));
    if (!in.read(reinterpret_cast<char*>(out.data()),
                 static_cast<std::streamsize>(out.size() * sizeof(double)))) {
        throw IoError("truncated container while reading tensor values");
    }
    return out;
}

}  // namespace

void write_tensor(std::ostream& out, const Tensor& t) {
    put_magic(out, "IMPT");
    put_u32(out, 1);
    put_dims(out, t.shape());
    out.write(reinterpret_cast<const char*>(t.data()),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
}

Tensor read_tensor(std::istream& in) {
    expect_magic(in, "IMPT", "IMPT");
    std::uint32_t version = get_u32(in, "version");
    if (version != 1) {
        throw IoError("unsupported IMPT version " + std::to_string(version));
    }
    return read_body(in);
}

void save_tensor(const std::filesystem::path& path, const Tensor& t) {
    std::ostringstream buf;
    write_tensor(buf, t);
    write_file_atomic(path, buf.str());
}

Tensor load_tensor(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return read_tensor(in);
}

void save_archive(const std::filesystem::path& path,
                  const std::vector<ArchiveRecord>& records) {
    std::ostringstream buf;
    put_magic(buf, "IMPA");
    put_u32(buf, 1);
    put_u32(buf, static_cast<std::uint32_t>(records.size()));
    for (const auto& rec : records) {
        put_u32(buf, static_cast<std::uint32_t>(rec.id.size()));
        buf.write(rec.id.data(), static_cast<std::streamsize>(rec.id.size()));
        put_dims(buf, rec.tensor.shape());
        buf.write(reinterpret_cast<const char*>(rec.tensor.data()),
                  static_cast<std::streamsize>(rec.tensor.size() * sizeof(double)));
    }
    write_file_atomic(path, buf.str());
}

std::vector<ArchiveRecord> load_archive(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    expect_magic(in, "IMPA", "IMPA");
    std::uint32_t version = get_u32(in, "version");
    if (version != 1) {
        throw IoError("unsupported IMPA version " + std::to_string(version));
    }
    std::uint32_t count = get_u32(in, "record count");
    std::vector<ArchiveRecord> records;
    records.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        std::uint32_t id_len = get_u32(in, "id length");
        std::string id(id_len, '\0');
        if (!in.read(id.data(), id_len)) {
            throw IoError("truncated archive record id");
        }
        records.push_back({std::move(id), read_body(in)});
    }
    return records;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void export_tensor_csv(const std::filesystem::path& path, const Tensor& t) {
    const Shape& s = t.shape();
    std::ostringstream out;
    out << "map,freq";
    for (std::size_t j = 0; j < s.time_steps; ++j) out << ",t" << j;
    out << "\n";
    for (std::size_t m = 0; m < s.maps; ++m) {
        for (std::size_t f = 0; f < s.freq_bins; ++f) {
            out << m << "," << f;
            for (std::size_t j = 0; j < s.time_steps; ++j) {
                out << "," << format_double(t.at(f, j, m));
            }
            out << "\n";
        }
    }
    write_file_atomic(path, out.str());
}

void save_labels_csv(const std::filesystem::path& path,
                     const std::vector<LabelRow>& rows) {
    std::ostringstream out;
    out << "utt_id,label,shift\n";
    for (const auto& r : rows) {
        out << r.id << "," << r.label << "," << r.shift << "\n";
    }
    write_file_atomic(path, out.str());
}

std::vector<LabelRow> load_labels_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "utt_id,label,shift") {
        throw IoError("bad labels CSV header in " + path.string());
    }
    std::vector<LabelRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto c1 = line.find(',');
        auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos) {
            throw IoError("bad labels CSV row: " + line);
        }
        LabelRow row;
        row.id = line.substr(0, c1);
        row.label = std::stoi(line.substr(c1 + 1, c2 - c1 - 1));
        row.shift = std::stoi(line.substr(c2 + 1));
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot create " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw IoError("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string git_blob_sha1(const std::string& bytes) {
    std::string blob = "blob " + std::to_string(bytes.size());
    blob.push_back('\0');
    blob += bytes;

    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!EVP_Digest(blob.data(), blob.size(), digest, &len, EVP_sha1(), nullptr)) {
        throw IoError("SHA-1 digest failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

}  // namespace impnet
