#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "impnet/io.hpp"
#include "impnet/random.hpp"

using namespace impnet;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    static int counter = 0;
    fs::path dir =
        fs::temp_directory_path() / ("impnet_io_test_" + std::to_string(counter++));
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("tensor container round trip") {
    GaussianSource src(5, 0.0, 1.0);
    Tensor t = gaussian_fill(Shape(4, 3, 2), src);
    fs::path path = temp_dir() / "t.impt";
    save_tensor(path, t);
    CHECK(load_tensor(path) == t);

    // Header layout: magic, version, dims.
    std::ifstream in(path, std::ios::binary);
    char magic[4];
    in.read(magic, 4);
    CHECK(std::string(magic, 4) == "IMPT");
    std::uint32_t version, f, tm, m;
    in.read(reinterpret_cast<char*>(&version), 4);
    in.read(reinterpret_cast<char*>(&f), 4);
    in.read(reinterpret_cast<char*>(&tm), 4);
    in.read(reinterpret_cast<char*>(&m), 4);
    CHECK(version == 1);
    CHECK(f == 4);
    CHECK(tm == 3);
    CHECK(m == 2);
    CHECK(fs::file_size(path) == 20 + 24 * sizeof(double));
}

TEST_CASE("bad container errors") {
    fs::path path = temp_dir() / "bad.impt";
    {
        std::ofstream out(path, std::ios::binary);
        out << "JUNKJUNKJUNK";
    }
    CHECK_THROWS_AS(load_tensor(path), IoError);
    CHECK_THROWS_AS(load_tensor(temp_dir() / "missing.impt"), IoError);
}

TEST_CASE("archive round trip preserves order and ids") {
    GaussianSource src(6, 0.0, 1.0);
    std::vector<ArchiveRecord> records;
    records.push_back({"utt_b", gaussian_fill(Shape(2, 2, 1), src)});
    records.push_back({"utt_a", gaussian_fill(Shape(3, 1, 2), src)});
    fs::path path = temp_dir() / "a.impa";
    save_archive(path, records);

    auto loaded = load_archive(path);
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].id == "utt_b");
    CHECK(loaded[1].id == "utt_a");
    CHECK(loaded[0].tensor == records[0].tensor);
    CHECK(loaded[1].tensor == records[1].tensor);
}

TEST_CASE("csv export shape") {
    Tensor t(Shape(2, 3, 2));
    for (std::size_t i = 0; i < t.size(); ++i) t.values()[i] = static_cast<double>(i);
    fs::path path = temp_dir() / "t.csv";
    export_tensor_csv(path, t);

    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "map,freq,t0,t1,t2");
    std::size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 4);  // maps x freq
}

TEST_CASE("format_double round trips") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, -12345.678901234567, 0.0}) {
        CHECK(std::stod(format_double(v)) == v);
    }
    CHECK(format_double(0.01) == "0.01");
}

TEST_CASE("labels csv round trip") {
    std::vector<LabelRow> rows = {{"train_00000", 0, -2}, {"train_00001", 4, 5}};
    fs::path path = temp_dir() / "labels.csv";
    save_labels_csv(path, rows);
    auto loaded = load_labels_csv(path);
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].id == "train_00000");
    CHECK(loaded[0].label == 0);
    CHECK(loaded[0].shift == -2);
    CHECK(loaded[1].label == 4);
    CHECK(loaded[1].shift == 5);
}

TEST_CASE("git blob sha1 matches git") {
    // echo -n 'hello' | git hash-object --stdin
    CHECK(git_blob_sha1("hello") == "b6fc4c620b67d95f953a5c1c1230aaab5db5a1b0");
    CHECK(git_blob_sha1("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
}
