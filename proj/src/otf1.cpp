#include "otflow/otf1.hpp"

#include <bit>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>

#ifdef _WIN32
#include <io.h>
#else
#include <unistd.h>
#endif

namespace otflow {

static_assert(std::endian::native == std::endian::little,
              "OTF1 writer assumes a little-endian host");

namespace {

void append_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t read_u32(const std::vector<std::uint8_t>& in, std::size_t off) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[off + i]) << (8 * i);
    return v;
}

}  // namespace

std::size_t Otf1Tensor::element_count() const {
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return dims.empty() ? 0 : n;
}

std::vector<std::uint8_t> otf1_encode(const Otf1Tensor& t) {
    if (t.values.size() != t.element_count()) {
        throw FormatError("payload size does not match dims");
    }
    std::vector<std::uint8_t> out;
    out.reserve(8 + 4 * t.dims.size() + 8 * t.values.size());
    out.push_back('O');
    out.push_back('T');
    out.push_back('F');
    out.push_back('1');
    append_u32(out, static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) append_u32(out, d);
    const std::size_t payload = 8 * t.values.size();
    const std::size_t head = out.size();
    out.resize(head + payload);
    if (payload > 0) std::memcpy(out.data() + head, t.values.data(), payload);
    return out;
}

Otf1Tensor otf1_decode(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 8 || bytes[0] != 'O' || bytes[1] != 'T' ||
        bytes[2] != 'F' || bytes[3] != '1') {
        throw FormatError("bad OTF1 magic");
    }
    const std::uint32_t rank = read_u32(bytes, 4);
    if (rank > 8) throw FormatError("implausible OTF1 rank");
    std::size_t off = 8;
    if (bytes.size() < off + 4 * rank) throw FormatError("truncated OTF1 header");
    Otf1Tensor t;
    t.dims.resize(rank);
    std::size_t count = rank == 0 ? 0 : 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
        t.dims[i] = read_u32(bytes, off);
        off += 4;
        count *= t.dims[i];
    }
    if (bytes.size() != off + 8 * count) throw FormatError("truncated OTF1 payload");
    t.values.resize(count);
    if (count > 0) std::memcpy(t.values.data(), bytes.data() + off, 8 * count);
    for (double v : t.values) {
        if (!std::isfinite(v)) throw FormatError("non-finite value in OTF1 payload");
    }
    return t;
}

void otf1_save(const std::string& path, const Otf1Tensor& t) {
    atomic_write_file(path, otf1_encode(t));
}

Otf1Tensor otf1_load(const std::string& path) {
    return otf1_decode(read_file_bytes(path));
}

Otf1Tensor otf1_from_vector(const Vector& v) {
    Otf1Tensor t;
    t.dims = {static_cast<std::uint32_t>(v.dim())};
    t.values = v.raw();
    return t;
}

Otf1Tensor otf1_from_matrix(const Matrix& m) {
    Otf1Tensor t;
    t.dims = {static_cast<std::uint32_t>(m.rows()),
              static_cast<std::uint32_t>(m.cols())};
    t.values = m.raw();
    return t;
}

Otf1Tensor otf1_from_image(const GridImage& img) {
    Otf1Tensor t;
    t.dims = {static_cast<std::uint32_t>(img.height()),
              static_cast<std::uint32_t>(img.width()),
              static_cast<std::uint32_t>(img.channels())};
    t.values = img.raw();
    return t;
}

Vector otf1_to_vector(const Otf1Tensor& t) {
    if (t.dims.size() != 1) throw FormatError("expected rank-1 tensor");
    return Vector::from(t.values);
}

Matrix otf1_to_matrix(const Otf1Tensor& t) {
    if (t.dims.size() != 2) throw FormatError("expected rank-2 tensor");
    Matrix m(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1]));
    m.raw() = t.values;
    return m;
}

GridImage otf1_to_image(const Otf1Tensor& t) {
    if (t.dims.size() == 2) {
        GridImage img(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1]));
        img.raw() = t.values;
        return img;
    }
    if (t.dims.size() != 3) throw FormatError("expected rank-2 or rank-3 tensor");
    GridImage img(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1]),
                  static_cast<int>(t.dims[2]));
    img.raw() = t.values;
    return img;
}

void atomic_write_file(const std::string& path,
                       const std::vector<std::uint8_t>& bytes) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(target.parent_path(), ec);
    }
    const std::string tmp = path + ".tmp";
    std::FILE* f = std::fopen(tmp.c_str(), "wb");
    if (!f) throw IoError("cannot open " + tmp + " for writing");
    bool ok = bytes.empty() ||
              std::fwrite(bytes.data(), 1, bytes.size(), f) == bytes.size();
    ok = std::fflush(f) == 0 && ok;
#ifndef _WIN32
    ok = fsync(fileno(f)) == 0 && ok;
#endif
    ok = std::fclose(f) == 0 && ok;
    if (!ok) {
        std::remove(tmp.c_str());
        throw IoError("failed writing " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::remove(tmp.c_str());
        throw IoError("failed renaming " + tmp + " to " + path);
    }
}

void atomic_write_text(const std::string& path, const std::string& text) {
    atomic_write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw IoError("cannot open " + path);
    std::fseek(f, 0, SEEK_END);
    const long size = std::ftell(f);
    std::fseek(f, 0, SEEK_SET);
    std::vector<std::uint8_t> bytes(size > 0 ? static_cast<std::size_t>(size) : 0);
    const std::size_t got = bytes.empty() ? 0 : std::fread(bytes.data(), 1, bytes.size(), f);
    std::fclose(f);
    if (got != bytes.size()) throw IoError("short read on " + path);
    return bytes;
}

std::string fnv1a_hex(const std::vector<std::uint8_t>& bytes) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= 0x100000001B3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

std::string file_digest(const std::string& path) {
    return fnv1a_hex(read_file_bytes(path));
}

}  // namespace otflow
