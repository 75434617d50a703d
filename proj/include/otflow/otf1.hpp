#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "otflow/image.hpp"
#include "otflow/tensor.hpp"

namespace otflow {

// "OTF1" binary tensor: 4-byte magic, u32 little-endian rank, rank u32 dims,
// then row-major little-endian float64 payload.
struct Otf1Tensor {
    std::vector<std::uint32_t> dims;
    std::vector<double> values;

    std::size_t element_count() const;
};

std::vector<std::uint8_t> otf1_encode(const Otf1Tensor& t);
Otf1Tensor otf1_decode(const std::vector<std::uint8_t>& bytes);

// File helpers; writes are atomic (temp file + fsync + rename).
void otf1_save(const std::string& path, const Otf1Tensor& t);
Otf1Tensor otf1_load(const std::string& path);

Otf1Tensor otf1_from_vector(const Vector& v);
Otf1Tensor otf1_from_matrix(const Matrix& m);
Otf1Tensor otf1_from_image(const GridImage& img);
Vector otf1_to_vector(const Otf1Tensor& t);
Matrix otf1_to_matrix(const Otf1Tensor& t);
GridImage otf1_to_image(const Otf1Tensor& t);

// Atomic byte-level file IO used by every artifact writer.
void atomic_write_file(const std::string& path,
                       const std::vector<std::uint8_t>& bytes);
void atomic_write_text(const std::string& path, const std::string& text);
std::vector<std::uint8_t> read_file_bytes(const std::string& path);

// FNV-1a 64-bit digest, hex-encoded; used by run manifests to pin artifacts.
std::string fnv1a_hex(const std::vector<std::uint8_t>& bytes);
std::string file_digest(const std::string& path);

}  // namespace otflow
