#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <vector>

#include "tcpdm/tensor.hpp"

namespace tcpdm {

enum class DType : std::uint8_t { F32 = 0, F64 = 1, U8 = 2 };

std::size_t dtype_size(DType d);

/// In-memory form of a .tct file:
///   "TCT1" | dtype u8 | ndim u8 | ndim x u32 dims (LE) | row-major LE payload.
struct RawTensor {
  DType dtype = DType::F32;
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> payload;

  std::size_t element_count() const;

  friend bool operator==(const RawTensor&, const RawTensor&) = default;
};

std::vector<std::uint8_t> encode_tensor(const RawTensor& t);
RawTensor decode_tensor(const std::vector<std::uint8_t>& bytes);

void write_tensor(const std::filesystem::path& path, const RawTensor& t);
RawTensor read_tensor(const std::filesystem::path& path);

/// H x W x C frames.
RawTensor to_raw(const Tensor<float>& t);
RawTensor to_raw(const Tensor<std::uint8_t>& t);
Tensor<float> frame_from_raw(const RawTensor& raw);
Tensor<std::uint8_t> u8_frame_from_raw(const RawTensor& raw);

/// 1-D vectors.
RawTensor to_raw(const Eigen::VectorXf& v);
RawTensor to_raw(const std::vector<double>& v);
Eigen::VectorXf vectorf_from_raw(const RawTensor& raw);
std::vector<double> vectord_from_raw(const RawTensor& raw);

void write_frame(const std::filesystem::path& path, const Tensor<float>& t);
Tensor<float> read_frame(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

}  // namespace tcpdm
