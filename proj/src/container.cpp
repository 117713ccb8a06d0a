#include "tcpdm/container.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "tcpdm/error.hpp"

namespace tcpdm {

namespace {

constexpr char kMagic[4] = {'T', 'C', 'T', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t x) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(x >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

// Copies native scalars into little-endian bytes (and back).
template <typename T>
std::vector<std::uint8_t> pack(const T* src, std::size_t n) {
  std::vector<std::uint8_t> out(n * sizeof(T));
  std::memcpy(out.data(), src, out.size());
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    for (std::size_t i = 0; i < n; ++i) std::reverse(out.begin() + i * sizeof(T), out.begin() + (i + 1) * sizeof(T));
  }
  return out;
}

template <typename T>
void unpack(const std::vector<std::uint8_t>& bytes, T* dst) {
  std::vector<std::uint8_t> tmp = bytes;
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    for (std::size_t i = 0; i < tmp.size() / sizeof(T); ++i)
      std::reverse(tmp.begin() + i * sizeof(T), tmp.begin() + (i + 1) * sizeof(T));
  }
  std::memcpy(dst, tmp.data(), tmp.size());
}

void require(const RawTensor& raw, DType dtype, std::size_t ndim, const char* what) {
  if (raw.dtype != dtype) throw Error(ErrorCode::UnsupportedDtype, std::string(what) + ": wrong dtype");
  if (raw.dims.size() != ndim) {
    throw Error(ErrorCode::ShapeMismatch, std::string(what) + ": expected " + std::to_string(ndim) + " dims");
  }
}

}  // namespace

std::size_t dtype_size(DType d) {
  switch (d) {
    case DType::F32: return 4;
    case DType::F64: return 8;
    case DType::U8: return 1;
  }
  throw Error(ErrorCode::UnsupportedDtype, "unknown dtype");
}

std::size_t RawTensor::element_count() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

std::vector<std::uint8_t> encode_tensor(const RawTensor& t) {
  if (t.dims.size() > 255) throw Error(ErrorCode::ShapeMismatch, "too many dims");
  if (t.payload.size() != t.element_count() * dtype_size(t.dtype)) {
    throw Error(ErrorCode::TruncatedPayload, "payload does not match dims");
  }
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  out.push_back(static_cast<std::uint8_t>(t.dtype));
  out.push_back(static_cast<std::uint8_t>(t.dims.size()));
  for (auto d : t.dims) put_u32(out, d);
  out.insert(out.end(), t.payload.begin(), t.payload.end());
  return out;
}

RawTensor decode_tensor(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(ErrorCode::BadMagic, "not a TCT1 container");
  }
  if (bytes.size() < 6) throw Error(ErrorCode::TruncatedPayload, "header cut short");
  const std::uint8_t code = bytes[4];
  if (code > 2) throw Error(ErrorCode::UnsupportedDtype, "dtype code " + std::to_string(code));
  RawTensor t;
  t.dtype = static_cast<DType>(code);
  const std::size_t ndim = bytes[5];
  const std::size_t header = 6 + 4 * ndim;
  if (bytes.size() < header) throw Error(ErrorCode::TruncatedPayload, "dims cut short");
  for (std::size_t i = 0; i < ndim; ++i) t.dims.push_back(get_u32(bytes.data() + 6 + 4 * i));
  const std::size_t expected = t.element_count() * dtype_size(t.dtype);
  if (bytes.size() - header != expected) {
    throw Error(ErrorCode::TruncatedPayload, "payload is " + std::to_string(bytes.size() - header) +
                                                 " bytes, expected " + std::to_string(expected));
  }
  t.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header), bytes.end());
  return t;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

void write_tensor(const std::filesystem::path& path, const RawTensor& t) {
  write_file_bytes(path, encode_tensor(t));
}

RawTensor read_tensor(const std::filesystem::path& path) { return decode_tensor(read_file_bytes(path)); }

RawTensor to_raw(const Tensor<float>& t) {
  return {DType::F32,
          {static_cast<std::uint32_t>(t.height()), static_cast<std::uint32_t>(t.width()),
           static_cast<std::uint32_t>(t.channels())},
          pack(t.data(), static_cast<std::size_t>(t.size()))};
}

RawTensor to_raw(const Tensor<std::uint8_t>& t) {
  return {DType::U8,
          {static_cast<std::uint32_t>(t.height()), static_cast<std::uint32_t>(t.width()),
           static_cast<std::uint32_t>(t.channels())},
          pack(t.data(), static_cast<std::size_t>(t.size()))};
}

Tensor<float> frame_from_raw(const RawTensor& raw) {
  if (raw.dims.size() != 3) throw Error(ErrorCode::ShapeMismatch, "frame tensors have 3 dims");
  Tensor<float> t(static_cast<int>(raw.dims[0]), static_cast<int>(raw.dims[1]),
                  static_cast<int>(raw.dims[2]));
  if (raw.dtype == DType::F32) {
    unpack(raw.payload, t.data());
  } else if (raw.dtype == DType::F64) {
    Eigen::ArrayXd tmp(t.size());
    unpack(raw.payload, tmp.data());
    t.array() = tmp.cast<float>();
  } else {
    throw Error(ErrorCode::UnsupportedDtype, "frames must be f32 or f64");
  }
  return t;
}

Tensor<std::uint8_t> u8_frame_from_raw(const RawTensor& raw) {
  require(raw, DType::U8, 3, "u8 frame");
  Tensor<std::uint8_t> t(static_cast<int>(raw.dims[0]), static_cast<int>(raw.dims[1]),
                         static_cast<int>(raw.dims[2]));
  unpack(raw.payload, t.data());
  return t;
}

RawTensor to_raw(const Eigen::VectorXf& v) {
  return {DType::F32, {static_cast<std::uint32_t>(v.size())}, pack(v.data(), static_cast<std::size_t>(v.size()))};
}

RawTensor to_raw(const std::vector<double>& v) {
  return {DType::F64, {static_cast<std::uint32_t>(v.size())}, pack(v.data(), v.size())};
}

Eigen::VectorXf vectorf_from_raw(const RawTensor& raw) {
  require(raw, DType::F32, 1, "f32 vector");
  Eigen::VectorXf v(raw.dims[0]);
  unpack(raw.payload, v.data());
  return v;
}

std::vector<double> vectord_from_raw(const RawTensor& raw) {
  require(raw, DType::F64, 1, "f64 vector");
  std::vector<double> v(raw.dims[0]);
  unpack(raw.payload, v.data());
  return v;
}

void write_frame(const std::filesystem::path& path, const Tensor<float>& t) {
  write_tensor(path, to_raw(t));
}

Tensor<float> read_frame(const std::filesystem::path& path) { return frame_from_raw(read_tensor(path)); }

}  // namespace tcpdm
