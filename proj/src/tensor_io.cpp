#include "mlt/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace mlt {

namespace {

constexpr char kMagic[4] = {'M', 'M', 'T', 'T'};
constexpr std::uint8_t kVersion = 1;

void put_u32_le(std::ostream& out, std::uint32_t v) {
  const unsigned char bytes[4] = {
      static_cast<unsigned char>(v & 0xff), static_cast<unsigned char>((v >> 8) & 0xff),
      static_cast<unsigned char>((v >> 16) & 0xff), static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

std::uint32_t get_u32_le(std::istream& in) {
  unsigned char bytes[4];
  in.read(reinterpret_cast<char*>(bytes), 4);
  return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
         (static_cast<std::uint32_t>(bytes[2]) << 16) | (static_cast<std::uint32_t>(bytes[3]) << 24);
}

void put_f64_le(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

double get_f64_le(std::istream& in) {
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void write_tensor(const std::string& path, const Tensor& tensor) {
  if (tensor.dims.empty() || tensor.dims.size() > 255) {
    throw std::invalid_argument("tensor must have between 1 and 255 dimensions");
  }
  if (tensor.data.size() != tensor.element_count()) {
    throw std::invalid_argument("tensor payload size does not match dims");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write(kMagic, 4);
  out.put(static_cast<char>(kVersion));
  out.put(static_cast<char>(tensor.dims.size()));
  for (auto d : tensor.dims) put_u32_le(out, d);
  for (double v : tensor.data) put_f64_le(out, v);
  if (!out) throw std::runtime_error("write failed: " + path);
}

Tensor read_tensor(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open tensor file: " + path);

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("bad magic in tensor file: " + path);
  }
  const int version = in.get();
  if (version != kVersion) {
    throw std::runtime_error("unsupported tensor file version in " + path);
  }
  const int ndim = in.get();
  if (ndim <= 0 || !in) throw std::runtime_error("truncated tensor header: " + path);

  Tensor t;
  t.dims.resize(static_cast<std::size_t>(ndim));
  for (auto& d : t.dims) d = get_u32_le(in);
  if (!in) throw std::runtime_error("truncated tensor header: " + path);

  const std::size_t count = t.element_count();
  t.data.resize(count);
  for (std::size_t i = 0; i < count; ++i) t.data[i] = get_f64_le(in);
  if (!in) throw std::runtime_error("truncated tensor payload: " + path);
  if (in.peek() != std::ifstream::traits_type::eof()) {
    throw std::runtime_error("trailing bytes after tensor payload: " + path);
  }
  return t;
}

Tensor tensor_from_matrix(const Eigen::MatrixXd& m) {
  Tensor t;
  t.dims = {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())};
  t.data.resize(static_cast<std::size_t>(m.size()));
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) t.data[k++] = m(r, c);
  return t;
}

Eigen::MatrixXd matrix_from_tensor(const Tensor& t) {
  if (t.dims.size() != 2) throw std::runtime_error("expected a 2-D tensor");
  Eigen::MatrixXd m(t.dims[0], t.dims[1]);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = t.data[k++];
  return m;
}

}  // namespace mlt
