#ifndef MLT_TENSOR_IO_HPP_
#define MLT_TENSOR_IO_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace mlt {

// N-dimensional row-major double tensor backing the "MMTT" file format:
//   magic "MMTT" | version u8 (=1) | ndim u8 | dims ndim x u32 LE |
//   payload row-major f64 LE.
struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<double> data;

  std::size_t element_count() const {
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return n;
  }
};

void write_tensor(const std::string& path, const Tensor& tensor);
Tensor read_tensor(const std::string& path);

Tensor tensor_from_matrix(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_tensor(const Tensor& t);

}  // namespace mlt

#endif  // MLT_TENSOR_IO_HPP_
