#include "mlt/pgm.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace mlt {

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in) {
  std::string token;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!token.empty()) return token;
      continue;
    }
    token.push_back(static_cast<char>(ch));
  }
  return token;
}

}  // namespace

void write_pgm(const std::string& path, const GrayImage& image) {
  if (image.width < 1 || image.height < 1 ||
      image.pixels.size() != static_cast<std::size_t>(image.width) * image.height) {
    throw std::invalid_argument("inconsistent image dimensions");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "P5\n" << image.width << " " << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

GrayImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open PGM: " + path);
  if (next_token(in) != "P5") throw std::runtime_error("not a binary PGM (P5): " + path);

  GrayImage image;
  try {
    image.width = std::stoi(next_token(in));
    image.height = std::stoi(next_token(in));
    const int maxval = std::stoi(next_token(in));
    if (maxval != 255) throw std::runtime_error("unsupported maxval");
  } catch (const std::exception&) {
    throw std::runtime_error("malformed PGM header: " + path);
  }
  if (image.width < 1 || image.height < 1) throw std::runtime_error("bad PGM size: " + path);

  image.pixels.resize(static_cast<std::size_t>(image.width) * image.height);
  in.read(reinterpret_cast<char*>(image.pixels.data()),
          static_cast<std::streamsize>(image.pixels.size()));
  if (!in) throw std::runtime_error("truncated PGM payload: " + path);
  return image;
}

GrayImage gray_from_grid(const Eigen::MatrixXd& grid) {
  GrayImage image;
  image.height = static_cast<int>(grid.rows());
  image.width = static_cast<int>(grid.cols());
  image.pixels.resize(static_cast<std::size_t>(grid.size()));
  const double lo = grid.minCoeff();
  const double hi = grid.maxCoeff();
  const double scale = hi > lo ? 255.0 / (hi - lo) : 0.0;
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < grid.rows(); ++r) {
    for (Eigen::Index c = 0; c < grid.cols(); ++c) {
      image.pixels[k++] = static_cast<std::uint8_t>(std::lround((grid(r, c) - lo) * scale));
    }
  }
  return image;
}

GrayImage gray_from_mask(const BoolGrid& mask) {
  GrayImage image;
  image.height = static_cast<int>(mask.rows());
  image.width = static_cast<int>(mask.cols());
  image.pixels.resize(static_cast<std::size_t>(mask.size()));
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < mask.rows(); ++r) {
    for (Eigen::Index c = 0; c < mask.cols(); ++c) {
      image.pixels[k++] = mask(r, c) ? 255 : 0;
    }
  }
  return image;
}

BoolGrid mask_from_gray(const GrayImage& image) {
  BoolGrid mask(image.height, image.width);
  for (int r = 0; r < image.height; ++r) {
    for (int c = 0; c < image.width; ++c) mask(r, c) = image.at(r, c) != 0;
  }
  return mask;
}

}  // namespace mlt
