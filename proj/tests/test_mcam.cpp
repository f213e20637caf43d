#include <doctest.h>

#include <cmath>

#include "mlt/mcam.hpp"
#include "mlt/rng.hpp"

using namespace mlt;

namespace {

Eigen::MatrixXd blob(int rows, int cols, int cr, int cc, double sigma) {
  Eigen::MatrixXd grid(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double d2 = (r - cr) * (r - cr) + (c - cc) * (c - cc);
      grid(r, c) = std::exp(-d2 / (2.0 * sigma * sigma));
    }
  }
  return grid;
}

// Random multi-blob fixture; blob centers are kept at least 4 pixels apart
// so every map keeps a pixel at its own maximum after separation.
std::vector<ActivationMap> random_fixture(Rng& rng, int rows = 24, int cols = 24) {
  const int count = rng.uniform_int(2, 4);
  std::vector<std::pair<int, int>> centers;
  while (static_cast<int>(centers.size()) < count) {
    const int r = rng.uniform_int(3, rows - 4);
    const int c = rng.uniform_int(3, cols - 4);
    bool ok = true;
    for (const auto& [pr, pc] : centers) {
      if (std::abs(pr - r) + std::abs(pc - c) < 4) ok = false;
    }
    if (ok) centers.emplace_back(r, c);
  }
  std::vector<ActivationMap> maps;
  for (int m = 0; m < count; ++m) {
    maps.push_back(
        {blob(rows, cols, centers[static_cast<std::size_t>(m)].first,
              centers[static_cast<std::size_t>(m)].second, rng.uniform(1.5, 3.0)),
         m});
  }
  return maps;
}

}  // namespace

TEST_CASE("compute_cam is the weighted sum of feature maps") {
  FeatureStack stack;
  Eigen::MatrixXd a(2, 2), b(2, 2);
  a << 1, 2, 3, 4;
  b << 5, 6, 7, 8;
  stack.push_back(a);
  stack.push_back(b);

  SUBCASE("one-hot weights select a map") {
    Eigen::MatrixXd head(2, 3);
    head << 0, 1, 0, 0, 0, 1;
    CHECK(compute_cam(stack, head, 1).grid == a);
    CHECK(compute_cam(stack, head, 2).grid == b);
    CHECK(compute_cam(stack, head, 0).grid.isZero());
  }
  SUBCASE("general weights combine maps pixelwise") {
    Eigen::MatrixXd head(2, 1);
    head << 2, -1;
    const auto cam = compute_cam(stack, head, 0);
    for (int r = 0; r < 2; ++r) {
      for (int c = 0; c < 2; ++c) {
        CHECK(cam.grid(r, c) == doctest::Approx(2.0 * a(r, c) - b(r, c)).epsilon(1e-15));
      }
    }
    CHECK(cam.class_id == 0);
  }
  SUBCASE("dimension mismatches rejected") {
    Eigen::MatrixXd head(3, 1);
    head << 1, 1, 1;
    CHECK_THROWS_AS(compute_cam(stack, head, 0), std::invalid_argument);
    Eigen::MatrixXd head2(2, 2);
    head2.setOnes();
    CHECK_THROWS_AS(compute_cam(stack, head2, 2), std::invalid_argument);
  }
}

TEST_CASE("minmax_normalize maps to [0,1] and zeroes constants") {
  Eigen::MatrixXd grid(2, 2);
  grid << -1, 0, 1, 3;
  const auto norm = minmax_normalize(grid);
  CHECK(norm(0, 0) == 0.0);
  CHECK(norm(1, 1) == 1.0);
  CHECK(norm(0, 1) == doctest::Approx(0.25));
  CHECK(minmax_normalize(Eigen::MatrixXd::Constant(3, 3, 7.0)).isZero());
}

TEST_CASE("separate_regions base cases") {
  SUBCASE("single map passes through") {
    Eigen::MatrixXd grid(2, 2);
    grid << 0.0, 0.25, 0.5, 1.0;  // already normalized
    const auto out = separate_regions({{grid, 3}});
    REQUIRE(out.size() == 1);
    CHECK(out[0].grid == grid);
    CHECK(out[0].class_id == 3);
  }
  SUBCASE("identical maps are the same region and stay untouched") {
    const auto g = minmax_normalize(blob(8, 8, 4, 4, 2.0));
    const auto out = separate_regions({{g, 0}, {g, 1}});
    CHECK(out[0].grid == g);
    CHECK(out[1].grid == g);
  }
  SUBCASE("disjoint blobs never meet the activation floor together") {
    Eigen::MatrixXd left = Eigen::MatrixXd::Zero(4, 8);
    left.block(1, 1, 2, 2).setConstant(1.0);
    Eigen::MatrixXd right = Eigen::MatrixXd::Zero(4, 8);
    right.block(1, 5, 2, 2).setConstant(1.0);
    const auto out = separate_regions({{left, 0}, {right, 1}});
    CHECK(out[0].grid == left);
    CHECK(out[1].grid == right);
  }
  SUBCASE("mismatched shapes rejected") {
    CHECK_THROWS_AS(
        separate_regions({{Eigen::MatrixXd::Zero(2, 2), 0}, {Eigen::MatrixXd::Zero(3, 3), 1}}),
        std::invalid_argument);
  }
}

TEST_CASE("separate_regions erases shared strong pixels in both maps") {
  // Two ramps overlapping in column 2 with equal strong values.
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, 5);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(3, 5);
  for (int r = 0; r < 3; ++r) {
    a(r, 0) = 1.0;
    a(r, 1) = 0.8;
    a(r, 2) = 0.6;
    b(r, 2) = 0.6;
    b(r, 3) = 0.8;
    b(r, 4) = 1.0;
  }
  const auto out = separate_regions({{a, 0}, {b, 1}});
  for (int r = 0; r < 3; ++r) {
    CHECK(out[0].grid(r, 2) == 0.0);
    CHECK(out[1].grid(r, 2) == 0.0);
    CHECK(out[0].grid(r, 0) == 1.0);
    CHECK(out[1].grid(r, 4) == 1.0);
  }

  SUBCASE("erasure is idempotent") {
    const auto twice = separate_regions(out);
    for (std::size_t m = 0; m < out.size(); ++m) CHECK(twice[m].grid == out[m].grid);
  }
  SUBCASE("composition separates the masks with a boundary between them") {
    const auto region = compose_multi_cam(out);
    CHECK((region.per_class_masks.at(0) && region.per_class_masks.at(1)).count() == 0);
    for (int r = 0; r < 3; ++r) {
      CHECK(region.per_class_masks.at(0)(r, 1));
      CHECK(region.per_class_masks.at(1)(r, 3));
      CHECK(region.boundaries(r, 2));
    }
    CHECK(region.boundaries.count() == 3);  // exactly the erased band
  }
}

TEST_CASE("cosine threshold boundaries") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 4);
  a(0, 0) = 1.0;
  a(0, 1) = 0.5;
  Eigen::MatrixXd b = a;
  b(1, 3) = 0.02;  // tiny deviation: distance > 0 but far below 1e-4? no: any
                   // deviation in an otherwise equal map moves cosine slightly

  SUBCASE("threshold zero compares any non-identical pair") {
    SeparationParams params;
    params.cosine_threshold = 0.0;
    const auto out = separate_regions({{a, 0}, {b, 1}}, params);
    // Pixels (0,0) and (0,1) are equal and strong in both: erased.
    CHECK(out[0].grid(0, 0) == 0.0);
    CHECK(out[1].grid(0, 0) == 0.0);
  }
  SUBCASE("identical maps stay untouched even at threshold zero") {
    SeparationParams params;
    params.cosine_threshold = 0.0;
    const auto out = separate_regions({{a, 0}, {a, 1}});
    CHECK(out[0].grid == minmax_normalize(a));
  }
  SUBCASE("threshold one disables separation entirely") {
    SeparationParams params;
    params.cosine_threshold = 1.0;
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(2, 4);
    c(1, 3) = 1.0;
    c(0, 0) = 0.9;
    const auto out = separate_regions({{a, 0}, {c, 1}}, params);
    CHECK(out[0].grid == minmax_normalize(a));
    CHECK(out[1].grid == minmax_normalize(c));
  }
}

TEST_CASE("compose_multi_cam max-pools and smooths") {
  SUBCASE("single map composes to its smoothed self") {
    const auto g = minmax_normalize(blob(9, 9, 4, 4, 1.5));
    const auto region = compose_multi_cam({{g, 0}});
    CHECK(region.composite == gaussian_smooth(g, 5, 1.0));
    CHECK(region.per_class_masks.at(0).count() == (g.array() > 0.0).count());
    CHECK(region.boundaries.count() == 0);
  }
  SUBCASE("two disjoint blobs give disjoint masks and no boundary") {
    Eigen::MatrixXd left = Eigen::MatrixXd::Zero(6, 12);
    left.block(1, 1, 3, 3).setConstant(1.0);
    Eigen::MatrixXd right = Eigen::MatrixXd::Zero(6, 12);
    right.block(1, 8, 3, 3).setConstant(1.0);
    const auto region = compose_multi_cam({{left, 0}, {right, 1}});
    CHECK(region.per_class_masks.at(0).count() == 9);
    CHECK(region.per_class_masks.at(1).count() == 9);
    CHECK((region.per_class_masks.at(0) && region.per_class_masks.at(1)).count() == 0);
    CHECK(region.boundaries.count() == 0);
  }
  SUBCASE("ties go to the lowest class id") {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(2, 2);
    g(0, 0) = 1.0;
    const auto region = compose_multi_cam({{g, 5}, {g, 2}});
    CHECK(region.per_class_masks.at(2)(0, 0));
    CHECK_FALSE(region.per_class_masks.at(5)(0, 0));
  }
  SUBCASE("duplicate class ids rejected") {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(2, 2);
    CHECK_THROWS_AS(compose_multi_cam({{g, 1}, {g, 1}}), std::invalid_argument);
  }
}

TEST_CASE("pipeline invariants hold on random multi-blob fixtures") {
  Rng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const auto maps = random_fixture(rng);
    const auto separated = separate_regions(maps);

    // Idempotence
    const auto twice = separate_regions(separated);
    for (std::size_t m = 0; m < separated.size(); ++m) {
      CHECK(twice[m].grid == separated[m].grid);
    }

    // Disjoint masks, and compose preserves the max at surviving pixels.
    const auto region = compose_multi_cam(separated);
    Eigen::MatrixXd expected_max = separated.front().grid;
    for (const auto& m : separated) expected_max = expected_max.cwiseMax(m.grid);
    CHECK(region.composite == gaussian_smooth(expected_max, 5, 1.0));

    for (auto it = region.per_class_masks.begin(); it != region.per_class_masks.end(); ++it) {
      auto jt = it;
      for (++jt; jt != region.per_class_masks.end(); ++jt) {
        CHECK((it->second && jt->second).count() == 0);
      }
    }
  }
}

TEST_CASE("gaussian_smooth") {
  SUBCASE("constant maps are unchanged") {
    const Eigen::MatrixXd grid = Eigen::MatrixXd::Constant(7, 5, 3.5);
    const auto out = gaussian_smooth(grid);
    CHECK((out.array() - 3.5).abs().maxCoeff() < 1e-12);
  }
  SUBCASE("impulse response reproduces the kernel and keeps its mass") {
    Eigen::MatrixXd grid = Eigen::MatrixXd::Zero(9, 9);
    grid(4, 4) = 1.0;
    const auto out = gaussian_smooth(grid, 5, 1.0);

    double kernel_sum = 0.0;
    for (int dr = -2; dr <= 2; ++dr) {
      for (int dc = -2; dc <= 2; ++dc) {
        kernel_sum += std::exp(-(dr * dr + dc * dc) / 2.0);
      }
    }
    CHECK(out(4, 4) == doctest::Approx(1.0 / kernel_sum).epsilon(1e-12));
    CHECK(out(4, 6) == doctest::Approx(std::exp(-2.0) / kernel_sum).epsilon(1e-12));
    CHECK(out.sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("two passes of sigma 1 approximate one pass of sigma sqrt(2)") {
    // Documented approximation. The 5x5 truncation clips the sqrt(2) kernel
    // at +-1.41 sigma, so the match degrades with field curvature; on a
    // wide smooth field the interior stays within 2% of the peak.
    const Eigen::MatrixXd grid = blob(41, 41, 20, 20, 8.0);
    const auto twice = gaussian_smooth(gaussian_smooth(grid, 5, 1.0), 5, 1.0);
    const auto once = gaussian_smooth(grid, 5, std::sqrt(2.0));
    const double peak = once.maxCoeff();
    for (int r = 6; r < 35; ++r) {
      for (int c = 6; c < 35; ++c) {
        CHECK(std::abs(twice(r, c) - once(r, c)) <= 0.02 * peak);
      }
    }
  }
  SUBCASE("even kernel sizes rejected") {
    CHECK_THROWS_AS(gaussian_smooth(Eigen::MatrixXd::Zero(3, 3), 4, 1.0), std::invalid_argument);
  }
}
