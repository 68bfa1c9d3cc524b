#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "ftvsr/dct.hpp"
#include "test_util.hpp"

using namespace ftvsr;
using ftvsr::testing::bit_equal;
using ftvsr::testing::max_abs_diff;
using ftvsr::testing::random_tensor;

namespace {

// Direct double sum of the orthonormal 2D DCT-II.
double direct_dct(const Tensor& p, std::size_t u, std::size_t v) {
  const std::size_t b = p.dim(0);
  auto c = [b](std::size_t k) { return k == 0 ? std::sqrt(1.0 / b) : std::sqrt(2.0 / b); };
  double acc = 0.0;
  for (std::size_t x = 0; x < b; ++x)
    for (std::size_t y = 0; y < b; ++y)
      acc += p.at({x, y}) * std::cos((2.0 * x + 1) * u * std::numbers::pi / (2.0 * b)) *
             std::cos((2.0 * y + 1) * v * std::numbers::pi / (2.0 * b));
  return c(u) * c(v) * acc;
}

}  // namespace

TEST(Dct, BasisIsOrthonormal) {
  for (std::size_t b : {1u, 2u, 4u, 8u}) {
    const auto m = dct_basis(b);
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t j = 0; j < b; ++j) {
        double dot = 0.0;
        for (std::size_t x = 0; x < b; ++x) dot += m[i * b + x] * m[j * b + x];
        EXPECT_NEAR(dot, i == j ? 1.0 : 0.0, 1e-12);
      }
  }
}

TEST(Dct, MatchesDirectSum) {
  const Tensor p = random_tensor({4, 4}, 1);
  const Tensor d = dct2(p);
  for (std::size_t u = 0; u < 4; ++u)
    for (std::size_t v = 0; v < 4; ++v) EXPECT_NEAR(d.at({u, v}), direct_dct(p, u, v), 1e-12);
}

TEST(Dct, ConstantPatchIsDcOnly) {
  const Tensor d = dct2(Tensor::full({2, 2}, 0.5));
  EXPECT_NEAR(d.at({0, 0}), 1.0, 1e-15);
  EXPECT_NEAR(d.at({0, 1}), 0.0, 1e-15);
  EXPECT_NEAR(d.at({1, 0}), 0.0, 1e-15);
  EXPECT_NEAR(d.at({1, 1}), 0.0, 1e-15);
}

TEST(Dct, UnitImpulseGivesBasisProducts) {
  std::vector<double> v(16, 0.0);
  v[0] = 1.0;
  const Tensor d = dct2(Tensor::from({4, 4}, v));
  const auto m = dct_basis(4);
  for (std::size_t u = 0; u < 4; ++u)
    for (std::size_t w = 0; w < 4; ++w) EXPECT_NEAR(d.at({u, w}), m[u * 4] * m[w * 4], 1e-15);
}

TEST(Dct, InverseAndParseval) {
  for (std::size_t b : {2u, 4u, 8u}) {
    const Tensor p = random_tensor({b, b}, 10 + b);
    const Tensor d = dct2(p);
    EXPECT_LT(max_abs_diff(idct2(d), p), 1e-12);
    double e1 = 0, e2 = 0;
    for (double x : p.data()) e1 += x * x;
    for (double x : d.data()) e2 += x * x;
    EXPECT_NEAR(e1, e2, 1e-12 * e1);
  }
}

TEST(Dct, RejectsNonSquare) { EXPECT_THROW(dct2(Tensor::zeros({2, 3})), std::invalid_argument); }

TEST(Dct, BlockDctMatchesPerBlockTransform) {
  const Tensor frames = random_tensor({2, 3, 8, 12}, 2);
  const Tensor s = block_dct(frames, 4);
  ASSERT_EQ(s.shape(), (Shape{2, 16, 3, 2, 3}));
  for (std::size_t t : {0u, 1u})
    for (std::size_t c : {0u, 2u})
      for (std::size_t by = 0; by < 2; ++by)
        for (std::size_t bx = 0; bx < 3; ++bx) {
          std::vector<double> patch(16);
          for (std::size_t y = 0; y < 4; ++y)
            for (std::size_t x = 0; x < 4; ++x) patch[y * 4 + x] = frames.at({t, c, by * 4 + y, bx * 4 + x});
          const Tensor d = dct2(Tensor::from({4, 4}, patch));
          for (std::size_t u = 0; u < 4; ++u)
            for (std::size_t v = 0; v < 4; ++v)
              EXPECT_NEAR(s.at({t, u * 4 + v, c, by, bx}), d.at({u, v}), 1e-12);
        }
  EXPECT_LT(max_abs_diff(block_idct(s, 4), frames), 1e-12);
}

TEST(Dct, ReflectIndexFollowsMirrorWithoutEdgeRepeat) {
  EXPECT_EQ(reflect_index(5, 5), 3u);
  EXPECT_EQ(reflect_index(6, 5), 2u);
  EXPECT_EQ(reflect_index(-1, 5), 1u);
  EXPECT_EQ(reflect_index(3, 1), 0u);
}

TEST(Dct, SpectralMapPadsAndCrops) {
  const Tensor frames = random_tensor({1, 2, 5, 7}, 3);
  const SpectralMap map = to_spectral(frames, 4);
  EXPECT_EQ(map.padded_height, 8u);
  EXPECT_EQ(map.padded_width, 8u);
  EXPECT_EQ(map.data.shape(), (Shape{1, 16, 2, 2, 2}));
  EXPECT_LT(max_abs_diff(from_spectral(map), frames), 1e-12);
  const SpectralMap aligned = to_spectral(frames, 2, 8);
  EXPECT_EQ(aligned.rows(), 4u);
  EXPECT_THROW(to_spectral(frames, 4, 6), std::invalid_argument);
}

TEST(Dct, SpectralFileRoundTrip) {
  ftvsr::testing::TempDir dir("spectral");
  const SpectralMap map = to_spectral(random_tensor({2, 1, 6, 6}, 4), 4);
  write_spectral(dir.path() / "s.ftt", map);
  const SpectralMap back = read_spectral(dir.path() / "s.ftt");
  EXPECT_TRUE(bit_equal(back.data, map.data));
  EXPECT_EQ(back.height, 6u);
  EXPECT_EQ(back.padded_width, 8u);
  EXPECT_EQ(back.block, 4u);
}
