#include <gtest/gtest.h>

#include <fstream>

#include "ftvsr/frames.hpp"
#include "test_util.hpp"

using namespace ftvsr;
using ftvsr::testing::bit_equal;
using ftvsr::testing::random_tensor;
using ftvsr::testing::TempDir;

namespace {

Tensor quantized(const Tensor& x) {
  std::vector<double> v(x.data().begin(), x.data().end());
  for (double& e : v) e = std::round(e * 255.0) / 255.0;
  return Tensor::from(x.shape(), v);
}

}  // namespace

TEST(Pnm, ColorAndGrayRoundTrip) {
  TempDir dir("pnm");
  const Tensor rgb = quantized(random_tensor({3, 5, 7}, 1, 0, 1));
  write_pnm(dir.path() / "a.ppm", rgb);
  EXPECT_TRUE(bit_equal(read_pnm(dir.path() / "a.ppm"), rgb));
  const Tensor gray = quantized(random_tensor({1, 4, 3}, 2, 0, 1));
  write_pnm(dir.path() / "b.pgm", gray);
  EXPECT_TRUE(bit_equal(read_pnm(dir.path() / "b.pgm"), gray));
  EXPECT_THROW(write_pnm(dir.path() / "c.ppm", Tensor::zeros({2, 4, 4})), std::invalid_argument);
}

TEST(Pnm, RejectsBadFiles) {
  TempDir dir("pnm_bad");
  std::ofstream(dir.path() / "x.ppm") << "P3\n1 1\n255\n0 0 0\n";
  EXPECT_THROW(read_pnm(dir.path() / "x.ppm"), std::runtime_error);
  std::ofstream(dir.path() / "y.ppm", std::ios::binary) << "P6\n4 4\n255\nabc";
  EXPECT_THROW(read_pnm(dir.path() / "y.ppm"), std::runtime_error);
  EXPECT_THROW(read_pnm(dir.path() / "missing.ppm"), std::runtime_error);
}

TEST(FrameDir, RoundTripInNameOrder) {
  TempDir dir("framedir");
  const Tensor frames = quantized(random_tensor({3, 3, 6, 4}, 3, 0, 1));
  write_frame_dir(dir.path(), frames);
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "00000002.ppm"));
  EXPECT_TRUE(bit_equal(read_frame_dir(dir.path()), frames));
  write_pnm(dir.path() / "00000003.ppm", Tensor::zeros({3, 5, 4}));
  EXPECT_THROW(read_frame_dir(dir.path()), std::runtime_error);
}

TEST(SyntheticClip, DeterministicBoundedAndMoving) {
  const Tensor a = synthetic_clip(4, 3, 3, 24, 24);
  EXPECT_EQ(a.shape(), (Shape{3, 3, 24, 24}));
  EXPECT_TRUE(bit_equal(a, synthetic_clip(4, 3, 3, 24, 24)));
  EXPECT_FALSE(bit_equal(a, synthetic_clip(5, 3, 3, 24, 24)));
  for (double v : a.data()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_FALSE(bit_equal(slice(a, 0, 0, 1), slice(a, 0, 1, 1)));
}
