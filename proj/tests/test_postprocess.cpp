#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "lungsim/postprocess.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace lungsim;

namespace {

PyramidConfig unit_gains(int levels) { return PyramidConfig{levels, {}}; }

Image<double> random_image(int rows, int cols, std::uint64_t seed) {
  return Image<double>(testutil::random_map(rows, cols, seed, 0.0, 8.0), Vec2d::Ones());
}

}  // namespace

TEST_CASE("constant image is unchanged by any gains") {
  const Image<double> img(64, 64, Vec2d::Ones(), 3.25);
  const Image<double> out = pyramid_boost(img, PyramidConfig{6, {{0, 2.0}, {1, 3.0}, {4, 0.5}}});
  CHECK((out.pixels - 3.25).abs().maxCoeff() < 1e-12);
}

TEST_CASE("unit gains reconstruct the input") {
  const Image<double> img = random_image(64, 64, 1);
  CHECK((pyramid_boost(img, unit_gains(7)).pixels - img.pixels).abs().maxCoeff() < 1e-10);
  const Image2D f = random_image(64, 64, 2).cast<float>();
  CHECK((pyramid_boost(f, unit_gains(7)).pixels - f.pixels).abs().maxCoeff() < 1e-5);
}

TEST_CASE("impulse at 32x32: matches the dense-matrix oracle and the centre is amplified") {
  Image<double> img(32, 32);
  img(16, 16) = 1.0;
  const PyramidConfig cfg{6, {{0, 2.0}, {1, 2.0}}};
  const Image<double> out = pyramid_boost(img, cfg);
  const Eigen::MatrixXd ref = oracle::pyramid(img.pixels.matrix(), 6, {2.0, 2.0});
  CHECK((out.pixels.matrix() - ref).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(out(16, 16) > img(16, 16));
}

TEST_CASE("random images and gains match the dense-matrix oracle") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Image<double> img = random_image(64, 64, 10 + seed);
    const std::vector<double> gains{1.5 + seed, 0.7, 2.0, 1.0};
    PyramidConfig cfg{5, {}};
    for (int l = 0; l < 4; ++l) cfg.gains[l] = gains[std::size_t(l)];
    const Image<double> out = pyramid_boost(img, cfg);
    const Eigen::MatrixXd ref = oracle::pyramid(img.pixels.matrix(), 5, gains);
    CHECK((out.pixels.matrix() - ref).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("pyramid_boost is linear for fixed gains") {
  const Image<double> a = random_image(32, 32, 4), b = random_image(32, 32, 5);
  Image<double> mix = a;
  mix.pixels = 2.0 * a.pixels - 0.5 * b.pixels;
  const PyramidConfig cfg{5, {{0, 2.0}, {1, 2.0}}};
  const RowArray<double> lhs = pyramid_boost(mix, cfg).pixels;
  const RowArray<double> rhs = 2.0 * pyramid_boost(a, cfg).pixels - 0.5 * pyramid_boost(b, cfg).pixels;
  CHECK((lhs - rhs).abs().maxCoeff() < 1e-10);
}

TEST_CASE("non-multiple sides are padded and cropped; too-small images are rejected") {
  const Image<double> img = random_image(37, 50, 6);
  const Image<double> out = pyramid_boost(img, unit_gains(4));
  CHECK(out.same_raster(img));
  CHECK((out.pixels - img.pixels).abs().maxCoeff() < 1e-10);
  CHECK_THROWS_AS(pyramid_boost(img, unit_gains(7)), Error);
  CHECK_THROWS_AS(pyramid_boost(Image<double>(512, 255), PyramidConfig{}), Error);
  CHECK_NOTHROW(pyramid_boost(Image<double>(256, 256), PyramidConfig{}));
}

TEST_CASE("pyramid config validation") {
  CHECK_THROWS_AS(PyramidConfig({1, {}}).validate(), Error);
  CHECK_THROWS_AS(PyramidConfig({9, {{0, 0.0}}}).validate(), Error);
  CHECK_THROWS_AS(PyramidConfig({9, {{8, 2.0}}}).validate(), Error);
  CHECK_NOTHROW(PyramidConfig{}.validate());
  CHECK(PyramidConfig{}.gain(0) == 2.0);
  CHECK(PyramidConfig{}.gain(1) == 2.0);
  CHECK(PyramidConfig{}.gain(2) == 1.0);
}

TEST_CASE("LUT clips, midpoint and C1 joints") {
  const LutConfig lut;
  for (double x : {-5.0, -1e-9, 0.0}) CHECK(lut(x) == 0.0);
  for (double x : {8.0, 8.5, 100.0}) CHECK(lut(x) == 1.0);
  CHECK(lut(4.0) == doctest::Approx(0.5).epsilon(1e-15));

  const LutConfig asym{-1.0, 5.0, 0.5, 2.0};
  const double h = 1e-6;
  for (double j : {-1.0, -0.5, 3.0, 5.0}) {
    CHECK(std::abs(asym(j + h) - asym(j - h)) < 1e-5);
    const double dl = (asym(j) - asym(j - h)) / h, dr = (asym(j + h) - asym(j)) / h;
    CHECK(std::abs(dl - dr) < 1e-4);
  }
  CHECK(asym(5.0) == 1.0);
}

TEST_CASE("LUT is monotone: output order follows input order over 1e4 samples") {
  const LutConfig lut;
  const auto x = testutil::random_map(1, 10000, 77, -2.0, 10.0);
  std::vector<int> order(10000);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return x(0, a) < x(0, b); });
  for (std::size_t i = 1; i < order.size(); ++i) CHECK(lut(x(0, order[i])) >= lut(x(0, order[i - 1])));

  Image<double> img(x, Vec2d::Ones());
  const auto out = apply_lut(img, lut);
  CHECK((out.pixels >= 0).all());
  CHECK((out.pixels <= 1).all());
}

TEST_CASE("LUT config validation") {
  CHECK_THROWS_AS(LutConfig({8, 0, 1, 1}).validate(), Error);
  CHECK_THROWS_AS(LutConfig({0, 8, -1, 1}).validate(), Error);
  CHECK_THROWS_AS(LutConfig({0, 8, 5, 4}).validate(), Error);
}
