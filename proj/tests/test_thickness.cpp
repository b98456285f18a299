#include <doctest.h>

#include "lungsim/phantom.hpp"
#include "lungsim/preprocess.hpp"
#include "lungsim/projector.hpp"
#include "lungsim/thickness.hpp"
#include "test_util.hpp"

using namespace lungsim;

namespace {

ThicknessMap blob_map(std::uint64_t seed, int n = 48) {
  ThicknessMap tm{Image2D(n, n), 1.0};
  const auto noise = testutil::random_map(n, n, seed, 0.5, 1.5);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      const double dr = (r - n / 2.0) / (n / 3.0), dc = (c - n / 2.0) / (n / 4.0);
      const double q = 1.0 - dr * dr - dc * dc;
      if (q > 0) tm.map(r, c) = float(100.0 * q * noise(r, c));
    }
  return tm;
}

/// Extent (rows with any set pixel) of a binary slice along y.
int rows_spanned(const Eigen::Ref<const RowArray<std::uint8_t>>& s) {
  int lo = -1, hi = -1;
  for (int y = 0; y < s.rows(); ++y)
    if ((s.row(y) != 0).any()) {
      if (lo < 0) lo = y;
      hi = y;
    }
  return lo < 0 ? 0 : hi - lo + 1;
}

}  // namespace

TEST_CASE("integrate_volume: rectangular solid and zero map") {
  ThicknessMap tm{Image2D(100, 100, Vec2d::Ones(), 100.0f), 1.0};
  CHECK(integrate_volume(tm) == doctest::Approx(1.0).epsilon(1e-12));
  tm.magnification = 2.0;
  CHECK(integrate_volume(tm) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(integrate_volume(ThicknessMap{Image2D(10, 10), 1.0}) == 0.0);
  CHECK_THROWS_AS(ThicknessMap({Image2D(2, 2, Vec2d::Ones(), -1.0f), 1.0}).validate(), Error);
}

TEST_CASE("integrate_volume is linear and additive over disjoint supports") {
  ThicknessMap a = blob_map(1), b = a, sum = a;
  b.map.pixels.setZero();
  b.map.pixels.block(0, 0, 5, 5).setConstant(7.0f);
  a.map.pixels.block(0, 0, 5, 5).setZero();
  sum.map.pixels = a.map.pixels + b.map.pixels;
  CHECK(integrate_volume(sum) == doctest::Approx(integrate_volume(a) + integrate_volume(b)).epsilon(1e-12));
  ThicknessMap twice = a;
  twice.map.pixels *= 2.0f;
  CHECK(integrate_volume(twice) == doctest::Approx(2.0 * integrate_volume(a)).epsilon(1e-12));
}

TEST_CASE("projected ellipsoid mask recovers the voxel-count volume within 2%") {
  VoxelMask m({64, 64, 64}, {2, 2, 2}, Vec3d::Zero());
  const double c = 31.5;
  for (int z = 0; z < 64; ++z)
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x) {
        const double dx = (x - c) * 2 / 40.0, dy = (y - c) * 2 / 50.0, dz = (z - c) * 2 / 60.0;
        m(x, y, z) = dx * dx + dy * dy + dz * dz <= 1.0;
      }
  ProjectionGeometry g;
  g.cols = g.rows = 160;
  g.pixel_pitch_mm = Vec2d::Constant(1.0);
  const ThicknessMap tm{project_mask_thickness(m, g), g.magnification()};
  const double gt = ground_truth_tlc(m);
  CHECK(std::abs(integrate_volume(tm) - gt) / gt < 0.02);
}

TEST_CASE("normalize_relative: reference row maximum is 1, uniform maps give 1") {
  const ThicknessMap tm = blob_map(3);
  const ThicknessMap rel = normalize_relative(tm);
  CHECK(rel.map.pixels.row(reference_row(tm.map)).maxCoeff() == doctest::Approx(1.0).epsilon(1e-7));

  ThicknessMap uni{Image2D(10, 12), 1.0};
  uni.map.pixels.block(2, 3, 6, 4).setConstant(42.0f);
  const ThicknessMap u = normalize_relative(uni);
  CHECK((u.map.pixels.block(2, 3, 6, 4) == 1.0f).all());
  CHECK(reference_row(uni.map) == 2 + 6 / 3);

  ThicknessMap hole{Image2D(6, 9), 1.0};
  hole.map(0, 1) = 1.0f;
  hole.map(8, 1) = 1.0f;
  CHECK_THROWS_AS(normalize_relative(hole), Error);
  CHECK_THROWS_AS(normalize_relative(ThicknessMap{Image2D(4, 4), 1.0}), Error);
}

TEST_CASE("normalize_relative is invariant to positive scaling") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const ThicknessMap tm = blob_map(seed, 24);
    const double scale = 0.01 + 10.0 * double(seed) / 100.0;
    ThicknessMap scaled = tm;
    scaled.map.pixels = (tm.map.pixels.cast<double>() * scale).cast<float>();
    const auto a = normalize_relative(tm).map.pixels, b = normalize_relative(scaled).map.pixels;
    REQUIRE((a - b).abs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("pa_correct: arithmetic and linearity") {
  ThicknessMap r{Image2D(2, 1), 1.0};
  r.map(0, 0) = 1.0f;
  const ThicknessMap d = pa_correct(r, PaCorrection{0.67, 300.0});
  CHECK(d.map(0, 0) == doctest::Approx(201.0).epsilon(1e-7));
  CHECK(d.map(0, 1) == 0.0f);
  const ThicknessMap d2 = pa_correct(r, PaCorrection{0.67, 600.0});
  CHECK(d2.map(0, 0) == doctest::Approx(2.0 * d.map(0, 0)).epsilon(1e-7));
  CHECK_THROWS_AS(pa_correct(r, PaCorrection{1.2, 300.0}), Error);
  CHECK_THROWS_AS(pa_correct(r, PaCorrection{0.67, 0.0}), Error);
}

TEST_CASE("diameter fraction of slab phantoms") {
  auto slab = [](int body_px, int lung_px) {
    CtVolume ct({20, 120, 30}, {1, 2.5, 1}, Vec3d::Zero(), kAirHu);
    VoxelMask lung = VoxelMask::like(ct);
    const int b0 = (120 - body_px) / 2, l0 = (120 - lung_px) / 2;
    for (int z = 0; z < 30; ++z)
      for (int y = 0; y < 120; ++y)
        for (int x = 0; x < 20; ++x) {
          if (y >= b0 && y < b0 + body_px) ct(x, y, z) = 40.0f;
          if (z >= 5 && z < 25 && y >= l0 && y < l0 + lung_px) {
            ct(x, y, z) = -800.0f;
            lung(x, y, z) = 1;
          }
        }
    return std::pair{ct, lung};
  };
  const auto [ct, lung] = slab(120, 80);  // 300 mm body, 200 mm lung
  CHECK(diameter_fraction(ct, lung) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  const auto [c1, l1] = slab(100, 50);
  const auto [c2, l2] = slab(100, 70);
  CHECK(estimate_d_prime({{&c1, &l1}, {&c2, &l2}}) == doctest::Approx(0.6).epsilon(1e-12));

  VoxelMask empty = VoxelMask::like(ct);
  CHECK_THROWS_AS(diameter_fraction(ct, empty), Error);
}

TEST_CASE("estimate_d_prime over 50 random phantoms matches direct measurement") {
  std::vector<CtVolume> cts;
  std::vector<VoxelMask> lungs;
  double direct = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    ChestPhantomParams base;
    base.dims = Vec3i(48, 40, 36);
    base.spacing = Vec3d(8, 8, 8);
    ChestPhantomParams p = random_chest_params(seed, base);
    p.table = false;
    CtVolume ct = chest_phantom(p);
    VoxelMask lung = segment_lung(ct, PreprocessConfig{-400, 0, 20});

    int zmin = -1, zmax = -1;
    for (int z = 0; z < lung.nz(); ++z)
      if ((lung.slice(z) != 0).any()) {
        if (zmin < 0) zmin = z;
        zmax = z;
      }
    const int z = zmax - (zmax - zmin + 1) / 6;
    const VoxelMask body = body_mask(ct, -400.0f);
    direct += double(rows_spanned(lung.slice(z))) / double(rows_spanned(body.slice(z)));
    cts.push_back(std::move(ct));
    lungs.push_back(std::move(lung));
  }
  std::vector<DiameterSample> samples;
  for (std::size_t i = 0; i < cts.size(); ++i) samples.push_back({&cts[i], &lungs[i]});
  const double est = estimate_d_prime(samples);
  CHECK(std::abs(est - direct / 50.0) < 1e-12);
  CHECK(est > 0.3);
  CHECK(est < 0.95);
}
