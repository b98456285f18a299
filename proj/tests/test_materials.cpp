#include <doctest.h>

#include <cmath>
#include <fstream>

#include "lungsim/materials.hpp"
#include "test_util.hpp"

using namespace lungsim;

TEST_CASE("built-in tables cover 10-150 keV with positive coefficients") {
  const auto& lib = MaterialLibrary::builtin();
  for (Material m : {Material::bone, Material::soft, Material::adipose, Material::water, Material::csi,
                     Material::aluminum}) {
    const MaterialTable& t = lib.table(m);
    CHECK(t.min_energy() <= 10.0);
    CHECK(t.max_energy() >= 150.0);
    for (std::size_t i = 1; i < t.energies().size(); ++i) CHECK(t.energies()[i] > t.energies()[i - 1]);
    for (double v : t.values()) CHECK(v > 0.0);
  }
  CHECK(lib.table(Material::water).nominal_density() == 1.0);
  CHECK(lib.table(Material::csi).nominal_density() == 4.51);
}

TEST_CASE("mu_rho is exact at grid points and bracketed between them") {
  const MaterialTable& t = MaterialLibrary::builtin().table(Material::bone);
  for (std::size_t i = 0; i < t.energies().size(); ++i) CHECK(t.mu_rho(t.energies()[i]) == t.values()[i]);
  for (std::size_t i = 0; i + 1 < t.energies().size(); ++i) {
    const double e = 0.5 * (t.energies()[i] + t.energies()[i + 1]);
    const double v = t.mu_rho(e);
    CHECK(v <= std::max(t.values()[i], t.values()[i + 1]));
    CHECK(v >= std::min(t.values()[i], t.values()[i + 1]));
  }
}

TEST_CASE("mu_rho is continuous across grid points") {
  const MaterialTable& t = MaterialLibrary::builtin().table(Material::soft);
  for (double e = 11.0; e < 150.0; e += 1.0) {
    const double left = t.mu_rho(e - 1e-9), right = t.mu_rho(e + 1e-9), at = t.mu_rho(e);
    CHECK(std::abs(left - at) / at < 1e-7);
    CHECK(std::abs(right - at) / at < 1e-7);
  }
}

TEST_CASE("water at 70 keV agrees with the NIST XCOM table within 1%") {
  // NIST XCOM water, total attenuation with coherent scattering (cm^2/g)
  const double e0 = 60.0, v0 = 0.2059, e1 = 80.0, v1 = 0.1837;
  const double ref = std::exp(std::log(v0) + (std::log(70.0 / e0) / std::log(e1 / e0)) * std::log(v1 / v0));
  const double ours = MaterialLibrary::builtin().mu_rho(Material::water, 70.0);
  CHECK(std::abs(ours - ref) / ref < 0.01);
}

TEST_CASE("mu_rho outside the table is a domain error") {
  const auto& lib = MaterialLibrary::builtin();
  try {
    lib.mu_rho(Material::soft, 500.0);
    FAIL("expected domain error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::domain);
  }
  CHECK_THROWS_AS(lib.mu_rho(Material::soft, 0.5), Error);
}

TEST_CASE("material table parsing rejects bad tables") {
  CHECK_THROWS_AS(parse_material_table(Material::soft, "energy_keV,mu_over_rho_cm2_g\n10,1\n10,0.9\n", 1.0), Error);
  CHECK_THROWS_AS(parse_material_table(Material::soft, "energy_keV,mu_over_rho_cm2_g\n10,1\n20,-1\n", 1.0), Error);
  CHECK_THROWS_AS(parse_material_table(Material::soft, "energy_keV,mu_over_rho_cm2_g\n10,1\n20,x\n", 1.0), Error);
  CHECK_THROWS_AS(parse_material_table(Material::soft, "energy,mu\n10,1\n20,1\n", 1.0), Error);
  const MaterialTable t =
      parse_material_table(Material::soft, "energy_keV,mu_over_rho_cm2_g\n10,4\n40,1\n", 1.0);
  CHECK(t.mu_rho(20.0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("MaterialLibrary::load reads a directory of tables") {
  testutil::TempDir dir;
  std::ofstream(dir / "manifest.csv") << "material_id,nominal_density_g_cm3,source_key\nwater,1.0,test\n";
  std::ofstream(dir / "water.csv") << "energy_keV,mu_over_rho_cm2_g\n10,5\n150,0.15\n";
  const MaterialLibrary lib = MaterialLibrary::load(dir.path());
  CHECK(lib.mu_rho(Material::water, 10.0) == 5.0);
  CHECK_THROWS_AS(lib.table(Material::bone), Error);
  CHECK_THROWS_AS(MaterialLibrary::load(dir / "missing"), Error);
}

TEST_CASE("density_from_hu fixed points and hand evaluation") {
  const auto& lib = MaterialLibrary::builtin();
  for (Material m : kBodyMaterials) CHECK(density_from_hu(-1000.0, m) == 0.0);
  CHECK(std::abs(density_from_hu(0.0, Material::water) - 1.0) < 1e-12);

  const double mu_w = lib.mu_rho(Material::water, 70.0) * 1.0;
  const double hand = (240.0 / 1000.0 * mu_w + mu_w) / lib.mu_rho(Material::soft, 70.0);
  CHECK(std::abs(density_from_hu(240.0, Material::soft) - hand) < 1e-12);
  CHECK(density_from_hu(-1024.0, Material::adipose) == 0.0);
}

TEST_CASE("density_from_hu is affine and strictly increasing before the clamp") {
  for (Material m : kBodyMaterials) {
    const double a = density_from_hu(-500, m), b = density_from_hu(0, m), c = density_from_hu(500, m);
    CHECK(a < b);
    CHECK(b < c);
    CHECK(std::abs((c - b) - (b - a)) < 1e-12);
  }
}

TEST_CASE("decompose: routing and boundary ownership") {
  CtVolume v({5, 1, 1}, {1, 1, 1}, Vec3d::Zero());
  v.values << 100.0f, 240.0f, 241.0f, -200.0f, -201.0f;
  const MaterialMaps maps = decompose(v);
  const auto& bone = maps[Material::bone];
  const auto& soft = maps[Material::soft];
  const auto& fat = maps[Material::adipose];
  CHECK(soft.values[0] > 0);
  CHECK(soft.values[1] > 0);
  CHECK(bone.values[1] == 0);
  CHECK(bone.values[2] > 0);
  CHECK(soft.values[2] == 0);
  CHECK(fat.values[3] > 0);
  CHECK(fat.values[4] == 0);
  CHECK(soft.values[4] == 0);
  CHECK(bone.values[4] == 0);

  CtVolume u({4, 4, 4}, {1, 1, 1}, Vec3d::Zero(), 100.0f);
  const MaterialMaps mu = decompose(u);
  CHECK((mu[Material::soft].values > 0).all());
  CHECK((mu[Material::bone].values == 0).all());
  CHECK((mu[Material::adipose].values == 0).all());
}

TEST_CASE("decompose: counting oracle and partition on random HU") {
  const CtVolume v = testutil::random_volume<float>({20, 18, 16}, {1, 1, 1}, 9, -1024, 1500);
  const MaterialMaps maps = decompose(v);
  Eigen::Index nonzero = 0, eligible = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    int owners = 0;
    for (const auto& d : maps.density) owners += d.values[i] > 0;
    CHECK(owners <= 1);
    nonzero += owners;
    eligible += v.values[i] >= -200.0f;
  }
  CHECK(nonzero == eligible);
  for (const auto& d : maps.density) CHECK((d.values >= 0).all());
}
