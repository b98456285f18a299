#include <doctest.h>

#include <cmath>
#include <numbers>

#include "lungsim/radiograph.hpp"
#include "test_util.hpp"

using namespace lungsim;

namespace {

Image<double> constant(int w, int h, double v) { return Image<double>(w, h, Vec2d::Ones(), v); }

std::array<MaterialPath<double>, 3> paths(const Image<double>& bone, const Image<double>& soft,
                                          const Image<double>& fat) {
  return {MaterialPath<double>{Material::bone, &bone}, {Material::soft, &soft}, {Material::adipose, &fat}};
}

}  // namespace

TEST_CASE("zero thickness gives the flat field everywhere") {
  const Spectrum eff = effective_spectrum(source_spectrum(120));
  const auto z = constant(3, 2, 0.0);
  const auto p = paths(z, z, z);
  const Image<double> I = form_intensity<double>(p, eff);
  const double F = flat_field(eff);
  CHECK(F == doctest::Approx(eff.fluence.sum()).epsilon(1e-15));
  CHECK(((I.pixels - F).abs() <= 1e-12 * F).all());
  CHECK((neg_log(I, F).pixels == 0.0).all());
}

TEST_CASE("monochromatic half-value layer halves the intensity") {
  const auto& lib = MaterialLibrary::builtin();
  const Spectrum mono = monochromatic(60, 3.0);
  const double hvl = std::numbers::ln2 / lib.mu_rho(Material::soft, 60.0);
  const auto d = constant(2, 2, hvl);
  const std::array<MaterialPath<double>, 1> p{MaterialPath<double>{Material::soft, &d}};
  const Image<double> I = form_intensity<double>(p, mono);
  CHECK(((I.pixels / 1.5 - 1.0).abs() < 1e-12).all());
}

TEST_CASE("two-bin, two-material 2x2 case matches direct summation") {
  const auto& lib = MaterialLibrary::builtin();
  Spectrum s(90);
  s.at(40) = 2.0;
  s.at(90) = 0.5;
  Image<double> bone(2, 2), soft(2, 2);
  bone.pixels << 0.0, 0.3, 1.1, 2.0;
  soft.pixels << 5.0, 0.0, 12.0, 3.5;
  const std::array<MaterialPath<double>, 2> p{MaterialPath<double>{Material::bone, &bone}, {Material::soft, &soft}};
  const Image<double> I = form_intensity<double>(p, s);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) {
      double ref = 0.0;
      for (int e : {40, 90})
        ref += s.at(e) * std::exp(-(bone(r, c) * lib.mu_rho(Material::bone, e) + soft(r, c) * lib.mu_rho(Material::soft, e)));
      CHECK(std::abs(I(r, c) - ref) < 1e-12);
    }
}

TEST_CASE("raster mismatch is rejected") {
  const auto a = constant(2, 2, 0.0), b = constant(3, 2, 0.0);
  const std::array<MaterialPath<double>, 2> p{MaterialPath<double>{Material::bone, &a}, {Material::soft, &b}};
  CHECK_THROWS_AS(form_intensity<double>(p, monochromatic(60)), Error);
}

TEST_CASE("flat field examples") {
  Spectrum ones(120);
  ones.fluence.setOnes();
  CHECK(flat_field(ones) == 120.0);
  CHECK(flat_field(monochromatic(33, 5.0)) == 5.0);
  CHECK_THROWS_AS(flat_field(Spectrum(120)), Error);
}

TEST_CASE("neg_log examples and nonpositive pixel location") {
  Image<double> I(3, 2, Vec2d::Ones(), 4.0);
  I(1, 2) = 4.0 / std::numbers::e;
  const Image<double> L = neg_log(I, 4.0);
  CHECK(L(0, 0) == 0.0);
  CHECK(L(1, 2) == doctest::Approx(1.0).epsilon(1e-15));

  I(1, 1) = 0.0;
  try {
    neg_log(I, 4.0);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("row 1, col 1") != std::string::npos);
  }
  CHECK_THROWS_AS(neg_log(L, 0.0), Error);
}

TEST_CASE("monochromatic single material: neg-log equals d * mu/rho") {
  const auto& lib = MaterialLibrary::builtin();
  const Spectrum mono = monochromatic(75);
  Image<double> d(4, 1);
  d.pixels << 0.0, 0.5, 3.0, 17.0;
  const std::array<MaterialPath<double>, 1> p{MaterialPath<double>{Material::bone, &d}};
  const Image<double> L = neg_log(form_intensity<double>(p, mono), flat_field(mono));
  for (int c = 0; c < 4; ++c) CHECK(std::abs(L(0, c) - d(0, c) * lib.mu_rho(Material::bone, 75)) < 1e-12);
}

TEST_CASE("monotone in thickness and concave under beam hardening") {
  const Spectrum eff = effective_spectrum(source_spectrum(120));
  Image<double> d(40, 1);
  for (int c = 0; c < 40; ++c) d(0, c) = 0.5 * c;
  const std::array<MaterialPath<double>, 1> p{MaterialPath<double>{Material::soft, &d}};
  const Image<double> I = form_intensity<double>(p, eff);
  const Image<double> L = neg_log(I, flat_field(eff));
  for (int c = 1; c < 40; ++c) {
    CHECK(I(0, c) < I(0, c - 1));
    CHECK(L(0, c) > L(0, c - 1));
  }
  for (int c = 1; c + 1 < 40; ++c) CHECK(L(0, c + 1) - 2 * L(0, c) + L(0, c - 1) <= 1e-12);
}

TEST_CASE("bone/soft contrast is larger at 70 kVp than at 120 kVp") {
  Image<double> bone(2, 1), soft(2, 1);
  bone.pixels << 0.0, 1.0;   // second pixel adds 1 g/cm^2 of bone
  soft.pixels << 20.0, 20.0;
  const auto z = constant(2, 1, 0.0);
  const auto p = paths(bone, soft, z);
  auto contrast = [&](int kvp) {
    const Spectrum eff = effective_spectrum(source_spectrum(kvp));
    const Image<double> L = neg_log(form_intensity<double>(p, eff), flat_field(eff));
    return L(0, 1) - L(0, 0);
  };
  CHECK(contrast(70) > contrast(120));
}

TEST_CASE("poisson noise is seeded, positive and thread-independent") {
  Image2D a(50, 40, Vec2d::Ones(), 10.0f);
  Image2D b = a, c = a;
  add_poisson_noise(a, 10.0, 1000.0, 7);
  add_poisson_noise(b, 10.0, 1000.0, 7);
  add_poisson_noise(c, 10.0, 1000.0, 8);
  CHECK((a.pixels == b.pixels).all());
  CHECK((a.pixels != c.pixels).any());
  CHECK((a.pixels > 0).all());
  CHECK(a.pixels.mean() == doctest::Approx(10.0).epsilon(0.01));
}
