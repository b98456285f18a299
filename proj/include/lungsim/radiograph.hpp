#pragma once

#include <cstdint>
#include <span>

#include "lungsim/spectrum.hpp"

namespace lungsim {

/// Projected density map of one material (g/cm^2).
template <typename Scalar>
struct MaterialPath {
  Material material;
  const Image<Scalar>* density;
};

/// Detector-weighted intensity I_p = sum_E Φ(E) exp(-sum_i d_ip (μ_i/ρ_i)(E)).
/// All maps must share one raster.
template <typename Scalar>
Image<Scalar> form_intensity(std::span<const MaterialPath<Scalar>> paths, const Spectrum& effective,
                             const MaterialLibrary& lib = MaterialLibrary::builtin());

/// F = sum_E Φ(E); throws for an all-zero spectrum.
double flat_field(const Spectrum& effective);

/// I' = -ln(I / F) per pixel, floored at 0. Throws naming the first
/// nonpositive pixel.
template <typename Scalar>
Image<Scalar> neg_log(const Image<Scalar>& intensity, double flat);

struct RawRadiograph {
  Image2D intensity;
  double flat = 0.0;
  Image2D neglog;
};

/// Replaces each intensity by a Poisson draw at `flat_photons` photons per
/// flat-field pixel, rescaled back to intensity units and kept above zero.
/// Rows use independent streams, so the result does not depend on threading.
void add_poisson_noise(Image2D& intensity, double flat, double flat_photons, std::uint64_t seed);

}  // namespace lungsim
