#include "lungsim/phantom.hpp"

#include <cmath>
#include <random>

namespace lungsim {

CtVolume chest_phantom(const ChestPhantomParams& p) {
  CtVolume vol(p.dims, p.spacing, Vec3d::Zero(), kAirHu);
  vol.origin = -0.5 * (p.dims.cast<double>() - Vec3d::Ones()).cwiseProduct(p.spacing);
  const double a = p.torso_half_width_mm, b = p.torso_half_depth_mm;
  const double ai = a - p.fat_thickness_mm, bi = b - p.fat_thickness_mm;
  const double lung_zc = 0.0;
  const double table_top = b + p.table_gap_mm;

#pragma omp parallel for schedule(static)
  for (int k = 0; k < p.dims.z(); ++k) {
    const double z = vol.origin.z() + k * p.spacing.z();
    const bool rib_slice = std::fmod(std::abs(z) + 0.5 * p.rib_thickness_mm, p.rib_spacing_mm) < p.rib_thickness_mm;
    for (int j = 0; j < p.dims.y(); ++j) {
      const double y = vol.origin.y() + j * p.spacing.y();
      for (int i = 0; i < p.dims.x(); ++i) {
        const double x = vol.origin.x() + i * p.spacing.x();
        const double outer = (x * x) / (a * a) + (y * y) / (b * b);
        float hu = kAirHu;
        if (outer <= 1.0) {
          const double inner = (x * x) / (ai * ai) + (y * y) / (bi * bi);
          hu = inner <= 1.0 ? p.soft_hu : p.fat_hu;
          const double rib_r = std::sqrt(inner);
          if (rib_slice && rib_r > 0.88 && rib_r <= 0.97) hu = p.bone_hu;
          for (double side : {-1.0, 1.0}) {
            const Vec3d d((x - side * p.lung_offset_x_mm) / p.lung_semi_axes_mm.x(),
                          (y - p.lung_offset_y_mm) / p.lung_semi_axes_mm.y(), (z - lung_zc) / p.lung_semi_axes_mm.z());
            if (d.squaredNorm() <= 1.0) hu = p.lung_hu;
          }
          const double sy = bi - p.spine_radius_mm - 10.0;
          if (x * x + (y - sy) * (y - sy) <= p.spine_radius_mm * p.spine_radius_mm) hu = p.bone_hu;
          if (std::abs(x) <= 12.0 && y < -bi + 14.0 && y > -bi + 2.0) hu = p.bone_hu;  // sternum
        } else if (p.table) {
          if (y >= table_top && y <= table_top + p.table_thickness_mm && std::abs(x) <= 1.15 * a) hu = p.table_hu;
          // partial-volume bridge between back and table
          if (i == p.dims.x() / 2 && y > 0.0 && y < table_top) hu = -300.0f;
        }
        vol(i, j, k) = hu;
      }
    }
  }
  return vol;
}

ChestPhantomParams random_chest_params(std::uint64_t seed, const ChestPhantomParams& base) {
  std::mt19937_64 rng(seed);
  auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  ChestPhantomParams p = base;
  const double s = uni(0.9, 1.08);
  p.torso_half_width_mm = base.torso_half_width_mm * s;
  p.torso_half_depth_mm = base.torso_half_depth_mm * uni(0.9, 1.08);
  p.lung_semi_axes_mm = Vec3d(base.lung_semi_axes_mm.x() * uni(0.8, 1.15), base.lung_semi_axes_mm.y() * uni(0.8, 1.1),
                              base.lung_semi_axes_mm.z() * uni(0.7, 1.05));
  p.lung_offset_x_mm = base.lung_offset_x_mm * s;
  p.lung_offset_y_mm = uni(-8.0, 8.0);
  p.fat_thickness_mm = uni(8.0, 25.0);
  return p;
}

}  // namespace lungsim
