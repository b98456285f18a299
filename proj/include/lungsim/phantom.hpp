#pragma once

#include <cstdint>

#include "lungsim/types.hpp"

namespace lungsim {

/// Analytic chest phantom: elliptical torso with a subcutaneous fat layer,
/// two ellipsoidal lungs, a spine, periodic rib rings, a sternum and an
/// optional patient table joined to the back by a one-voxel bridge.
struct ChestPhantomParams {
  Vec3i dims{160, 128, 120};
  Vec3d spacing{2.5, 2.5, 2.5};
  double torso_half_width_mm = 170.0;   // x
  double torso_half_depth_mm = 115.0;   // y
  double fat_thickness_mm = 15.0;
  Vec3d lung_semi_axes_mm{55.0, 75.0, 110.0};
  double lung_offset_x_mm = 68.0;       // lung centres at +-offset
  double lung_offset_y_mm = 0.0;
  double spine_radius_mm = 16.0;
  double rib_spacing_mm = 25.0;
  double rib_thickness_mm = 8.0;
  bool table = true;
  double table_gap_mm = 20.0;
  double table_thickness_mm = 12.0;

  float soft_hu = 40.0f;
  float fat_hu = -100.0f;
  float lung_hu = -850.0f;
  float bone_hu = 700.0f;
  float table_hu = 300.0f;
};

CtVolume chest_phantom(const ChestPhantomParams& p = {});

/// Randomised anatomy (torso size, lung size and position) from `seed`.
ChestPhantomParams random_chest_params(std::uint64_t seed, const ChestPhantomParams& base = {});

}  // namespace lungsim
