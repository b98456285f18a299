#pragma once

#include <vector>

#include "lungsim/types.hpp"

namespace lungsim {

/// Lung path length (mm) per detector pixel plus the projection magnification.
struct ThicknessMap {
  Image2D map;
  double magnification = 1.0;

  void validate() const;
};

struct PaCorrection {
  double d_prime = 0.67;
  double pa_diameter_mm = 0.0;

  void validate() const;
};

/// Lung volume in liters: sum of thickness times pixel area back-projected to
/// the isocenter plane (area / m^2).
double integrate_volume(const ThicknessMap& tm, const Vec2d& pixel_spacing_mm);
inline double integrate_volume(const ThicknessMap& tm) { return integrate_volume(tm, tm.map.pixel_spacing); }

/// Divides by the maximum on the reference row, one third of the lung's
/// vertical extent below its top row.
ThicknessMap normalize_relative(const ThicknessMap& tm);

/// Row used by normalize_relative.
int reference_row(const Image2D& map);

/// D_p = D' * R_p * PA.
ThicknessMap pa_correct(const ThicknessMap& relative, const PaCorrection& corr);

struct DiameterSample {
  const CtVolume* ct;
  const VoxelMask* lung;
};

/// Options for measuring lung/body diameter fractions.
struct DiameterOptions {
  float body_threshold_hu = -400.0f;
  /// Whether the lung apex lies at the high-z end of the volume.
  bool apex_at_high_z = true;
};

/// Lung PA extent over body PA extent on the slice one sixth of the lung's
/// z-extent below the apex.
double diameter_fraction(const CtVolume& ct, const VoxelMask& lung, const DiameterOptions& opt = {});

/// Mean diameter fraction over the given scans.
double estimate_d_prime(const std::vector<DiameterSample>& scans, const DiameterOptions& opt = {});

}  // namespace lungsim
