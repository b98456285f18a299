#pragma once

#include <string>
#include <vector>

#include "lungsim/types.hpp"

namespace lungsim {

struct PreprocessConfig {
  float body_threshold_hu = -400.0f;
  int opening_radius_px = 2;
  int middle_slice_min_px = 1000;

  void validate() const;
};

struct TableRemoval {
  CtVolume volume;
  /// Human-readable notes, e.g. slices without any body voxel.
  std::vector<std::string> warnings;
};

/// Per axial slice: threshold, open with a disk, keep the largest component
/// (with its interior holes) and set everything else to air.
TableRemoval remove_table(const CtVolume& vol, const PreprocessConfig& cfg = {});

/// Interior air enclosed by body tissue, restricted to 3-D components whose
/// footprint on slice nz/2 exceeds cfg.middle_slice_min_px pixels.
/// Throws ErrorKind::segmentation when nothing qualifies.
VoxelMask segment_lung(const CtVolume& vol, const PreprocessConfig& cfg = {});

/// Body mask (HU above threshold) used by lung segmentation and diameter
/// measurements.
VoxelMask body_mask(const CtVolume& vol, float threshold_hu);

/// Segmented volume in liters.
double ground_truth_tlc(const VoxelMask& mask);

}  // namespace lungsim
