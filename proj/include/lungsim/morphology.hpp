#pragma once

#include <cstdint>
#include <vector>

#include "lungsim/types.hpp"

namespace lungsim {

using BinarySlice = RowArray<std::uint8_t>;

/// Component labels: 0 is background, components are numbered from 1 in
/// raster order of their first pixel. `sizes[k]` is the pixel count of label k
/// (`sizes[0]` is unused).
struct Labeling {
  RowArray<std::int32_t> labels;
  std::vector<std::int64_t> sizes;

  int count() const { return int(sizes.size()) - 1; }
};

enum class Connectivity { four = 4, eight = 8 };

Labeling label_components(const BinarySlice& mask, Connectivity conn);

/// Largest component (first in raster order on ties); all-zero if `mask` is empty.
BinarySlice largest_component(const BinarySlice& mask, Connectivity conn);

/// Sets every background pixel that is not 4-connected to the border.
BinarySlice fill_holes(const BinarySlice& mask);

/// Erosion followed by dilation with a disk of `radius` pixels; pixels
/// outside the raster count as background. radius 0 is the identity.
BinarySlice open_disk(const BinarySlice& mask, int radius);

/// 6-connected labeling of a 3-D mask. labels share the volume layout.
struct VolumeLabeling {
  std::vector<std::int32_t> labels;
  std::vector<std::int64_t> sizes;

  int count() const { return int(sizes.size()) - 1; }
};

VolumeLabeling label_components_3d(const VoxelMask& mask);

}  // namespace lungsim
