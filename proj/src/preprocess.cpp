#include "lungsim/preprocess.hpp"

#include <numeric>

#include "lungsim/morphology.hpp"

namespace lungsim {

void PreprocessConfig::validate() const {
  if (opening_radius_px < 0)
    throw Error(ErrorKind::invalid_argument, "opening_radius_px", "must be non-negative");
  if (middle_slice_min_px <= 0)
    throw Error(ErrorKind::invalid_argument, "middle_slice_min_px", "must be positive");
}

TableRemoval remove_table(const CtVolume& vol, const PreprocessConfig& cfg) {
  vol.validate();
  cfg.validate();
  TableRemoval out{vol, {}};
  std::vector<char> empty(std::size_t(vol.nz()), 0);

#pragma omp parallel for schedule(dynamic)
  for (int z = 0; z < vol.nz(); ++z) {
    const auto src = vol.slice(z);
    const BinarySlice body = (src > cfg.body_threshold_hu).cast<std::uint8_t>();
    if (!body.any()) {
      empty[std::size_t(z)] = 1;
      continue;
    }
    const BinarySlice torso =
        fill_holes(largest_component(open_disk(body, cfg.opening_radius_px), Connectivity::eight));
    auto dst = out.volume.slice(z);
    dst = (torso != 0).select(src, kAirHu);
  }
  for (int z = 0; z < vol.nz(); ++z)
    if (empty[std::size_t(z)]) out.warnings.push_back("slice " + std::to_string(z) + ": no voxel above body threshold");
  return out;
}

VoxelMask body_mask(const CtVolume& vol, float threshold_hu) {
  VoxelMask m = VoxelMask::like(vol);
  m.values = (vol.values > threshold_hu).cast<std::uint8_t>();
  return m;
}

VoxelMask segment_lung(const CtVolume& vol, const PreprocessConfig& cfg) {
  vol.validate();
  cfg.validate();
  const VoxelMask body = body_mask(vol, cfg.body_threshold_hu);

  VoxelMask air = VoxelMask::like(vol);
#pragma omp parallel for schedule(dynamic)
  for (int z = 0; z < vol.nz(); ++z) {
    const BinarySlice b = body.slice(z);
    air.slice(z) = (fill_holes(b) != 0 && b == 0).cast<std::uint8_t>();
  }

  const VolumeLabeling lab = label_components_3d(air);
  std::vector<std::int64_t> footprint(lab.sizes.size(), 0);
  const int mid = vol.nz() / 2;
  const Eigen::Index base = Eigen::Index(mid) * vol.slice_size();
  for (Eigen::Index i = 0; i < vol.slice_size(); ++i) ++footprint[std::size_t(lab.labels[std::size_t(base + i)])];

  std::vector<char> keep(lab.sizes.size(), 0);
  bool any = false;
  for (std::size_t k = 1; k < footprint.size(); ++k)
    if (footprint[k] > cfg.middle_slice_min_px) keep[k] = 1, any = true;
  if (!any)
    throw Error(ErrorKind::segmentation, "middle_slice_min_px",
                "no interior-air component exceeds " + std::to_string(cfg.middle_slice_min_px) +
                    " pixels on slice " + std::to_string(mid));

  VoxelMask lung = VoxelMask::like(vol);
  for (Eigen::Index i = 0; i < lung.size(); ++i) lung.values[i] = keep[std::size_t(lab.labels[std::size_t(i)])];
  return lung;
}

double ground_truth_tlc(const VoxelMask& mask) {
  const auto count = mask.values.template cast<std::int64_t>().sum();
  return double(count) * mask.voxel_volume_mm3() * 1e-6;
}

}  // namespace lungsim
