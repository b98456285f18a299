#pragma once

#include <filesystem>
#include <string>

#include "lungsim/types.hpp"

namespace lungsim {

/// Reads a MetaImage (.mhd header with detached or LOCAL payload) as HU.
/// Honors NDims, DimSize, ElementSpacing, Offset, ElementType,
/// ElementDataFile, ElementByteOrderMSB and the optional RescaleSlope /
/// RescaleIntercept pair. Only signed element types are accepted; results
/// are clamped to [kHuMin, kHuMax].
CtVolume load_metaimage(const std::filesystem::path& path);

/// Reads a MetaImage mask; any nonzero voxel becomes 1. All integer and
/// float element types are accepted.
VoxelMask load_mask_metaimage(const std::filesystem::path& path);

/// Writes `<stem>.mhd` + `<stem>.raw` (MET_FLOAT, little endian).
void save_metaimage(const CtVolume& vol, const std::filesystem::path& path);
/// Writes a mask as MET_UCHAR.
void save_metaimage(const VoxelMask& mask, const std::filesystem::path& path);

/// Raw-f32 volume: JSON sidecar {"dims","spacing_mm","origin_mm","data_file"}
/// next to a little-endian float payload. Used for synthetic phantoms.
void save_raw_volume(const CtVolume& vol, const std::filesystem::path& json_path);
CtVolume load_raw_volume(const std::filesystem::path& json_path);

/// Dispatches on extension: `.mhd` -> MetaImage, `.json` -> raw-f32 volume.
CtVolume load_volume(const std::filesystem::path& path);

enum class ImageFormat { raw_f32, png16 };

/// Sidecar path for an image file: the extension replaced by `.json`.
std::filesystem::path sidecar_path(const std::filesystem::path& image_path);

/// raw_f32: little-endian float32 row-major. png16: 16-bit grayscale with
/// values mapped affinely from [min, max] to [0, 65535]. Both write a JSON
/// sidecar {"width","height","pixel_spacing_mm","units","min","max"}.
void save_image(const Image2D& img, const std::filesystem::path& path, ImageFormat format,
                const std::string& units = "");

/// Loads a raw-f32 image through its sidecar.
Image2D load_image(const std::filesystem::path& path);

}  // namespace lungsim
