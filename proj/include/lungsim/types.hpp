#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Core>

#include "lungsim/error.hpp"

namespace lungsim {

using Vec2d = Eigen::Vector2d;
using Vec3d = Eigen::Vector3d;
using Vec3i = Eigen::Vector3i;

template <typename Scalar>
using RowArray = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Regular 3-D grid. Values are stored x-fastest, z-slowest; `origin` is the
/// centre of voxel (0,0,0) in mm.
template <typename Scalar>
struct Volume {
  using scalar_type = Scalar;
  using SliceMap = Eigen::Map<RowArray<Scalar>>;
  using ConstSliceMap = Eigen::Map<const RowArray<Scalar>>;

  Vec3i dims = Vec3i::Zero();
  Vec3d spacing = Vec3d::Ones();
  Vec3d origin = Vec3d::Zero();
  Eigen::Array<Scalar, Eigen::Dynamic, 1> values;

  Volume() = default;
  Volume(const Vec3i& d, const Vec3d& s, const Vec3d& o, Scalar fill = Scalar(0))
      : dims(d), spacing(s), origin(o),
        values(Eigen::Array<Scalar, Eigen::Dynamic, 1>::Constant(d.prod(), fill)) {}

  /// Same grid as `other`, filled with `fill`.
  template <typename Other>
  static Volume like(const Volume<Other>& other, Scalar fill = Scalar(0)) {
    return Volume(other.dims, other.spacing, other.origin, fill);
  }

  int nx() const { return dims.x(); }
  int ny() const { return dims.y(); }
  int nz() const { return dims.z(); }
  Eigen::Index size() const { return values.size(); }
  Eigen::Index slice_size() const { return Eigen::Index(dims.x()) * dims.y(); }

  Eigen::Index index(int x, int y, int z) const {
    return (Eigen::Index(z) * dims.y() + y) * dims.x() + x;
  }
  Scalar& operator()(int x, int y, int z) { return values[index(x, y, z)]; }
  Scalar operator()(int x, int y, int z) const { return values[index(x, y, z)]; }

  /// Axial slice as an ny-by-nx row-major view (rows follow y).
  SliceMap slice(int z) { return SliceMap(values.data() + z * slice_size(), dims.y(), dims.x()); }
  ConstSliceMap slice(int z) const {
    return ConstSliceMap(values.data() + z * slice_size(), dims.y(), dims.x());
  }

  double voxel_volume_mm3() const { return spacing.prod(); }
  /// Centre of the physical box covered by the voxels.
  Vec3d center() const { return origin + 0.5 * (dims.cast<double>() - Vec3d::Ones()).cwiseProduct(spacing); }

  template <typename Other>
  bool same_grid(const Volume<Other>& o) const {
    return dims == o.dims && spacing == o.spacing && origin == o.origin;
  }

  void validate() const {
    if ((dims.array() <= 0).any())
      throw Error(ErrorKind::invalid_argument, "dims", "volume dimensions must be positive");
    if (!(spacing.array() > 0.0).all())
      throw Error(ErrorKind::invalid_argument, "spacing", "voxel spacing must be strictly positive");
    if (values.size() != dims.prod())
      throw Error(ErrorKind::invalid_argument, "values", "value count does not match dims");
  }
};

/// Hounsfield units, clamped to [-1024, 3071] on load.
using CtVolume = Volume<float>;
/// Binary voxel mask, values in {0, 1}.
using VoxelMask = Volume<std::uint8_t>;
/// Density in g/cm^3.
using DensityVolume = Volume<float>;

inline constexpr float kHuMin = -1024.0f;
inline constexpr float kHuMax = 3071.0f;
inline constexpr float kAirHu = -1000.0f;

/// 2-D raster, row-major with y increasing downward. `pixel_spacing` is
/// (x, y) in mm at the detector plane.
template <typename Scalar>
struct Image {
  using scalar_type = Scalar;

  RowArray<Scalar> pixels;
  Vec2d pixel_spacing = Vec2d::Ones();

  Image() = default;
  Image(int width, int height, const Vec2d& spacing = Vec2d::Ones(), Scalar fill = Scalar(0))
      : pixels(RowArray<Scalar>::Constant(height, width, fill)), pixel_spacing(spacing) {}
  Image(RowArray<Scalar> p, const Vec2d& spacing) : pixels(std::move(p)), pixel_spacing(spacing) {}

  int width() const { return int(pixels.cols()); }
  int height() const { return int(pixels.rows()); }
  Scalar& operator()(int row, int col) { return pixels(row, col); }
  Scalar operator()(int row, int col) const { return pixels(row, col); }

  template <typename Other>
  bool same_raster(const Image<Other>& o) const {
    return width() == o.width() && height() == o.height();
  }

  template <typename Other>
  Image<Other> cast() const {
    return Image<Other>(pixels.template cast<Other>(), pixel_spacing);
  }
};

using Image2D = Image<float>;

}  // namespace lungsim
