#pragma once

#include <vector>

#include "lungsim/materials.hpp"
#include "lungsim/types.hpp"

namespace lungsim {

/// How a ray samples the voxel grid.
///  - voxel_exact: voxels are constant cells; each ray accumulates value times
///    exact intersection length (incremental grid traversal).
///  - trilinear: fixed-step ray marching (half the smallest spacing) over the
///    trilinearly interpolated grid.
enum class Sampling { voxel_exact, trilinear };

/// Cone-beam geometry. The volume centre sits at the isocenter; at rotation 0
/// the central ray runs along +y, detector columns follow +x and detector
/// row 0 is the highest z (cranial side at the top of the image).
/// `rotation_deg` rotates the sample about the z axis through the isocenter.
struct ProjectionGeometry {
  double source_to_isocenter_mm = 1680.0;
  double isocenter_to_detector_mm = 120.0;
  int cols = 512;
  int rows = 512;
  Vec2d pixel_pitch_mm = Vec2d::Constant(430.0 / 512.0);
  double rotation_deg = 0.0;
  Sampling sampling = Sampling::voxel_exact;

  double source_to_detector_mm() const { return source_to_isocenter_mm + isocenter_to_detector_mm; }
  /// Detector-plane size over isocenter-plane size.
  double magnification() const { return source_to_detector_mm() / source_to_isocenter_mm; }

  void validate() const;
};

/// Line integral of density along every source-to-pixel ray, in g/cm^2.
template <typename Scalar>
Image<Scalar> project_density(const Volume<Scalar>& density, const ProjectionGeometry& geom);

/// Intersection length (mm) of every ray with the mask support.
Image2D project_mask_thickness(const VoxelMask& mask, const ProjectionGeometry& geom);

/// `count` angles at `step_deg` spacing, starting at -(count/2)*step_deg and
/// offset by center.rotation_deg. count 10, step 2 gives -10, -8, ..., +8.
std::vector<ProjectionGeometry> make_angle_set(const ProjectionGeometry& center, int count = 10,
                                               double step_deg = 2.0);

struct ProjectionSet {
  struct View {
    ProjectionGeometry geometry;
    std::array<Image2D, 3> density;  // g/cm^2, indexed like kBodyMaterials
    Image2D lung_thickness;          // mm
  };
  std::vector<View> views;
  double magnification = 1.0;
};

/// Projects all three material maps and the lung mask for each geometry,
/// sharing one traversal per ray.
ProjectionSet project_case(const MaterialMaps& maps, const VoxelMask& lung,
                           const std::vector<ProjectionGeometry>& geometries);

}  // namespace lungsim
