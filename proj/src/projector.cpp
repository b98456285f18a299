#include "lungsim/projector.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Geometry>

namespace lungsim {
namespace {

/// A ray in continuous voxel-index coordinates: cell i spans [i, i+1).
/// The ray runs from the source (t = 0) to the detector pixel (t = 1);
/// `mm_per_t` converts the ray parameter to millimetres.
struct IndexRay {
  Vec3d start;
  Vec3d dir;
  double mm_per_t;
};

struct DetectorFrame {
  Vec3d source;
  Vec3d center;
  Vec3d u;  // +column
  Vec3d v;  // +row, downward on the image
};

DetectorFrame detector_frame(const ProjectionGeometry& g, const Vec3d& iso) {
  // Rotating the sample by +theta equals rotating source and detector by -theta.
  const double theta = -g.rotation_deg * std::numbers::pi / 180.0;
  const Eigen::Matrix3d rot = Eigen::AngleAxisd(theta, Vec3d::UnitZ()).toRotationMatrix();
  return {iso + rot * Vec3d(0.0, -g.source_to_isocenter_mm, 0.0),
          iso + rot * Vec3d(0.0, g.isocenter_to_detector_mm, 0.0), rot * Vec3d::UnitX(), -Vec3d::UnitZ()};
}

bool clip(const IndexRay& ray, const Vec3i& dims, double& t0, double& t1) {
  t0 = 0.0;
  t1 = 1.0;
  for (int a = 0; a < 3; ++a) {
    if (ray.dir[a] == 0.0) {
      if (ray.start[a] < 0.0 || ray.start[a] > dims[a]) return false;
      continue;
    }
    double lo = (0.0 - ray.start[a]) / ray.dir[a];
    double hi = (double(dims[a]) - ray.start[a]) / ray.dir[a];
    if (lo > hi) std::swap(lo, hi);
    t0 = std::max(t0, lo);
    t1 = std::min(t1, hi);
  }
  return t1 > t0;
}

/// Incremental grid traversal; adds value * intersection length (mm).
template <typename Scalar, std::size_t N>
void trace_exact(const IndexRay& ray, const std::array<const Volume<Scalar>*, N>& vols, double* acc) {
  const Vec3i& dims = vols[0]->dims;
  double t, t_end;
  if (!clip(ray, dims, t, t_end)) return;

  int idx[3], step[3];
  double t_next[3];
  for (int a = 0; a < 3; ++a) {
    idx[a] = std::clamp(int(std::floor(ray.start[a] + t * ray.dir[a])), 0, dims[a] - 1);
    step[a] = ray.dir[a] > 0.0 ? 1 : ray.dir[a] < 0.0 ? -1 : 0;
    t_next[a] = step[a] == 0 ? std::numeric_limits<double>::infinity()
                             : (idx[a] + (step[a] > 0) - ray.start[a]) / ray.dir[a];
  }

  while (t < t_end) {
    const int a = t_next[0] < t_next[1] ? (t_next[0] < t_next[2] ? 0 : 2) : (t_next[1] < t_next[2] ? 1 : 2);
    const double tn = std::min(t_next[a], t_end);
    if (tn > t) {
      const double len = (tn - t) * ray.mm_per_t;
      const Eigen::Index off = vols[0]->index(idx[0], idx[1], idx[2]);
      for (std::size_t k = 0; k < N; ++k) acc[k] += len * double(vols[k]->values[off]);
    }
    t = tn;
    idx[a] += step[a];
    if (idx[a] < 0 || idx[a] >= dims[a]) break;
    t_next[a] = (idx[a] + (step[a] > 0) - ray.start[a]) / ray.dir[a];
  }
}

/// Midpoint-rule ray marching over the trilinear interpolant (cell centres
/// at i + 0.5, clamped to the edge cells inside the box, zero outside).
template <typename Scalar, std::size_t N>
void trace_trilinear(const IndexRay& ray, const std::array<const Volume<Scalar>*, N>& vols, double step_mm,
                     double* acc) {
  const Vec3i& dims = vols[0]->dims;
  double t0, t1;
  if (!clip(ray, dims, t0, t1)) return;
  const double length_mm = (t1 - t0) * ray.mm_per_t;
  const auto steps = std::max<long>(1, long(std::ceil(length_mm / step_mm)));
  const double dt = (t1 - t0) / double(steps);
  const double h = dt * ray.mm_per_t;

  for (long s = 0; s < steps; ++s) {
    const Vec3d q = ray.start + (t0 + (double(s) + 0.5) * dt) * ray.dir - Vec3d::Constant(0.5);
    int i0[3], i1[3];
    double w[3];
    for (int a = 0; a < 3; ++a) {
      const double c = std::clamp(q[a], 0.0, double(dims[a] - 1));
      i0[a] = std::min(int(c), dims[a] - 1);
      i1[a] = std::min(i0[a] + 1, dims[a] - 1);
      w[a] = c - i0[a];
    }
    for (int corner = 0; corner < 8; ++corner) {
      const int x = corner & 1 ? i1[0] : i0[0];
      const int y = corner & 2 ? i1[1] : i0[1];
      const int z = corner & 4 ? i1[2] : i0[2];
      const double weight = (corner & 1 ? w[0] : 1.0 - w[0]) * (corner & 2 ? w[1] : 1.0 - w[1]) *
                            (corner & 4 ? w[2] : 1.0 - w[2]);
      if (weight == 0.0) continue;
      const Eigen::Index off = vols[0]->index(x, y, z);
      for (std::size_t k = 0; k < N; ++k) acc[k] += h * weight * double(vols[k]->values[off]);
    }
  }
}

/// Projects N volumes on one grid; returns sum(value * length_mm) per pixel.
template <typename Scalar, std::size_t N>
std::array<RowArray<double>, N> project_grid(const std::array<const Volume<Scalar>*, N>& vols,
                                             const ProjectionGeometry& geom) {
  geom.validate();
  const Volume<Scalar>& ref = *vols[0];
  ref.validate();
  for (const auto* v : vols)
    if (!v->same_grid(ref)) throw Error(ErrorKind::invalid_argument, "volume", "volumes must share one grid");

  const DetectorFrame f = detector_frame(geom, ref.center());
  const Vec3d lo = ref.origin - 0.5 * ref.spacing;
  const Vec3d inv_spacing = ref.spacing.cwiseInverse();
  const double step_mm = 0.5 * ref.spacing.minCoeff();

  std::array<RowArray<double>, N> out;
  for (auto& img : out) img = RowArray<double>::Zero(geom.rows, geom.cols);

#pragma omp parallel for schedule(dynamic)
  for (int r = 0; r < geom.rows; ++r) {
    const double v = (double(r) + 0.5 - 0.5 * geom.rows) * geom.pixel_pitch_mm.y();
    for (int c = 0; c < geom.cols; ++c) {
      const double u = (double(c) + 0.5 - 0.5 * geom.cols) * geom.pixel_pitch_mm.x();
      const Vec3d pixel = f.center + u * f.u + v * f.v;
      const Vec3d d = pixel - f.source;
      const IndexRay ray{(f.source - lo).cwiseProduct(inv_spacing), d.cwiseProduct(inv_spacing), d.norm()};
      double acc[N] = {};
      if (geom.sampling == Sampling::voxel_exact) trace_exact(ray, vols, acc);
      else trace_trilinear(ray, vols, step_mm, acc);
      for (std::size_t k = 0; k < N; ++k) out[k](r, c) = acc[k];
    }
  }
  return out;
}

Vec2d detector_spacing(const ProjectionGeometry& g) { return g.pixel_pitch_mm; }

}  // namespace

void ProjectionGeometry::validate() const {
  if (!(source_to_isocenter_mm > 0.0))
    throw Error(ErrorKind::invalid_argument, "source_to_isocenter_mm", "must be positive");
  if (!(isocenter_to_detector_mm > 0.0))
    throw Error(ErrorKind::invalid_argument, "isocenter_to_detector_mm", "must be positive");
  if (cols <= 0 || rows <= 0) throw Error(ErrorKind::invalid_argument, "detector_px", "detector raster must be positive");
  if (!(pixel_pitch_mm.array() > 0.0).all())
    throw Error(ErrorKind::invalid_argument, "pixel_pitch_mm", "must be positive");
  if (!(std::abs(rotation_deg) <= 30.0))
    throw Error(ErrorKind::invalid_argument, "rotation_deg", "|rotation| must not exceed 30 degrees");
}

template <typename Scalar>
Image<Scalar> project_density(const Volume<Scalar>& density, const ProjectionGeometry& geom) {
  auto [sum] = project_grid<Scalar, 1>({&density}, geom);
  // g/cm^3 * mm -> g/cm^2
  return Image<Scalar>((sum * 0.1).template cast<Scalar>(), detector_spacing(geom));
}

template Image<float> project_density(const Volume<float>&, const ProjectionGeometry&);
template Image<double> project_density(const Volume<double>&, const ProjectionGeometry&);

Image2D project_mask_thickness(const VoxelMask& mask, const ProjectionGeometry& geom) {
  auto [sum] = project_grid<std::uint8_t, 1>({&mask}, geom);
  return Image2D(sum.cast<float>(), detector_spacing(geom));
}

std::vector<ProjectionGeometry> make_angle_set(const ProjectionGeometry& center, int count, double step_deg) {
  if (count < 1) throw Error(ErrorKind::invalid_argument, "count", "need at least one angle");
  std::vector<ProjectionGeometry> out;
  for (int i = 0; i < count; ++i) {
    ProjectionGeometry g = center;
    g.rotation_deg = center.rotation_deg + double(i - count / 2) * step_deg;
    out.push_back(g);
  }
  return out;
}

ProjectionSet project_case(const MaterialMaps& maps, const VoxelMask& lung,
                           const std::vector<ProjectionGeometry>& geometries) {
  if (!lung.same_grid(maps.density[0]))
    throw Error(ErrorKind::invalid_argument, "lung_mask", "mask grid differs from the density grid");
  DensityVolume lung_f = DensityVolume::like(lung);
  lung_f.values = lung.values.cast<float>();

  ProjectionSet set;
  for (const auto& g : geometries) {
    auto sums = project_grid<float, 4>({&maps.density[0], &maps.density[1], &maps.density[2], &lung_f}, g);
    ProjectionSet::View view{g, {}, Image2D(sums[3].cast<float>(), detector_spacing(g))};
    for (std::size_t i = 0; i < 3; ++i) view.density[i] = Image2D((sums[i] * 0.1).cast<float>(), detector_spacing(g));
    set.views.push_back(std::move(view));
    set.magnification = g.magnification();
  }
  return set;
}

}  // namespace lungsim
