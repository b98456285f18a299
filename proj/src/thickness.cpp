#include "lungsim/thickness.hpp"

#include <cmath>

#include "lungsim/preprocess.hpp"

namespace lungsim {
namespace {

/// Row-wise pairwise summation; the order does not depend on threading.
double pairwise_sum(const double* v, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}

/// Pixel extent of the mask along y on slice z, or 0 with no set pixel.
int y_extent(const VoxelMask& m, int z) {
  int lo = m.ny(), hi = -1;
  for (int y = 0; y < m.ny(); ++y)
    for (int x = 0; x < m.nx(); ++x)
      if (m(x, y, z)) {
        lo = std::min(lo, y);
        hi = std::max(hi, y);
        break;
      }
  return hi < lo ? 0 : hi - lo + 1;
}

}  // namespace

void ThicknessMap::validate() const {
  if (!map.pixels.allFinite() || (map.pixels < 0.0f).any())
    throw Error(ErrorKind::invalid_argument, "thickness", "thickness must be finite and non-negative");
  if (!(magnification > 0.0)) throw Error(ErrorKind::invalid_argument, "magnification", "must be positive");
}

void PaCorrection::validate() const {
  if (!(d_prime > 0.0 && d_prime < 1.0)) throw Error(ErrorKind::invalid_argument, "d_prime", "must lie in (0, 1)");
  if (!(pa_diameter_mm > 0.0)) throw Error(ErrorKind::invalid_argument, "pa_diameter_mm", "must be positive");
}

double integrate_volume(const ThicknessMap& tm, const Vec2d& pixel_spacing_mm) {
  tm.validate();
  const double area = pixel_spacing_mm.prod() / (tm.magnification * tm.magnification);
  std::vector<double> rows(std::size_t(tm.map.height()));
  for (int r = 0; r < tm.map.height(); ++r) {
    const Eigen::ArrayXd row = tm.map.pixels.row(r).transpose().cast<double>();
    rows[std::size_t(r)] = pairwise_sum(row.data(), std::size_t(row.size()));
  }
  return pairwise_sum(rows.data(), rows.size()) * area * 1e-6;
}

int reference_row(const Image2D& map) {
  int top = -1, bottom = -1;
  for (int r = 0; r < map.height(); ++r)
    if ((map.pixels.row(r) > 0.0f).any()) {
      if (top < 0) top = r;
      bottom = r;
    }
  if (top < 0) throw Error(ErrorKind::segmentation, "thickness", "no lung support in thickness map");
  return top + (bottom - top + 1) / 3;
}

ThicknessMap normalize_relative(const ThicknessMap& tm) {
  tm.validate();
  const int row = reference_row(tm.map);
  const float ref = tm.map.pixels.row(row).maxCoeff();
  if (!(ref > 0.0f))
    throw Error(ErrorKind::segmentation, "reference_row", "reference row " + std::to_string(row) + " is all zero");
  ThicknessMap out = tm;
  out.map.pixels = tm.map.pixels / ref;
  return out;
}

ThicknessMap pa_correct(const ThicknessMap& relative, const PaCorrection& corr) {
  corr.validate();
  ThicknessMap out = relative;
  out.map.pixels = (relative.map.pixels.cast<double>() * (corr.d_prime * corr.pa_diameter_mm)).cast<float>();
  return out;
}

double diameter_fraction(const CtVolume& ct, const VoxelMask& lung, const DiameterOptions& opt) {
  if (!lung.same_grid(ct)) throw Error(ErrorKind::invalid_argument, "lung_mask", "mask grid differs from CT grid");
  int z_lo = lung.nz(), z_hi = -1;
  for (int z = 0; z < lung.nz(); ++z)
    if (lung.slice(z).any()) {
      z_lo = std::min(z_lo, z);
      z_hi = z;
    }
  if (z_hi < 0) throw Error(ErrorKind::segmentation, "lung_mask", "empty lung mask");
  const int extent = z_hi - z_lo + 1;
  const int z = opt.apex_at_high_z ? z_hi - extent / 6 : z_lo + extent / 6;

  const int lung_px = y_extent(lung, z);
  const int body_px = y_extent(body_mask(ct, opt.body_threshold_hu), z);
  if (body_px == 0) throw Error(ErrorKind::segmentation, "body", "no body on slice " + std::to_string(z));
  if (lung_px == 0) throw Error(ErrorKind::segmentation, "lung_mask", "no lung on slice " + std::to_string(z));
  return double(lung_px) / double(body_px);
}

double estimate_d_prime(const std::vector<DiameterSample>& scans, const DiameterOptions& opt) {
  if (scans.empty()) throw Error(ErrorKind::invalid_argument, "scans", "need at least one scan");
  double sum = 0.0;
  for (const auto& s : scans) sum += diameter_fraction(*s.ct, *s.lung, opt);
  return sum / double(scans.size());
}

}  // namespace lungsim
