#include "lungsim/postprocess.hpp"

#include <cmath>
#include <vector>

namespace lungsim {
namespace {

constexpr double kBinomial[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};

/// Mirror index without repeating the edge sample (…2 1 | 0 1 2 … n-1 | n-2 …).
Eigen::Index mirror(Eigen::Index i, Eigen::Index n) {
  if (n == 1) return 0;
  const Eigen::Index period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

/// Separable 5-tap filter; `scale` multiplies each 1-D pass.
RowArray<double> filter(const RowArray<double>& in, double scale) {
  const Eigen::Index rows = in.rows(), cols = in.cols();
  RowArray<double> tmp(rows, cols), out(rows, cols);
#pragma omp parallel for schedule(static)
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      double s = 0.0;
      for (int k = -2; k <= 2; ++k) s += kBinomial[k + 2] * in(r, mirror(c + k, cols));
      tmp(r, c) = scale * s;
    }
#pragma omp parallel for schedule(static)
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      double s = 0.0;
      for (int k = -2; k <= 2; ++k) s += kBinomial[k + 2] * tmp(mirror(r + k, rows), c);
      out(r, c) = scale * s;
    }
  return out;
}

RowArray<double> mirror_pad(const RowArray<double>& in, Eigen::Index rows, Eigen::Index cols) {
  RowArray<double> out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) out(r, c) = in(mirror(r, in.rows()), mirror(c, in.cols()));
  return out;
}

}  // namespace

void PyramidConfig::validate() const {
  if (levels < 2) throw Error(ErrorKind::invalid_argument, "levels", "pyramid needs at least two levels");
  for (auto [level, g] : gains) {
    if (level < 0 || level > levels - 2)
      throw Error(ErrorKind::invalid_argument, "gains", "level " + std::to_string(level) + " is not a band-pass level");
    if (!(g > 0.0)) throw Error(ErrorKind::invalid_argument, "gains", "gains must be positive");
  }
}

void LutConfig::validate() const {
  if (!(left_clip < right_clip)) throw Error(ErrorKind::invalid_argument, "left_clip", "left_clip must be below right_clip");
  if (!(toe >= 0.0) || !(shoulder >= 0.0)) throw Error(ErrorKind::invalid_argument, "toe", "blend widths must be >= 0");
  if (toe + shoulder > right_clip - left_clip)
    throw Error(ErrorKind::invalid_argument, "shoulder", "toe and shoulder overlap");
}

double LutConfig::operator()(double x) const {
  // Slope of the linear section; chosen so the curve reaches 1 at right_clip.
  const double slope = 1.0 / ((right_clip - left_clip) - 0.5 * (toe + shoulder));
  if (x <= left_clip) return 0.0;
  if (x >= right_clip) return 1.0;
  if (x < left_clip + toe) {
    const double d = x - left_clip;
    return slope * d * d / (2.0 * toe);
  }
  if (x > right_clip - shoulder) {
    const double d = right_clip - x;
    return 1.0 - slope * d * d / (2.0 * shoulder);
  }
  return slope * (0.5 * toe + (x - left_clip - toe));
}

RowArray<double> pyramid_down(const RowArray<double>& img) {
  const RowArray<double> blurred = filter(img, 1.0);
  RowArray<double> out((img.rows() + 1) / 2, (img.cols() + 1) / 2);
  for (Eigen::Index r = 0; r < out.rows(); ++r)
    for (Eigen::Index c = 0; c < out.cols(); ++c) out(r, c) = blurred(2 * r, 2 * c);
  return out;
}

RowArray<double> pyramid_up(const RowArray<double>& img, Eigen::Index rows, Eigen::Index cols) {
  RowArray<double> z = RowArray<double>::Zero(rows, cols);
  for (Eigen::Index r = 0; r < img.rows() && 2 * r < rows; ++r)
    for (Eigen::Index c = 0; c < img.cols() && 2 * c < cols; ++c) z(2 * r, 2 * c) = img(r, c);
  return filter(z, 2.0);
}

template <typename Scalar>
Image<Scalar> pyramid_boost(const Image<Scalar>& img, const PyramidConfig& cfg) {
  cfg.validate();
  const Eigen::Index block = Eigen::Index(1) << (cfg.levels - 1);
  if (img.width() < block || img.height() < block)
    throw Error(ErrorKind::invalid_argument, "levels",
                std::to_string(cfg.levels) + " levels need sides of at least " + std::to_string(block) + " pixels");
  const Eigen::Index rows = (img.height() + block - 1) / block * block;
  const Eigen::Index cols = (img.width() + block - 1) / block * block;
  const RowArray<double> src = img.pixels.template cast<double>();

  std::vector<RowArray<double>> gauss{mirror_pad(src, rows, cols)};
  for (int l = 1; l < cfg.levels; ++l) gauss.push_back(pyramid_down(gauss.back()));

  RowArray<double> out = gauss.back();
  for (int l = cfg.levels - 2; l >= 0; --l) {
    const RowArray<double>& g = gauss[std::size_t(l)];
    const RowArray<double> predicted = pyramid_up(gauss[std::size_t(l) + 1], g.rows(), g.cols());
    out = pyramid_up(out, g.rows(), g.cols()) + cfg.gain(l) * (g - predicted);
  }
  Image<Scalar> result = img;
  result.pixels = out.topLeftCorner(img.height(), img.width()).template cast<Scalar>();
  return result;
}

template Image<float> pyramid_boost(const Image<float>&, const PyramidConfig&);
template Image<double> pyramid_boost(const Image<double>&, const PyramidConfig&);

template <typename Scalar>
Image<Scalar> apply_lut(const Image<Scalar>& img, const LutConfig& cfg) {
  cfg.validate();
  Image<Scalar> out = img;
  out.pixels = img.pixels.unaryExpr([&](Scalar x) { return Scalar(cfg(double(x))); });
  return out;
}

template Image<float> apply_lut(const Image<float>&, const LutConfig&);
template Image<double> apply_lut(const Image<double>&, const LutConfig&);

}  // namespace lungsim
