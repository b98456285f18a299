#pragma once

#include <map>

#include "lungsim/types.hpp"

namespace lungsim {

/// Laplacian pyramid with `levels` images: band-pass levels P0 (finest) to
/// P(levels-2) and one low-pass residual. `gains` boosts band-pass levels;
/// absent levels keep gain 1 and the residual is never scaled.
struct PyramidConfig {
  int levels = 9;
  std::map<int, double> gains = {{0, 2.0}, {1, 2.0}};

  double gain(int level) const {
    auto it = gains.find(level);
    return it == gains.end() ? 1.0 : it->second;
  }
  void validate() const;
};

/// Soft-clipping s-curve onto [0, 1]: flat below left_clip and above
/// right_clip, quadratic toe/shoulder of the given widths, linear between.
/// The curve is C1 everywhere.
struct LutConfig {
  double left_clip = 0.0;
  double right_clip = 8.0;
  double toe = 1.0;
  double shoulder = 1.0;

  void validate() const;
  double operator()(double x) const;
};

/// Decomposes, scales band-pass levels and reconstructs. Images whose sides
/// are not multiples of 2^(levels-1) are mirror-padded and cropped back;
/// throws when a side is shorter than 2^(levels-1).
template <typename Scalar>
Image<Scalar> pyramid_boost(const Image<Scalar>& img, const PyramidConfig& cfg = {});

template <typename Scalar>
Image<Scalar> apply_lut(const Image<Scalar>& img, const LutConfig& cfg = {});

/// 5-tap binomial blur + decimation by two, mirror boundaries.
RowArray<double> pyramid_down(const RowArray<double>& img);
/// Zero insertion + 5-tap binomial interpolation to `rows` x `cols`.
RowArray<double> pyramid_up(const RowArray<double>& img, Eigen::Index rows, Eigen::Index cols);

}  // namespace lungsim
