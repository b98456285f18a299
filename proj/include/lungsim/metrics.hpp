#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lungsim/types.hpp"

namespace lungsim {

struct LossWeights {
  double w_depth = 2.0;
  double w_ext = 10.0;

  void validate() const;
};

using ConstMapRef = Eigen::Ref<const RowArray<double>>;

/// Mean absolute error over all pixels.
double mae_baseline(const ConstMapRef& y, const ConstMapRef& p);
/// (1/N) sum |y - p| * y * w_depth.
double loss_lung(const ConstMapRef& y, const ConstMapRef& p, const LossWeights& w = {});
/// sum |dx y - dx p| + |dy y - dy p| with forward differences (backward on
/// the last row/column). Not normalised by N.
double loss_grad(const ConstMapRef& y, const ConstMapRef& p);
/// (1/N) sum |y - p| * [y == 0] * w_ext.
double loss_ext(const ConstMapRef& y, const ConstMapRef& p, const LossWeights& w = {});
double loss_total(const ConstMapRef& y, const ConstMapRef& p, const LossWeights& w = {});

/// Finite-difference gradient used by loss_grad, along columns (x) or rows (y).
RowArray<double> forward_gradient_x(const ConstMapRef& m);
RowArray<double> forward_gradient_y(const ConstMapRef& m);

struct VolumeCase {
  std::string case_id;
  double pred_l = 0.0;
  double gt_l = 0.0;
};

struct VolumeReport {
  std::vector<VolumeCase> cases;
  double mae = 0.0;
  double mse = 0.0;
  double pearson_r = 0.0;
  double p_value = 1.0;
};

/// Pearson correlation; throws for fewer than 3 points or zero variance.
double pearson(std::span<const double> a, std::span<const double> b);
/// Two-sided p-value of r under the t distribution with n - 2 dof.
double pearson_p_value(double r, std::size_t n);

/// MAE, MSE and Pearson r with its p-value. r and p are NaN (null in JSON)
/// when fewer than 3 cases or a constant column leave r undefined.
VolumeReport volume_metrics(std::span<const double> pred, std::span<const double> gt);
VolumeReport volume_metrics(const std::vector<VolumeCase>& cases);

/// `case_id,pred_l,gt_l` CSV.
std::vector<VolumeCase> read_volume_csv(const std::filesystem::path& path);
void write_volume_csv(const std::vector<VolumeCase>& cases, const std::filesystem::path& path);
/// {"mae","mse","pearson_r","p_value","n"}
std::string summary_json(const VolumeReport& report);

}  // namespace lungsim
