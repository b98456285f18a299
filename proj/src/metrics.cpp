#include <limits>
#include "lungsim/metrics.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include "lungsim/csv.hpp"

namespace lungsim {
namespace {

void check_raster(const ConstMapRef& y, const ConstMapRef& p) {
  if (y.rows() != p.rows() || y.cols() != p.cols())
    throw Error(ErrorKind::invalid_argument, "raster", "ground truth and prediction rasters differ");
  if (y.size() == 0) throw Error(ErrorKind::invalid_argument, "raster", "empty raster");
}

}  // namespace

void LossWeights::validate() const {
  if (!(w_depth > 0.0)) throw Error(ErrorKind::invalid_argument, "w_depth", "must be positive");
  if (!(w_ext > 0.0)) throw Error(ErrorKind::invalid_argument, "w_ext", "must be positive");
}

double mae_baseline(const ConstMapRef& y, const ConstMapRef& p) {
  check_raster(y, p);
  return (y - p).abs().mean();
}

double loss_lung(const ConstMapRef& y, const ConstMapRef& p, const LossWeights& w) {
  check_raster(y, p);
  w.validate();
  return ((y - p).abs() * y).mean() * w.w_depth;
}

RowArray<double> forward_gradient_x(const ConstMapRef& m) {
  RowArray<double> g = RowArray<double>::Zero(m.rows(), m.cols());
  const Eigen::Index n = m.cols();
  if (n < 2) return g;
  g.leftCols(n - 1) = m.rightCols(n - 1) - m.leftCols(n - 1);
  g.col(n - 1) = m.col(n - 1) - m.col(n - 2);
  return g;
}

RowArray<double> forward_gradient_y(const ConstMapRef& m) {
  RowArray<double> g = RowArray<double>::Zero(m.rows(), m.cols());
  const Eigen::Index n = m.rows();
  if (n < 2) return g;
  g.topRows(n - 1) = m.bottomRows(n - 1) - m.topRows(n - 1);
  g.row(n - 1) = m.row(n - 1) - m.row(n - 2);
  return g;
}

double loss_grad(const ConstMapRef& y, const ConstMapRef& p) {
  check_raster(y, p);
  return (forward_gradient_x(y) - forward_gradient_x(p)).abs().sum() +
         (forward_gradient_y(y) - forward_gradient_y(p)).abs().sum();
}

double loss_ext(const ConstMapRef& y, const ConstMapRef& p, const LossWeights& w) {
  check_raster(y, p);
  w.validate();
  return ((y - p).abs() * (y == 0.0).cast<double>()).mean() * w.w_ext;
}

double loss_total(const ConstMapRef& y, const ConstMapRef& p, const LossWeights& w) {
  return loss_lung(y, p, w) + loss_grad(y, p) + loss_ext(y, p, w);
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorKind::invalid_argument, "pred", "length mismatch");
  if (a.size() < 3) throw Error(ErrorKind::invalid_argument, "pred", "Pearson needs at least 3 cases");
  const Eigen::Map<const Eigen::ArrayXd> x(a.data(), Eigen::Index(a.size()));
  const Eigen::Map<const Eigen::ArrayXd> y(b.data(), Eigen::Index(b.size()));
  const Eigen::ArrayXd dx = x - x.mean();
  const Eigen::ArrayXd dy = y - y.mean();
  const double sxx = dx.square().sum(), syy = dy.square().sum();
  // a constant column leaves only rounding residue behind after centring
  auto flat = [](const auto& v, const auto& d) { return !(d.abs().maxCoeff() > 1e-12 * std::max(1.0, v.abs().maxCoeff())); };
  if (flat(x, dx) || flat(y, dy)) throw Error(ErrorKind::domain, "pearson", "zero variance input");
  return std::clamp((dx * dy).sum() / std::sqrt(sxx * syy), -1.0, 1.0);
}

double pearson_p_value(double r, std::size_t n) {
  if (n < 3) throw Error(ErrorKind::invalid_argument, "n", "Pearson needs at least 3 cases");
  if (std::abs(r) >= 1.0) return 0.0;
  const double dof = double(n - 2);
  const double t = r * std::sqrt(dof / (1.0 - r * r));
  const boost::math::students_t dist(dof);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

VolumeReport volume_metrics(std::span<const double> pred, std::span<const double> gt) {
  std::vector<VolumeCase> cases;
  if (pred.size() != gt.size()) throw Error(ErrorKind::invalid_argument, "pred", "length mismatch");
  for (std::size_t i = 0; i < pred.size(); ++i) cases.push_back({std::to_string(i), pred[i], gt[i]});
  return volume_metrics(cases);
}

VolumeReport volume_metrics(const std::vector<VolumeCase>& cases) {
  if (cases.empty()) throw Error(ErrorKind::invalid_argument, "cases", "no cases");
  VolumeReport rep{cases};
  std::vector<double> pred, gt;
  for (const auto& c : cases) {
    pred.push_back(c.pred_l);
    gt.push_back(c.gt_l);
  }
  const Eigen::Map<const Eigen::ArrayXd> p(pred.data(), Eigen::Index(pred.size()));
  const Eigen::Map<const Eigen::ArrayXd> g(gt.data(), Eigen::Index(gt.size()));
  rep.mae = (p - g).abs().mean();
  rep.mse = (p - g).square().mean();
  if (cases.size() >= 3) {
    try {
      rep.pearson_r = pearson(pred, gt);
      rep.p_value = pearson_p_value(rep.pearson_r, cases.size());
      return rep;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::domain) throw;
    }
  }
  // undefined correlation: reported as null
  rep.pearson_r = rep.p_value = std::numeric_limits<double>::quiet_NaN();
  return rep;
}

std::vector<VolumeCase> read_volume_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path.string());
  const auto ic = t.column("case_id"), pc = t.column("pred_l"), gc = t.column("gt_l");
  std::vector<VolumeCase> out;
  for (const auto& row : t.rows) out.push_back({row[ic], parse_double(row[pc], "pred_l"), parse_double(row[gc], "gt_l")});
  return out;
}

void write_volume_csv(const std::vector<VolumeCase>& cases, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, path.string(), "cannot write CSV");
  out << "case_id,pred_l,gt_l\n" << std::fixed << std::setprecision(3);
  for (const auto& c : cases) out << c.case_id << ',' << c.pred_l << ',' << c.gt_l << '\n';
}

std::string summary_json(const VolumeReport& report) {
  const nlohmann::json j{{"mae", report.mae},
                         {"mse", report.mse},
                         {"pearson_r", report.pearson_r},
                         {"p_value", report.p_value},
                         {"n", report.cases.size()}};
  return j.dump(2);
}

}  // namespace lungsim
