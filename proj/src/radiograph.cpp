#include "lungsim/radiograph.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace lungsim {

template <typename Scalar>
Image<Scalar> form_intensity(std::span<const MaterialPath<Scalar>> paths, const Spectrum& effective,
                             const MaterialLibrary& lib) {
  effective.validate();
  if (paths.empty()) throw Error(ErrorKind::invalid_argument, "paths", "need at least one material map");
  const Image<Scalar>& ref = *paths.front().density;
  for (const auto& p : paths)
    if (!p.density->same_raster(ref))
      throw Error(ErrorKind::invalid_argument, to_string(p.material), "density maps do not share one raster");

  // Only bins carrying photons enter the sum.
  std::vector<int> energies;
  for (int e = 1; e <= effective.kvp; ++e)
    if (effective.at(e) > 0.0) energies.push_back(e);
  const auto n_mat = Eigen::Index(paths.size());
  const auto n_e = Eigen::Index(energies.size());

  Eigen::MatrixXd coeff(n_mat, n_e);  // mu/rho per material and energy
  Eigen::VectorXd phi(n_e);
  for (Eigen::Index k = 0; k < n_e; ++k) {
    phi[k] = effective.at(energies[std::size_t(k)]);
    for (Eigen::Index i = 0; i < n_mat; ++i) coeff(i, k) = lib.mu_rho(paths[std::size_t(i)].material, energies[std::size_t(k)]);
  }

  const int width = ref.width(), height = ref.height();
  Image<Scalar> out(width, height, ref.pixel_spacing);
#pragma omp parallel for schedule(static)
  for (int r = 0; r < height; ++r) {
    Eigen::MatrixXd d(width, n_mat);
    for (Eigen::Index i = 0; i < n_mat; ++i) d.col(i) = paths[std::size_t(i)].density->pixels.row(r).transpose().template cast<double>();
    const Eigen::MatrixXd exponent = d * coeff;  // width x energies
    out.pixels.row(r) = ((-exponent.array()).exp().matrix() * phi).transpose().template cast<Scalar>();
  }
  return out;
}

template Image<float> form_intensity(std::span<const MaterialPath<float>>, const Spectrum&, const MaterialLibrary&);
template Image<double> form_intensity(std::span<const MaterialPath<double>>, const Spectrum&, const MaterialLibrary&);

double flat_field(const Spectrum& effective) {
  effective.validate();
  double f = 0.0;
  for (int e = 1; e <= effective.kvp; ++e) f += effective.at(e);
  if (!(f > 0.0)) throw Error(ErrorKind::invalid_argument, "spectrum", "flat field is zero");
  return f;
}

template <typename Scalar>
Image<Scalar> neg_log(const Image<Scalar>& intensity, double flat) {
  if (!(flat > 0.0)) throw Error(ErrorKind::invalid_argument, "flat", "flat field must be positive");
  for (int r = 0; r < intensity.height(); ++r)
    for (int c = 0; c < intensity.width(); ++c)
      if (!(intensity(r, c) > Scalar(0)))
        throw Error(ErrorKind::domain, "intensity",
                    "nonpositive intensity at row " + std::to_string(r) + ", col " + std::to_string(c));
  Image<Scalar> out = intensity;
  // I can exceed F by float rounding (or noise) on unattenuated rays
  out.pixels = (-(intensity.pixels.template cast<double>() / flat).log()).max(0.0).template cast<Scalar>();
  return out;
}

template Image<float> neg_log(const Image<float>&, double);
template Image<double> neg_log(const Image<double>&, double);

void add_poisson_noise(Image2D& intensity, double flat, double flat_photons, std::uint64_t seed) {
  if (!(flat > 0.0) || !(flat_photons > 0.0))
    throw Error(ErrorKind::invalid_argument, "noise", "flat field and photon count must be positive");
  const double scale = flat_photons / flat;
#pragma omp parallel for schedule(static)
  for (int r = 0; r < intensity.height(); ++r) {
    std::mt19937_64 rng(seed ^ (0x9E3779B97F4A7C15ull * std::uint64_t(r + 1)));
    for (int c = 0; c < intensity.width(); ++c) {
      std::poisson_distribution<long long> draw(std::max(double(intensity(r, c)) * scale, 0.0));
      const auto counts = std::max<long long>(draw(rng), 1);
      intensity(r, c) = float(double(counts) / scale);
    }
  }
}

}  // namespace lungsim
