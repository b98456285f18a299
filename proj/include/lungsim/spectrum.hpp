#pragma once

#include <filesystem>

#include "lungsim/materials.hpp"

namespace lungsim {

/// Photon fluence in 1-keV bins; bin k holds energy k+1 keV, so the last
/// bin is the peak voltage.
struct Spectrum {
  int kvp = 0;
  Eigen::ArrayXd fluence;

  Spectrum() = default;
  explicit Spectrum(int peak_kev) : kvp(peak_kev), fluence(Eigen::ArrayXd::Zero(peak_kev)) {}

  double& at(int energy_kev) { return fluence[energy_kev - 1]; }
  double at(int energy_kev) const { return fluence[energy_kev - 1]; }
  /// Energy grid 1..kvp in keV.
  Eigen::ArrayXd energies() const { return Eigen::ArrayXd::LinSpaced(kvp, 1.0, double(kvp)); }

  void validate() const;
};

/// Monochromatic spectrum: a single bin at `energy_kev` with `value`.
Spectrum monochromatic(int energy_kev, double value = 1.0);

struct DetectorModel {
  double scint_density_g_cm3 = 4.51;
  double scint_thickness_mm = 0.6;

  void validate() const;
};

inline constexpr int kMinKvp = 40;
inline constexpr int kMaxKvp = 150;

/// Kramers bremsstrahlung (kvp - E) / E times aluminium transmission.
Spectrum source_spectrum(int kvp, double filtration_mm_al = 3.5,
                         const MaterialLibrary& lib = MaterialLibrary::builtin());

/// `energy_keV,fluence` CSV with integer energies; missing bins are zero.
Spectrum load_spectrum_csv(const std::filesystem::path& path);
void save_spectrum_csv(const Spectrum& s, const std::filesystem::path& path);

/// Absorbed fraction of the scintillator, 1 - exp(-mu/rho * rho * D).
double quantum_efficiency(const DetectorModel& det, double energy_kev,
                          const MaterialLibrary& lib = MaterialLibrary::builtin());

/// Φ(E) = Φ'(E) · Q(E) · E.
Spectrum effective_spectrum(const Spectrum& src, const DetectorModel& det = {},
                            const MaterialLibrary& lib = MaterialLibrary::builtin());

}  // namespace lungsim
