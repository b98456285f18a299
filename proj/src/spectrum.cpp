#include "lungsim/spectrum.hpp"

#include <cmath>
#include <fstream>

#include "lungsim/csv.hpp"

namespace lungsim {

void Spectrum::validate() const {
  if (kvp < 1 || fluence.size() != kvp) throw Error(ErrorKind::invalid_argument, "kvp", "spectrum bins do not match kvp");
  if (!fluence.allFinite() || (fluence < 0.0).any())
    throw Error(ErrorKind::invalid_argument, "fluence", "fluence must be finite and non-negative");
}

Spectrum monochromatic(int energy_kev, double value) {
  Spectrum s(energy_kev);
  s.at(energy_kev) = value;
  return s;
}

void DetectorModel::validate() const {
  if (!(scint_density_g_cm3 > 0.0)) throw Error(ErrorKind::invalid_argument, "scint_density_g_cm3", "must be positive");
  if (!(scint_thickness_mm > 0.0)) throw Error(ErrorKind::invalid_argument, "scint_thickness_mm", "must be positive");
}

Spectrum source_spectrum(int kvp, double filtration_mm_al, const MaterialLibrary& lib) {
  if (kvp < kMinKvp || kvp > kMaxKvp)
    throw Error(ErrorKind::domain, "kvp", "kVp must lie in [" + std::to_string(kMinKvp) + ", " +
                                              std::to_string(kMaxKvp) + "], got " + std::to_string(kvp));
  if (!(filtration_mm_al >= 0.0)) throw Error(ErrorKind::invalid_argument, "filtration_mm_al", "must be non-negative");
  const auto& al = lib.table(Material::aluminum);
  Spectrum s(kvp);
  for (int e = 1; e <= kvp; ++e) {
    const double kramers = double(kvp - e) / double(e);
    s.at(e) = kramers * std::exp(-al.mu_rho(e) * al.nominal_density() * 0.1 * filtration_mm_al);
  }
  return s;
}

Spectrum load_spectrum_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path.string());
  const auto ec = t.column("energy_keV");
  const auto fc = t.column("fluence");
  if (t.rows.empty()) throw Error(ErrorKind::format, "fluence", "spectrum file has no rows");
  std::vector<std::pair<int, double>> bins;
  int kvp = 0;
  for (const auto& row : t.rows) {
    const double e = parse_double(row[ec], "energy_keV");
    const double f = parse_double(row[fc], "fluence");
    if (e != std::floor(e) || e < 1.0 || e > kMaxKvp)
      throw Error(ErrorKind::format, "energy_keV", "energies must be integers in [1, " + std::to_string(kMaxKvp) + "]");
    if (!(f >= 0.0) || !std::isfinite(f)) throw Error(ErrorKind::format, "fluence", "fluence must be finite and >= 0");
    bins.emplace_back(int(e), f);
    kvp = std::max(kvp, int(e));
  }
  Spectrum s(kvp);
  std::vector<bool> seen(std::size_t(kvp) + 1, false);
  for (auto [e, f] : bins) {
    if (seen[std::size_t(e)]) throw Error(ErrorKind::format, "energy_keV", "duplicate energy " + std::to_string(e));
    seen[std::size_t(e)] = true;
    s.at(e) = f;
  }
  return s;
}

void save_spectrum_csv(const Spectrum& s, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, path.string(), "cannot write spectrum");
  out.precision(10);
  out << "energy_keV,fluence\n";
  for (int e = 1; e <= s.kvp; ++e) out << e << ',' << s.at(e) << '\n';
}

double quantum_efficiency(const DetectorModel& det, double energy_kev, const MaterialLibrary& lib) {
  const double mu = lib.mu_rho(Material::csi, energy_kev);
  return -std::expm1(-mu * det.scint_density_g_cm3 * det.scint_thickness_mm * 0.1);
}

Spectrum effective_spectrum(const Spectrum& src, const DetectorModel& det, const MaterialLibrary& lib) {
  src.validate();
  det.validate();
  Spectrum out(src.kvp);
  for (int e = 1; e <= src.kvp; ++e)
    if (src.at(e) != 0.0) out.at(e) = src.at(e) * quantum_efficiency(det, e, lib) * double(e);
  return out;
}

}  // namespace lungsim
