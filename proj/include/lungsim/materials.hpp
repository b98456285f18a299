#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "lungsim/types.hpp"

namespace lungsim {

enum class Material { bone, soft, adipose, water, csi, aluminum };

/// The three body materials, in the order used by MaterialMaps.
inline constexpr std::array<Material, 3> kBodyMaterials = {Material::bone, Material::soft, Material::adipose};

std::string to_string(Material m);
Material material_from_string(const std::string& name);

/// Tabulated mass-attenuation coefficients for one material.
class MaterialTable {
public:
  MaterialTable(Material id, std::vector<double> energies_kev, std::vector<double> mu_over_rho,
                double nominal_density);

  Material id() const { return id_; }
  double nominal_density() const { return density_; }
  const std::vector<double>& energies() const { return energies_; }
  const std::vector<double>& values() const { return mu_rho_; }
  double min_energy() const { return energies_.front(); }
  double max_energy() const { return energies_.back(); }

  /// cm^2/g, log-log linear interpolation; exact at grid points.
  double mu_rho(double energy_kev) const;

private:
  Material id_;
  std::vector<double> energies_;
  std::vector<double> mu_rho_;
  std::vector<double> log_e_;
  std::vector<double> log_mu_;
  double density_;
};

/// Parses `energy_keV,mu_over_rho_cm2_g` CSV text.
MaterialTable parse_material_table(Material id, std::string_view csv, double nominal_density,
                                   const std::string& source = "table");

class MaterialLibrary {
public:
  /// Tables compiled into the library.
  static const MaterialLibrary& builtin();
  /// Loads `<dir>/manifest.csv` and one `<material>.csv` per manifest entry.
  static MaterialLibrary load(const std::filesystem::path& dir);

  const MaterialTable& table(Material m) const;
  double mu_rho(Material m, double energy_kev) const { return table(m).mu_rho(energy_kev); }

private:
  std::map<Material, MaterialTable> tables_;
};

/// HU window per body material: bone HU > 240, soft 0..240, adipose -200..<0.
struct HuRanges {
  float adipose_min = -200.0f;
  float soft_min = 0.0f;
  float soft_max = 240.0f;

  /// Writes the material owning `hu`; false when hu is below adipose_min.
  bool classify(float hu, Material& out) const {
    if (hu > soft_max) out = Material::bone;
    else if (hu >= soft_min) out = Material::soft;
    else if (hu >= adipose_min) out = Material::adipose;
    else return false;
    return true;
  }
};

/// Relative density (g/cm^3) of `material` that reproduces `hu` at the CT
/// effective energy, clamped at zero.
double density_from_hu(double hu, Material material, double e_ct_kev = 70.0,
                       const MaterialLibrary& lib = MaterialLibrary::builtin());

/// Per-material density volumes on the CT grid, indexed like kBodyMaterials.
struct MaterialMaps {
  std::array<DensityVolume, 3> density;

  const DensityVolume& operator[](Material m) const;
};

MaterialMaps decompose(const CtVolume& vol, double e_ct_kev = 70.0, const HuRanges& ranges = {},
                       const MaterialLibrary& lib = MaterialLibrary::builtin());

}  // namespace lungsim
