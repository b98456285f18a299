#include "lungsim/materials.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>
#include <utility>

#include "lungsim/csv.hpp"

namespace lungsim {

namespace detail {
extern const std::pair<std::string_view, std::string_view> kBuiltinTables[];
extern const int kBuiltinTableCount;
}  // namespace detail

namespace {

constexpr std::pair<Material, const char*> kNames[] = {
    {Material::bone, "bone"}, {Material::soft, "soft"}, {Material::adipose, "adipose"},
    {Material::water, "water"}, {Material::csi, "csi"}, {Material::aluminum, "aluminum"},
};

std::string_view builtin_text(std::string_view name) {
  for (int i = 0; i < detail::kBuiltinTableCount; ++i)
    if (detail::kBuiltinTables[i].first == name) return detail::kBuiltinTables[i].second;
  throw Error(ErrorKind::io, std::string(name), "no built-in table");
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(ErrorKind::io, p.string(), "cannot open attenuation table");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename TextFor>
std::map<Material, MaterialTable> load_tables(std::string_view manifest, TextFor&& text_for) {
  const CsvTable m = parse_csv(manifest, "manifest.csv");
  const auto id_col = m.column("material_id");
  const auto rho_col = m.column("nominal_density_g_cm3");
  std::map<Material, MaterialTable> tables;
  for (const auto& row : m.rows) {
    const Material id = material_from_string(row[id_col]);
    const double rho = parse_double(row[rho_col], "nominal_density_g_cm3");
    tables.emplace(id, parse_material_table(id, text_for(row[id_col]), rho, row[id_col] + ".csv"));
  }
  return tables;
}

}  // namespace

std::string to_string(Material m) {
  for (auto [id, name] : kNames)
    if (id == m) return name;
  return "unknown";
}

Material material_from_string(const std::string& name) {
  for (auto [id, n] : kNames)
    if (name == n) return id;
  throw Error(ErrorKind::invalid_argument, "material_id", "unknown material '" + name + "'");
}

MaterialTable::MaterialTable(Material id, std::vector<double> energies_kev, std::vector<double> mu_over_rho,
                             double nominal_density)
    : id_(id), energies_(std::move(energies_kev)), mu_rho_(std::move(mu_over_rho)), density_(nominal_density) {
  const std::string name = to_string(id);
  if (energies_.size() < 2 || energies_.size() != mu_rho_.size())
    throw Error(ErrorKind::format, name, "table needs at least two (energy, mu/rho) rows");
  for (std::size_t i = 0; i < energies_.size(); ++i) {
    if (!(energies_[i] > 0.0)) throw Error(ErrorKind::format, name, "energies must be positive");
    if (i && !(energies_[i] > energies_[i - 1])) throw Error(ErrorKind::format, name, "energies must increase strictly");
    if (!(mu_rho_[i] > 0.0) || !std::isfinite(mu_rho_[i]))
      throw Error(ErrorKind::format, name, "mu/rho must be positive and finite");
  }
  if (!(density_ > 0.0)) throw Error(ErrorKind::format, name, "nominal density must be positive");
  log_e_.resize(energies_.size());
  log_mu_.resize(energies_.size());
  std::transform(energies_.begin(), energies_.end(), log_e_.begin(), [](double e) { return std::log(e); });
  std::transform(mu_rho_.begin(), mu_rho_.end(), log_mu_.begin(), [](double v) { return std::log(v); });
}

double MaterialTable::mu_rho(double energy_kev) const {
  if (!(energy_kev >= energies_.front() && energy_kev <= energies_.back()))
    throw Error(ErrorKind::domain, "energy", to_string(id_) + " table covers " + std::to_string(energies_.front()) +
                                                 ".." + std::to_string(energies_.back()) + " keV, got " +
                                                 std::to_string(energy_kev));
  auto hi = std::lower_bound(energies_.begin(), energies_.end(), energy_kev);
  const auto i = std::size_t(hi - energies_.begin());
  if (*hi == energy_kev) return mu_rho_[i];
  const double t = (std::log(energy_kev) - log_e_[i - 1]) / (log_e_[i] - log_e_[i - 1]);
  return std::exp(log_mu_[i - 1] + t * (log_mu_[i] - log_mu_[i - 1]));
}

MaterialTable parse_material_table(Material id, std::string_view csv, double nominal_density,
                                   const std::string& source) {
  const CsvTable t = parse_csv(csv, source);
  const auto ec = t.column("energy_keV");
  const auto mc = t.column("mu_over_rho_cm2_g");
  std::vector<double> e, mu;
  for (const auto& row : t.rows) {
    e.push_back(parse_double(row[ec], "energy_keV"));
    mu.push_back(parse_double(row[mc], "mu_over_rho_cm2_g"));
  }
  return MaterialTable(id, std::move(e), std::move(mu), nominal_density);
}

const MaterialLibrary& MaterialLibrary::builtin() {
  static const MaterialLibrary lib = [] {
    MaterialLibrary l;
    l.tables_ = load_tables(builtin_text("manifest"), [](const std::string& name) { return builtin_text(name); });
    return l;
  }();
  return lib;
}

MaterialLibrary MaterialLibrary::load(const std::filesystem::path& dir) {
  MaterialLibrary l;
  const std::string manifest = slurp(dir / "manifest.csv");
  l.tables_ = load_tables(manifest, [&](const std::string& name) { return slurp(dir / (name + ".csv")); });
  return l;
}

const MaterialTable& MaterialLibrary::table(Material m) const {
  auto it = tables_.find(m);
  if (it == tables_.end()) throw Error(ErrorKind::invalid_argument, "material_id", "no table for " + to_string(m));
  return it->second;
}

double density_from_hu(double hu, Material material, double e_ct_kev, const MaterialLibrary& lib) {
  const auto& water = lib.table(Material::water);
  const double mu_water = water.mu_rho(e_ct_kev) * water.nominal_density();
  const double rho = (hu / 1000.0 * mu_water + mu_water) / lib.mu_rho(material, e_ct_kev);
  return std::max(rho, 0.0);
}

const DensityVolume& MaterialMaps::operator[](Material m) const {
  for (std::size_t i = 0; i < kBodyMaterials.size(); ++i)
    if (kBodyMaterials[i] == m) return density[i];
  throw Error(ErrorKind::invalid_argument, "material_id", to_string(m) + " is not a body material");
}

MaterialMaps decompose(const CtVolume& vol, double e_ct_kev, const HuRanges& ranges, const MaterialLibrary& lib) {
  vol.validate();
  MaterialMaps maps;
  std::array<double, 3> slope{};
  for (std::size_t i = 0; i < kBodyMaterials.size(); ++i) {
    maps.density[i] = DensityVolume::like(vol);
    // density_from_hu is affine in HU: rho = slope * (HU / 1000 + 1)
    slope[i] = density_from_hu(0.0, kBodyMaterials[i], e_ct_kev, lib);
  }
  const Eigen::Index n = vol.size();
#pragma omp parallel for schedule(static)
  for (Eigen::Index v = 0; v < n; ++v) {
    Material m;
    if (!ranges.classify(vol.values[v], m)) continue;
    const std::size_t i = m == Material::bone ? 0 : m == Material::soft ? 1 : 2;
    maps.density[i].values[v] = float(std::max(0.0, slope[i] * (double(vol.values[v]) / 1000.0 + 1.0)));
  }
  return maps;
}

}  // namespace lungsim
