#include "lungsim/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <optional>
#include <set>

#include "lungsim/radiograph.hpp"
#include "lungsim/volume_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace lungsim {
namespace {

/// Rejects keys a block does not know, so typos do not silently fall back to defaults.
void check_keys(const json& j, const std::string& block, std::initializer_list<const char*> known) {
  if (!j.is_object()) throw Error(ErrorKind::format, block, "expected an object");
  const std::set<std::string> allowed(known.begin(), known.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw Error(ErrorKind::format, block + "." + it.key(), "unknown config key");
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& block) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::format, block + "." + key, e.what());
  }
}

const json& sub(const json& j, const char* key) {
  static const json empty = json::object();
  return j.contains(key) ? j.at(key) : empty;
}

std::string sampling_name(Sampling s) { return s == Sampling::voxel_exact ? "voxel_exact" : "trilinear"; }

Sampling sampling_from(const std::string& s) {
  if (s == "voxel_exact") return Sampling::voxel_exact;
  if (s == "trilinear") return Sampling::trilinear;
  throw Error(ErrorKind::format, "geometry.sampling", "expected voxel_exact or trilinear, got '" + s + "'");
}

json geometry_json(const ProjectionGeometry& g) {
  return json{{"source_to_isocenter_mm", g.source_to_isocenter_mm},
              {"isocenter_to_detector_mm", g.isocenter_to_detector_mm},
              {"detector_px", {g.cols, g.rows}},
              {"pixel_pitch_mm", {g.pixel_pitch_mm.x(), g.pixel_pitch_mm.y()}},
              {"rotation_deg", g.rotation_deg},
              {"sampling", sampling_name(g.sampling)}};
}

template <typename F>
auto stage(const char* name, const std::string& case_id, F&& f) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(e, name, case_id);
  }
}

void write_text_atomically(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw Error(ErrorKind::io, tmp.string(), "cannot write");
    out << text;
    out.flush();
    if (!out) throw Error(ErrorKind::io, tmp.string(), "write failed");
  }
  fs::rename(tmp, path);
}

}  // namespace

void PipelineConfig::finalize() {
  if (!(detector_field_mm.array() > 0.0).all())
    throw Error(ErrorKind::invalid_argument, "geometry.detector_field_mm", "must be positive");
  if (geometry.cols <= 0 || geometry.rows <= 0)
    throw Error(ErrorKind::invalid_argument, "geometry.detector_px", "must be positive");
  geometry.pixel_pitch_mm = Vec2d(detector_field_mm.x() / geometry.cols, detector_field_mm.y() / geometry.rows);
  validate();
}

void PipelineConfig::validate() const {
  preprocess.validate();
  detector.validate();
  geometry.validate();
  if (kvp < kMinKvp || kvp > kMaxKvp) throw Error(ErrorKind::invalid_argument, "spectrum.kvp", "outside [40, 150]");
  if (!(filtration_mm_al >= 0.0)) throw Error(ErrorKind::invalid_argument, "spectrum.filtration_mm_al", "must be >= 0");
  if (angle_count < 1) throw Error(ErrorKind::invalid_argument, "angles.count", "need at least one view");
  for (const auto& g : make_angle_set(geometry, angle_count, angle_step_deg)) g.validate();
  if (postprocess) {
    pyramid.validate();
    lut.validate();
    const int block = 1 << (pyramid.levels - 1);
    if (geometry.cols < block || geometry.rows < block)
      throw Error(ErrorKind::invalid_argument, "postprocess.pyramid.levels",
                  "detector raster too small for " + std::to_string(pyramid.levels) + " levels");
  }
  if (noise.enabled && !(noise.flat_photons > 0.0))
    throw Error(ErrorKind::invalid_argument, "noise.flat_photons", "must be positive");
}

void to_json(json& j, const PipelineConfig& c) {
  json gains = json::object();
  for (auto [level, g] : c.pyramid.gains) gains[std::to_string(level)] = g;
  j = json{
      {"preprocess",
       {{"remove_table", c.remove_table},
        {"body_threshold_hu", c.preprocess.body_threshold_hu},
        {"opening_radius_px", c.preprocess.opening_radius_px},
        {"middle_slice_min_px", c.preprocess.middle_slice_min_px}}},
      {"materials",
       {{"e_ct_kev", c.e_ct_kev},
        {"data_dir", c.materials_dir},
        {"hu_ranges",
         {{"adipose_min", c.hu_ranges.adipose_min}, {"soft_min", c.hu_ranges.soft_min}, {"soft_max", c.hu_ranges.soft_max}}}}},
      {"spectrum",
       {{"kvp", c.kvp},
        {"filtration_mm_al", c.filtration_mm_al},
        {"spectrum_file", c.spectrum_file},
        {"scint_density_g_cm3", c.detector.scint_density_g_cm3},
        {"scint_thickness_mm", c.detector.scint_thickness_mm}}},
      {"geometry",
       {{"source_to_isocenter_mm", c.geometry.source_to_isocenter_mm},
        {"isocenter_to_detector_mm", c.geometry.isocenter_to_detector_mm},
        {"detector_px", {c.geometry.cols, c.geometry.rows}},
        {"detector_field_mm", {c.detector_field_mm.x(), c.detector_field_mm.y()}},
        {"rotation_deg", c.geometry.rotation_deg},
        {"sampling", sampling_name(c.geometry.sampling)}}},
      {"angles", {{"count", c.angle_count}, {"step_deg", c.angle_step_deg}}},
      {"postprocess",
       {{"enabled", c.postprocess},
        {"pyramid", {{"levels", c.pyramid.levels}, {"gains", gains}}},
        {"lut",
         {{"left_clip", c.lut.left_clip}, {"right_clip", c.lut.right_clip}, {"toe", c.lut.toe}, {"shoulder", c.lut.shoulder}}}}},
      {"noise", {{"enabled", c.noise.enabled}, {"flat_photons", c.noise.flat_photons}}},
      {"output_dir", c.output_dir},
      {"seed", c.seed},
      {"threads", c.threads},
  };
}

void from_json(const json& j, PipelineConfig& c) {
  check_keys(j, "config",
             {"preprocess", "materials", "spectrum", "geometry", "angles", "postprocess", "noise", "output_dir", "seed",
              "threads"});
  const json& pre = sub(j, "preprocess");
  check_keys(pre, "preprocess", {"remove_table", "body_threshold_hu", "opening_radius_px", "middle_slice_min_px"});
  read(pre, "remove_table", c.remove_table, "preprocess");
  read(pre, "body_threshold_hu", c.preprocess.body_threshold_hu, "preprocess");
  read(pre, "opening_radius_px", c.preprocess.opening_radius_px, "preprocess");
  read(pre, "middle_slice_min_px", c.preprocess.middle_slice_min_px, "preprocess");

  const json& mat = sub(j, "materials");
  check_keys(mat, "materials", {"e_ct_kev", "data_dir", "hu_ranges"});
  read(mat, "e_ct_kev", c.e_ct_kev, "materials");
  read(mat, "data_dir", c.materials_dir, "materials");
  const json& hu = sub(mat, "hu_ranges");
  check_keys(hu, "materials.hu_ranges", {"adipose_min", "soft_min", "soft_max"});
  read(hu, "adipose_min", c.hu_ranges.adipose_min, "materials.hu_ranges");
  read(hu, "soft_min", c.hu_ranges.soft_min, "materials.hu_ranges");
  read(hu, "soft_max", c.hu_ranges.soft_max, "materials.hu_ranges");

  const json& sp = sub(j, "spectrum");
  check_keys(sp, "spectrum", {"kvp", "filtration_mm_al", "spectrum_file", "scint_density_g_cm3", "scint_thickness_mm"});
  read(sp, "kvp", c.kvp, "spectrum");
  read(sp, "filtration_mm_al", c.filtration_mm_al, "spectrum");
  read(sp, "spectrum_file", c.spectrum_file, "spectrum");
  read(sp, "scint_density_g_cm3", c.detector.scint_density_g_cm3, "spectrum");
  read(sp, "scint_thickness_mm", c.detector.scint_thickness_mm, "spectrum");

  const json& geo = sub(j, "geometry");
  check_keys(geo, "geometry",
             {"source_to_isocenter_mm", "isocenter_to_detector_mm", "detector_px", "detector_field_mm", "rotation_deg",
              "sampling"});
  read(geo, "source_to_isocenter_mm", c.geometry.source_to_isocenter_mm, "geometry");
  read(geo, "isocenter_to_detector_mm", c.geometry.isocenter_to_detector_mm, "geometry");
  read(geo, "rotation_deg", c.geometry.rotation_deg, "geometry");
  if (geo.contains("detector_px")) {
    std::array<int, 2> px{};
    read(geo, "detector_px", px, "geometry");
    c.geometry.cols = px[0];
    c.geometry.rows = px[1];
  }
  if (geo.contains("detector_field_mm")) {
    std::array<double, 2> f{};
    read(geo, "detector_field_mm", f, "geometry");
    c.detector_field_mm = Vec2d(f[0], f[1]);
  }
  if (geo.contains("sampling")) {
    std::string s;
    read(geo, "sampling", s, "geometry");
    c.geometry.sampling = sampling_from(s);
  }

  const json& ang = sub(j, "angles");
  check_keys(ang, "angles", {"count", "step_deg"});
  read(ang, "count", c.angle_count, "angles");
  read(ang, "step_deg", c.angle_step_deg, "angles");

  const json& post = sub(j, "postprocess");
  check_keys(post, "postprocess", {"enabled", "pyramid", "lut"});
  read(post, "enabled", c.postprocess, "postprocess");
  const json& pyr = sub(post, "pyramid");
  check_keys(pyr, "postprocess.pyramid", {"levels", "gains"});
  read(pyr, "levels", c.pyramid.levels, "postprocess.pyramid");
  if (pyr.contains("gains")) {
    std::map<std::string, double> gains;
    read(pyr, "gains", gains, "postprocess.pyramid");
    c.pyramid.gains.clear();
    for (const auto& [k, g] : gains) {
      try {
        c.pyramid.gains[std::stoi(k)] = g;
      } catch (const std::exception&) {
        throw Error(ErrorKind::format, "postprocess.pyramid.gains", "level keys must be integers, got '" + k + "'");
      }
    }
  }
  const json& lut = sub(post, "lut");
  check_keys(lut, "postprocess.lut", {"left_clip", "right_clip", "toe", "shoulder"});
  read(lut, "left_clip", c.lut.left_clip, "postprocess.lut");
  read(lut, "right_clip", c.lut.right_clip, "postprocess.lut");
  read(lut, "toe", c.lut.toe, "postprocess.lut");
  read(lut, "shoulder", c.lut.shoulder, "postprocess.lut");

  const json& noise = sub(j, "noise");
  check_keys(noise, "noise", {"enabled", "flat_photons"});
  read(noise, "enabled", c.noise.enabled, "noise");
  read(noise, "flat_photons", c.noise.flat_photons, "noise");

  read(j, "output_dir", c.output_dir, "config");
  read(j, "seed", c.seed, "config");
  read(j, "threads", c.threads, "config");
}

PipelineConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, path.string(), "cannot open config");
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::format, path.string(), e.what());
  }
  PipelineConfig c = j.get<PipelineConfig>();
  // relative data paths resolve against the config file
  const fs::path base = path.parent_path();
  if (!c.spectrum_file.empty() && fs::path(c.spectrum_file).is_relative())
    c.spectrum_file = (base / c.spectrum_file).lexically_normal().string();
  if (!c.materials_dir.empty() && fs::path(c.materials_dir).is_relative())
    c.materials_dir = (base / c.materials_dir).lexically_normal().string();
  c.finalize();
  return c;
}

std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Settings that change outputs; output_dir and threads do not.
static json output_config(const PipelineConfig& c) {
  json j = c;
  j.erase("output_dir");
  j.erase("threads");
  return j;
}

std::string config_hash(const PipelineConfig& c) { return fnv1a_hex(output_config(c).dump()); }

std::string geometry_hash(const ProjectionGeometry& g) { return fnv1a_hex(geometry_json(g).dump()); }

Spectrum configured_spectrum(const PipelineConfig& cfg, const MaterialLibrary& lib) {
  const Spectrum src =
      cfg.spectrum_file.empty() ? source_spectrum(cfg.kvp, cfg.filtration_mm_al, lib) : load_spectrum_csv(cfg.spectrum_file);
  return effective_spectrum(src, cfg.detector, lib);
}

CaseResult run_pipeline(const CtVolume& input, const std::string& case_id, const PipelineConfig& cfg) {
  stage("config", case_id, [&] { cfg.validate(); return 0; });
  std::optional<MaterialLibrary> loaded;
  if (!cfg.materials_dir.empty())
    loaded = stage("materials", case_id, [&] { return MaterialLibrary::load(cfg.materials_dir); });
  const MaterialLibrary& lib = loaded ? *loaded : MaterialLibrary::builtin();

  CaseResult result{case_id, {}, 0.0, {}};
  CtVolume ct = cfg.remove_table ? stage("remove_table", case_id, [&] {
    TableRemoval tr = remove_table(input, cfg.preprocess);
    result.warnings = std::move(tr.warnings);
    return std::move(tr.volume);
  })
                                 : input;
  const VoxelMask lung = stage("segment_lung", case_id, [&] { return segment_lung(ct, cfg.preprocess); });
  result.gt_tlc_l = ground_truth_tlc(lung);
  const MaterialMaps maps = stage("decompose", case_id, [&] { return decompose(ct, cfg.e_ct_kev, cfg.hu_ranges, lib); });
  const Spectrum spectrum = stage("spectrum", case_id, [&] { return configured_spectrum(cfg, lib); });
  const double flat = stage("spectrum", case_id, [&] { return flat_field(spectrum); });

  const auto geometries = make_angle_set(cfg.geometry, cfg.angle_count, cfg.angle_step_deg);
  const ProjectionSet set = stage("project", case_id, [&] { return project_case(maps, lung, geometries); });

  for (std::size_t v = 0; v < set.views.size(); ++v) {
    const auto& view = set.views[v];
    Image2D image = stage("radiograph", case_id, [&] {
      std::array<MaterialPath<float>, 3> paths;
      for (std::size_t i = 0; i < 3; ++i) paths[i] = {kBodyMaterials[i], &view.density[i]};
      Image2D intensity = form_intensity<float>(paths, spectrum, lib);
      if (cfg.noise.enabled)
        add_poisson_noise(intensity, flat, cfg.noise.flat_photons,
                          std::stoull(fnv1a_hex(case_id + "/" + std::to_string(v)), nullptr, 16) ^ cfg.seed);
      return neg_log(intensity, flat);
    });
    if (cfg.postprocess)
      image = stage("postprocess", case_id, [&] { return apply_lut(pyramid_boost(image, cfg.pyramid), cfg.lut); });

    SamplePair pair{std::move(image), ThicknessMap{view.lung_thickness, set.magnification},
                    SampleMetadata{case_id, int(v), view.geometry.rotation_deg, cfg.kvp, geometry_hash(view.geometry),
                                   result.gt_tlc_l}};
    if (!cfg.spectrum_file.empty()) pair.metadata.kvp = spectrum.kvp;
    result.pairs.push_back(std::move(pair));
  }
  return result;
}

CaseResult run_pipeline(const fs::path& ct_path, const PipelineConfig& cfg) {
  const std::string case_id = ct_path.stem().string();
  const CtVolume ct = stage("load", case_id, [&] { return load_volume(ct_path); });
  return run_pipeline(ct, case_id, cfg);
}

std::string split_for(const std::string& case_id, std::uint64_t seed) {
  const auto h = std::stoull(fnv1a_hex(std::to_string(seed) + ":" + case_id), nullptr, 16);
  // train / val / test in the proportions 412 : 113 : 131
  const auto bucket = h % 656;
  return bucket < 412 ? "train" : bucket < 525 ? "val" : "test";
}

json emit_dataset(const std::vector<CaseResult>& cases, const std::vector<CaseFailure>& failures, const fs::path& dir,
                  const PipelineConfig& cfg) {
  fs::create_directories(dir);
  json samples = json::array();
  for (const auto& c : cases) {
    const std::string split = split_for(c.case_id, cfg.seed);
    for (const auto& pair : c.pairs) {
      char stem[64];
      std::snprintf(stem, sizeof stem, "_v%02d", pair.metadata.view_index);
      const std::string base = c.case_id + stem;
      const fs::path radiograph = base + "_radiograph.f32";
      const fs::path thickness = base + "_thickness.f32";
      save_image(pair.radiograph, dir / radiograph, ImageFormat::raw_f32, cfg.postprocess ? "display" : "neglog");
      save_image(pair.thickness.map, dir / thickness, ImageFormat::raw_f32, "mm");
      samples.push_back({{"case_id", c.case_id},
                         {"view_index", pair.metadata.view_index},
                         {"angle_deg", pair.metadata.angle_deg},
                         {"kvp", pair.metadata.kvp},
                         {"geometry_hash", pair.metadata.geometry_hash},
                         {"split", split},
                         {"magnification", pair.thickness.magnification},
                         {"gt_tlc_l", pair.metadata.gt_tlc_l},
                         {"radiograph", radiograph.string()},
                         {"radiograph_sidecar", sidecar_path(radiograph).string()},
                         {"thickness", thickness.string()},
                         {"thickness_sidecar", sidecar_path(thickness).string()}});
    }
  }
  json fails = json::array();
  for (const auto& f : failures) fails.push_back({{"case_id", f.case_id}, {"stage", f.stage}, {"reason", f.reason}});
  json manifest{{"schema_version", kManifestSchemaVersion},
                {"config_hash", config_hash(cfg)},
                {"config", output_config(cfg)},
                {"samples", samples},
                {"failures", fails}};
  write_text_atomically(dir / "manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

}  // namespace lungsim
