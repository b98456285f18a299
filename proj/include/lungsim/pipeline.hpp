#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "lungsim/materials.hpp"
#include "lungsim/postprocess.hpp"
#include "lungsim/preprocess.hpp"
#include "lungsim/projector.hpp"
#include "lungsim/spectrum.hpp"
#include "lungsim/thickness.hpp"

namespace lungsim {

struct NoiseConfig {
  bool enabled = false;
  double flat_photons = 1e5;
};

/// Every simulation setting. Defaults reproduce the reference setup: 120 kVp,
/// 3.5 mm Al, 0.6 mm CsI at 4.51 g/cm^3, 1680/120 mm geometry, 512x512
/// detector, 10 views at 2 degree steps, 9-level pyramid with P0/P1 x2,
/// LUT clips 0 and 8.
struct PipelineConfig {
  PreprocessConfig preprocess;
  bool remove_table = true;
  double e_ct_kev = 70.0;
  HuRanges hu_ranges;
  std::string materials_dir;  // empty: built-in tables

  int kvp = 120;
  double filtration_mm_al = 3.5;
  std::string spectrum_file;  // overrides the analytic tube model
  DetectorModel detector;

  ProjectionGeometry geometry;
  Vec2d detector_field_mm{430.0, 430.0};
  int angle_count = 10;
  double angle_step_deg = 2.0;

  bool postprocess = true;
  PyramidConfig pyramid;
  LutConfig lut;
  NoiseConfig noise;

  std::string output_dir = "out";
  std::uint64_t seed = 0;
  int threads = 0;  // 0: OpenMP default

  /// Fills geometry.pixel_pitch_mm from detector_field_mm and validates.
  void finalize();
  void validate() const;
};

void to_json(nlohmann::json& j, const PipelineConfig& c);
void from_json(const nlohmann::json& j, PipelineConfig& c);

PipelineConfig load_config(const std::filesystem::path& path);

/// FNV-1a 64 of the canonical JSON of every setting that affects outputs
/// (output_dir and threads excluded), as 16 hex digits.
std::string config_hash(const PipelineConfig& c);
std::string geometry_hash(const ProjectionGeometry& g);
std::string fnv1a_hex(std::string_view data);

struct SampleMetadata {
  std::string case_id;
  int view_index = 0;
  double angle_deg = 0.0;
  int kvp = 0;
  std::string geometry_hash;
  double gt_tlc_l = 0.0;
};

struct SamplePair {
  Image2D radiograph;
  ThicknessMap thickness;
  SampleMetadata metadata;
};

struct CaseResult {
  std::string case_id;
  std::vector<SamplePair> pairs;
  double gt_tlc_l = 0.0;
  std::vector<std::string> warnings;
};

/// Error raised by one pipeline stage, tagged with stage and case.
class StageError : public Error {
public:
  StageError(const Error& cause, std::string stage, std::string case_id)
      : Error(cause.kind(), cause.field(), "[" + case_id + "/" + stage + "] " + cause.what()),
        stage_(std::move(stage)), case_id_(std::move(case_id)), reason_(cause.what()) {}
  const std::string& stage() const { return stage_; }
  const std::string& case_id() const { return case_id_; }
  const std::string& reason() const { return reason_; }

private:
  std::string stage_, case_id_, reason_;
};

/// Table removal, lung segmentation, decomposition, projection, radiograph
/// formation and display processing for one CT, one pair per view.
CaseResult run_pipeline(const CtVolume& ct, const std::string& case_id, const PipelineConfig& cfg);
CaseResult run_pipeline(const std::filesystem::path& ct_path, const PipelineConfig& cfg);

/// Effective (detector-weighted) spectrum selected by the config.
Spectrum configured_spectrum(const PipelineConfig& cfg, const MaterialLibrary& lib);

struct CaseFailure {
  std::string case_id;
  std::string stage;
  std::string reason;
};

/// Writes raw-f32 pairs and `manifest.json` into `dir`. The manifest is
/// written to a `.tmp` file and renamed once every sample is on disk.
/// Returns the manifest.
nlohmann::json emit_dataset(const std::vector<CaseResult>& cases, const std::vector<CaseFailure>& failures,
                            const std::filesystem::path& dir, const PipelineConfig& cfg);

/// Deterministic split from case id and seed: train / val / test.
std::string split_for(const std::string& case_id, std::uint64_t seed);

inline constexpr int kManifestSchemaVersion = 1;

}  // namespace lungsim
