// Command-line front end: one subcommand per pipeline stage plus the full
// dataset run. Exit codes: 0 success, 1 internal failure, 2 usage error,
// 3..8 the lungsim::ErrorKind of the failure.

#include <omp.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "lungsim/metrics.hpp"
#include "lungsim/phantom.hpp"
#include "lungsim/pipeline.hpp"
#include "lungsim/radiograph.hpp"
#include "lungsim/volume_io.hpp"

namespace fs = std::filesystem;
using namespace lungsim;

namespace {

struct Common {
  std::string config;
  int threads = 0;
  int kvp = 0;
  std::string spectrum_file;
  bool no_postprocess = false;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON pipeline config")->check(CLI::ExistingFile);
  cmd->add_option("--threads", c.threads, "worker threads (0: OpenMP default)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--kvp", c.kvp, "tube peak voltage, overrides the config");
  cmd->add_option("--spectrum-file", c.spectrum_file, "energy_keV,fluence CSV replacing the tube model");
  cmd->add_flag("--no-postprocess", c.no_postprocess, "emit neg-log radiographs without pyramid and LUT");
  cmd->add_option("--seed", c.seed, "split and noise seed");
}

PipelineConfig resolve(const Common& c) {
  PipelineConfig cfg;
  if (!c.config.empty()) cfg = load_config(c.config);
  if (c.kvp) cfg.kvp = c.kvp;
  if (!c.spectrum_file.empty()) cfg.spectrum_file = c.spectrum_file;
  if (c.no_postprocess) cfg.postprocess = false;
  if (c.seed) cfg.seed = *c.seed;
  if (c.threads) cfg.threads = c.threads;
  cfg.finalize();
  if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
  return cfg;
}

const MaterialLibrary& library(const PipelineConfig& cfg, std::optional<MaterialLibrary>& holder) {
  if (cfg.materials_dir.empty()) return MaterialLibrary::builtin();
  holder = MaterialLibrary::load(cfg.materials_dir);
  return *holder;
}

void write_or_print(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(out);
  if (!f) throw Error(ErrorKind::io, out, "cannot write");
  f << text;
}

/// Runs every input case, collecting stage failures instead of aborting.
int run_dataset(const std::vector<std::string>& cts, int phantoms, const std::string& out, const PipelineConfig& cfg) {
  std::vector<CaseResult> results;
  std::vector<CaseFailure> failures;
  auto run_one = [&](auto&& produce) {
    try {
      CaseResult r = produce();
      for (const auto& w : r.warnings) std::cerr << "warning [" << r.case_id << "]: " << w << "\n";
      results.push_back(std::move(r));
    } catch (const StageError& e) {
      std::cerr << "skipped: " << e.what() << "\n";
      failures.push_back({e.case_id(), e.stage(), e.reason()});
    }
  };
  for (const auto& ct : cts) run_one([&] { return run_pipeline(fs::path(ct), cfg); });
  for (int i = 0; i < phantoms; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "phantom%04d", i);
    const CtVolume ct = chest_phantom(random_chest_params(cfg.seed * 1000003ull + std::uint64_t(i)));
    run_one([&] { return run_pipeline(ct, id, cfg); });
  }
  const fs::path dir = out.empty() ? fs::path(cfg.output_dir) : fs::path(out);
  const auto manifest = emit_dataset(results, failures, dir, cfg);
  std::cout << "wrote " << manifest["samples"].size() << " samples, " << failures.size() << " failures to "
            << (dir / "manifest.json").string() << "\n";
  return 0;
}

/// Case label of a thickness map file: its stem without the `_thickness` suffix.
std::string map_label(const fs::path& p) {
  std::string stem = p.stem().string();
  const std::string suffix = "_thickness";
  if (stem.size() > suffix.size() && stem.ends_with(suffix)) stem.resize(stem.size() - suffix.size());
  return stem;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic chest radiographs and lung thickness maps from CT"};
  app.require_subcommand(1);

  Common common;

  // simulate
  std::vector<std::string> sim_ct;
  int sim_phantoms = 0;
  std::string sim_out;
  auto* simulate = app.add_subcommand("simulate", "full pipeline on CT volumes and/or generated phantoms");
  add_common(simulate, common);
  simulate->add_option("--ct", sim_ct, "CT volume (.mhd or raw .json), repeatable");
  simulate->add_option("--phantoms", sim_phantoms, "number of random chest phantoms to add");
  simulate->add_option("--out", sim_out, "output directory (default: config output_dir)");

  // emit-dataset
  std::string ds_dir, ds_out;
  int ds_phantoms = 0;
  auto* emit = app.add_subcommand("emit-dataset", "simulate every CT in a directory into one manifest");
  add_common(emit, common);
  emit->add_option("--ct-dir", ds_dir, "directory of .mhd volumes")->check(CLI::ExistingDirectory);
  emit->add_option("--phantoms", ds_phantoms, "number of random chest phantoms to add");
  emit->add_option("--out", ds_out, "output directory (default: config output_dir)");

  // spectrum
  std::string sp_out;
  auto* spectrum = app.add_subcommand("spectrum", "tube, detector efficiency and effective spectrum table");
  add_common(spectrum, common);
  spectrum->add_option("--out", sp_out, "CSV path (default: stdout)");

  // project
  std::string pj_ct, pj_out;
  auto* project = app.add_subcommand("project", "material density projections and lung thickness per view");
  add_common(project, common);
  project->add_option("--ct", pj_ct, "CT volume")->required();
  project->add_option("--out", pj_out, "output directory")->required();

  // postprocess
  std::string pp_in, pp_out;
  auto* postprocess = app.add_subcommand("postprocess", "pyramid boost and LUT on a neg-log image");
  add_common(postprocess, common);
  postprocess->add_option("--in", pp_in, "raw-f32 image with sidecar")->required()->check(CLI::ExistingFile);
  postprocess->add_option("--out", pp_out, "output raw-f32 path")->required();

  // volume
  std::vector<std::string> vol_in;
  std::string vol_manifest, vol_out;
  double vol_mag = 0.0, vol_pa = 0.0, vol_dprime = PaCorrection{}.d_prime;
  bool vol_correct = false;
  auto* volume = app.add_subcommand("volume", "integrate thickness maps to liters");
  volume->add_option("--in", vol_in, "raw-f32 thickness map, repeatable")->check(CLI::ExistingFile);
  volume->add_option("--manifest", vol_manifest, "dataset manifest; integrates every sample")->check(CLI::ExistingFile);
  volume->add_option("--magnification", vol_mag, "projection magnification (default 1800/1680)");
  volume->add_flag("--pa-correction", vol_correct, "normalize to relative thickness and rescale by D' * PA");
  volume->add_option("--pa-diameter-mm", vol_pa, "posterior-anterior chest diameter");
  volume->add_option("--d-prime", vol_dprime, "mean lung/body diameter fraction");
  volume->add_option("--out", vol_out, "CSV path (default: stdout)");

  // eval
  std::string ev_csv, ev_out;
  auto* eval = app.add_subcommand("eval", "MAE, MSE and Pearson r from a case_id,pred_l,gt_l CSV");
  eval->add_option("--csv", ev_csv, "input CSV")->required()->check(CLI::ExistingFile);
  eval->add_option("--out", ev_out, "JSON path (default: stdout)");

  // phantom
  std::string ph_out;
  std::uint64_t ph_seed = 0;
  bool ph_no_table = false, ph_random = false;
  auto* phantom = app.add_subcommand("phantom", "write an analytic chest phantom as MetaImage");
  phantom->add_option("--out", ph_out, ".mhd path")->required();
  phantom->add_option("--seed", ph_seed, "anatomy seed (with --random)");
  phantom->add_flag("--random", ph_random, "randomise anatomy from the seed");
  phantom->add_flag("--no-table", ph_no_table, "omit the patient table");

  // d-prime
  std::vector<std::string> dp_ct;
  DiameterOptions dp_opt;
  bool dp_apex_low = false;
  auto* dprime = app.add_subcommand("d-prime", "mean lung/body PA diameter fraction over CT volumes");
  add_common(dprime, common);
  dprime->add_option("--ct", dp_ct, "CT volume, repeatable")->required();
  dprime->add_flag("--apex-low-z", dp_apex_low, "lung apex sits at the low-z end");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    if (rc != 0 && e.get_exit_code() != 0) {
      std::cerr << app.help();
      return 2;
    }
    return rc;
  }

  try {
    if (*simulate) {
      if (sim_ct.empty() && sim_phantoms == 0) throw Error(ErrorKind::invalid_argument, "--ct", "give --ct or --phantoms");
      return run_dataset(sim_ct, sim_phantoms, sim_out, resolve(common));
    }
    if (*emit) {
      std::vector<std::string> cts;
      if (!ds_dir.empty())
        for (const auto& entry : fs::directory_iterator(ds_dir))
          if (entry.path().extension() == ".mhd") cts.push_back(entry.path().string());
      std::sort(cts.begin(), cts.end());
      if (cts.empty() && ds_phantoms == 0) throw Error(ErrorKind::invalid_argument, "--ct-dir", "no input volumes");
      return run_dataset(cts, ds_phantoms, ds_out, resolve(common));
    }
    if (*spectrum) {
      const PipelineConfig cfg = resolve(common);
      std::optional<MaterialLibrary> holder;
      const MaterialLibrary& lib = library(cfg, holder);
      const Spectrum src = cfg.spectrum_file.empty() ? source_spectrum(cfg.kvp, cfg.filtration_mm_al, lib)
                                                     : load_spectrum_csv(cfg.spectrum_file);
      const Spectrum eff = effective_spectrum(src, cfg.detector, lib);
      const double src_sum = src.fluence.sum(), eff_sum = eff.fluence.sum();
      std::string text = "energy_keV,source_fluence,quantum_efficiency,effective_fluence\n";
      char line[160];
      for (int e = 1; e <= src.kvp; ++e) {
        std::snprintf(line, sizeof line, "%d,%.9g,%.9g,%.9g\n", e, src.at(e) / src_sum,
                      quantum_efficiency(cfg.detector, e, lib), eff.at(e) / eff_sum);
        text += line;
      }
      write_or_print(text, sp_out);
      return 0;
    }
    if (*project) {
      const PipelineConfig cfg = resolve(common);
      std::optional<MaterialLibrary> holder;
      const MaterialLibrary& lib = library(cfg, holder);
      CtVolume ct = load_volume(pj_ct);
      if (cfg.remove_table) ct = remove_table(ct, cfg.preprocess).volume;
      const VoxelMask lung = segment_lung(ct, cfg.preprocess);
      const MaterialMaps maps = decompose(ct, cfg.e_ct_kev, cfg.hu_ranges, lib);
      const auto set = project_case(maps, lung, make_angle_set(cfg.geometry, cfg.angle_count, cfg.angle_step_deg));
      fs::create_directories(pj_out);
      const std::string id = fs::path(pj_ct).stem().string();
      for (std::size_t v = 0; v < set.views.size(); ++v) {
        char tag[16];
        std::snprintf(tag, sizeof tag, "_v%02zu_", v);
        for (std::size_t i = 0; i < kBodyMaterials.size(); ++i)
          save_image(set.views[v].density[i], fs::path(pj_out) / (id + tag + to_string(kBodyMaterials[i]) + ".f32"),
                     ImageFormat::raw_f32, "g/cm2");
        save_image(set.views[v].lung_thickness, fs::path(pj_out) / (id + tag + "thickness.f32"), ImageFormat::raw_f32,
                   "mm");
      }
      std::cout << set.views.size() << " views, magnification " << set.magnification << "\n";
      return 0;
    }
    if (*postprocess) {
      const PipelineConfig cfg = resolve(common);
      const Image2D in = load_image(pp_in);
      const Image2D out = cfg.postprocess ? apply_lut(pyramid_boost(in, cfg.pyramid), cfg.lut) : in;
      save_image(out, pp_out, ImageFormat::raw_f32, "display");
      return 0;
    }
    if (*volume) {
      const double default_m = ProjectionGeometry{}.magnification();
      struct Item {
        std::string id;
        fs::path path;
        double m;
        double gt;
      };
      std::vector<Item> items;
      for (const auto& p : vol_in) items.push_back({map_label(p), p, vol_mag > 0 ? vol_mag : default_m, 0.0});
      if (!vol_manifest.empty()) {
        std::ifstream f(vol_manifest);
        const auto manifest = nlohmann::json::parse(f);
        const fs::path base = fs::path(vol_manifest).parent_path();
        for (const auto& s : manifest.at("samples"))
          items.push_back({map_label(s.at("thickness").get<std::string>()),
                           base / s.at("thickness").get<std::string>(), s.at("magnification").get<double>(),
                           s.at("gt_tlc_l").get<double>()});
      }
      if (items.empty()) throw Error(ErrorKind::invalid_argument, "--in", "give --in or --manifest");
      if (vol_correct && !(vol_pa > 0.0))
        throw Error(ErrorKind::invalid_argument, "--pa-diameter-mm", "required with --pa-correction");
      std::vector<VolumeCase> rows;
      for (const auto& it : items) {
        ThicknessMap tm{load_image(it.path), it.m};
        if (vol_correct) tm = pa_correct(normalize_relative(tm), PaCorrection{vol_dprime, vol_pa});
        rows.push_back({it.id, integrate_volume(tm), it.gt});
      }
      if (vol_out.empty() || vol_out == "-") {
        std::cout << "case_id,pred_l,gt_l\n";
        for (const auto& r : rows) std::printf("%s,%.3f,%.3f\n", r.case_id.c_str(), r.pred_l, r.gt_l);
      } else {
        write_volume_csv(rows, vol_out);
      }
      return 0;
    }
    if (*eval) {
      write_or_print(summary_json(volume_metrics(read_volume_csv(ev_csv))) + "\n", ev_out);
      return 0;
    }
    if (*phantom) {
      ChestPhantomParams p = ph_random ? random_chest_params(ph_seed) : ChestPhantomParams{};
      p.table = !ph_no_table;
      save_metaimage(chest_phantom(p), ph_out);
      return 0;
    }
    if (*dprime) {
      const PipelineConfig cfg = resolve(common);
      dp_opt.body_threshold_hu = cfg.preprocess.body_threshold_hu;
      dp_opt.apex_at_high_z = !dp_apex_low;
      std::vector<CtVolume> cts;
      std::vector<VoxelMask> lungs;
      for (const auto& p : dp_ct) {
        CtVolume ct = load_volume(p);
        if (cfg.remove_table) ct = remove_table(ct, cfg.preprocess).volume;
        lungs.push_back(segment_lung(ct, cfg.preprocess));
        cts.push_back(std::move(ct));
      }
      std::vector<DiameterSample> samples;
      for (std::size_t i = 0; i < cts.size(); ++i) samples.push_back({&cts[i], &lungs[i]});
      std::printf("%.6f\n", estimate_d_prime(samples, dp_opt));
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.kind());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::format);
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::io);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
