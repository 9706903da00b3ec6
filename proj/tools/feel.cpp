#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "feel/config.hpp"
#include "feel/dataset.hpp"
#include "feel/log.hpp"
#include "feel/pipeline.hpp"

namespace {

struct RunFlags {
  std::string config;
  std::string features, rgb, flow, gt;
  bool synth = false;
  std::size_t classes = 0;
  std::string out;
  std::uint64_t seed = 0;
  std::string mode;
  std::size_t imax = 0;
  double mu = 0.0;
  double gamma = 0.0;
  std::size_t epochs = 0;
  bool no_cci = false, no_iis = false, snippetwise = false, cola_utal = false;
  bool overwrite = false, dump_clusters = false, export_maps = false, save_checkpoints = false;
  bool reinit = false;
};

int fail(const std::string& kind, const std::string& message, std::optional<std::size_t> iteration = {}) {
  nlohmann::json err{{"error", kind}, {"message", message}};
  if (iteration) err["iteration"] = *iteration;
  std::cout << err.dump() << std::endl;
  return 1;
}

feel::PipelineConfig resolve(const RunFlags& f, const CLI::App& cmd) {
  feel::PipelineConfig cfg = f.config.empty() ? feel::PipelineConfig{} : feel::load_config(f.config);
  if (cmd.count("--features")) cfg.features_path = f.features;
  if (cmd.count("--rgb")) cfg.rgb_path = f.rgb;
  if (cmd.count("--flow")) cfg.flow_path = f.flow;
  if (cmd.count("--gt")) cfg.ground_truth_path = f.gt;
  if (f.synth) cfg.synthetic = true;
  if (cmd.count("--classes")) cfg.num_classes = cfg.synth.num_classes = f.classes;
  if (cmd.count("--out")) cfg.output_dir = f.out;
  if (cmd.count("--seed")) cfg.seed = f.seed;
  if (cmd.count("--mode"))
    cfg.schedule.mode = f.mode == "variable" ? feel::ScheduleMode::kVariable : feel::ScheduleMode::kConstant;
  if (cmd.count("--imax")) cfg.schedule.max_iterations = f.imax;
  if (cmd.count("--mu")) cfg.schedule.mu = f.mu;
  if (cmd.count("--gamma")) cfg.cci.gamma = f.gamma;
  if (cmd.count("--epochs")) cfg.max_epochs = f.epochs;
  if (f.no_cci) cfg.ablation.disable_cci = true;
  if (f.no_iis) cfg.ablation.disable_iis = true;
  if (f.snippetwise) cfg.ablation.snippetwise = true;
  if (f.cola_utal) cfg.ablation.cola_utal = true;
  if (f.overwrite) cfg.overwrite = true;
  if (f.dump_clusters) cfg.dump_clusters = true;
  if (f.export_maps) cfg.export_maps = true;
  if (f.save_checkpoints) cfg.save_checkpoints = true;
  if (f.reinit) cfg.reinit_each_iteration = true;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsupervised temporal action localization with iterative clustering and self-paced training"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("--quiet", quiet, "Suppress warnings on stderr");

  RunFlags f;
  auto* run = app.add_subcommand("run", "Run the iterative pipeline and write reports");
  run->add_option("--config", f.config, "JSON config file")->check(CLI::ExistingFile);
  run->add_option("--features", f.features, "FEAT1 feature file");
  run->add_option("--rgb", f.rgb, "FEAT1 RGB stream (concatenated with --flow)");
  run->add_option("--flow", f.flow, "FEAT1 flow stream");
  run->add_option("--gt", f.gt, "Ground-truth JSON lines (evaluation only)");
  run->add_flag("--synth", f.synth, "Use a generated dataset");
  run->add_option("--classes", f.classes, "Number of action classes K");
  run->add_option("--out", f.out, "Output directory");
  run->add_option("--seed", f.seed, "Master seed");
  run->add_option("--mode", f.mode, "Selection schedule")->check(CLI::IsMember({"constant", "variable"}));
  run->add_option("--imax", f.imax, "Number of iterations");
  run->add_option("--mu", f.mu, "Variable-mode curvature");
  run->add_option("--gamma", f.gamma, "Jaccard blend weight");
  run->add_option("--epochs", f.epochs, "Epoch budget per iteration");
  run->add_flag("--no-cci", f.no_cci, "Rank by Euclidean distance only");
  run->add_flag("--no-iis", f.no_iis, "Train on every video each iteration");
  run->add_flag("--snippetwise", f.snippetwise, "Cluster top-attention snippets instead of videos");
  run->add_flag("--cola-utal", f.cola_utal, "Single-iteration baseline without re-ranking or selection");
  run->add_flag("--overwrite", f.overwrite, "Replace reports in an existing output directory");
  run->add_flag("--dump-clusters", f.dump_clusters, "Write per-iteration cluster tables");
  run->add_flag("--export-maps", f.export_maps, "Write final activation maps per video");
  run->add_flag("--save-checkpoints", f.save_checkpoints, "Write a checkpoint after every iteration");
  run->add_flag("--reinit", f.reinit, "Re-initialize the localizer every iteration");

  std::string synth_config, synth_out;
  std::uint64_t synth_seed = 0;
  auto* synth = app.add_subcommand("synth", "Write a generated dataset as FEAT1 + ground truth");
  synth->add_option("--config", synth_config, "JSON config file (its synth block is used)")->check(CLI::ExistingFile);
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--seed", synth_seed, "Generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return fail("usage_error", e.what());
  }
  feel::log::set_quiet(quiet);

  try {
    if (*synth) {
      feel::PipelineConfig cfg = synth_config.empty() ? feel::PipelineConfig{} : feel::load_config(synth_config);
      if (synth->count("--seed")) cfg.synth.seed = synth_seed;
      const auto data = feel::generate_synthetic(cfg.synth);
      std::filesystem::create_directories(synth_out);
      const std::filesystem::path out = synth_out;
      feel::save_features(data.dataset, out / "features.feat");
      feel::save_ground_truth(data.ground_truth, out / "ground_truth.jsonl");
      std::cout << nlohmann::json{{"status", "ok"},
                                  {"videos", data.dataset.size()},
                                  {"features", (out / "features.feat").string()},
                                  {"ground_truth", (out / "ground_truth.jsonl").string()}}
                       .dump()
                << std::endl;
      return 0;
    }

    const feel::PipelineConfig cfg = resolve(f, *run);
    if (cfg.output_dir.empty()) return fail("invalid_argument", "--out is required");
    cfg.validate();
    feel::check_output_dir(cfg.output_dir, cfg.overwrite);
    const feel::PipelineResult result = feel::run_pipeline(cfg);
    feel::emit_reports(result, cfg.output_dir, true);
    nlohmann::json summary{{"status", "ok"}, {"iterations", result.records.size()}, {"out", cfg.output_dir}};
    if (result.final_eval.has_ground_truth) {
      summary["average_map"] = result.final_eval.map.average;
      summary["nmi"] = result.final_eval.nmi;
    }
    std::cout << summary.dump() << std::endl;
    return 0;
  } catch (const feel::IterationError& e) {
    return fail(e.kind(), e.what(), e.iteration());
  } catch (const feel::Error& e) {
    return fail(e.kind(), e.what());
  } catch (const std::exception& e) {
    return fail("internal_error", e.what());
  }
}
