#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "feel/cci.hpp"
#include "feel/clustering.hpp"
#include "feel/curriculum.hpp"
#include "feel/dataset.hpp"
#include "feel/evaluation.hpp"
#include "feel/localizer.hpp"

namespace feel {

struct AblationSwitches {
  bool disable_cci = false;
  bool disable_iis = false;
  /// Pseudo-labels from clustering top-attention snippets instead of videos.
  bool snippetwise = false;
  /// Plain baseline: one iteration, Euclidean labels, every video trained.
  bool cola_utal = false;
};

struct PipelineConfig {
  // Data: either FEAT1 features (one stream, or RGB + flow) or synthetic.
  std::string features_path;
  std::string rgb_path;
  std::string flow_path;
  std::string ground_truth_path;
  bool synthetic = false;
  SynthConfig synth;
  std::size_t num_classes = 10;

  SelectionSchedule schedule;
  CciOptions cci;
  KMeansOptions kmeans;
  LocalizerConfig localizer;
  std::size_t max_epochs = 40;
  std::size_t batch_size = 16;
  double learning_rate = 1e-4;
  bool reinit_each_iteration = false;
  /// Permute new cluster indices to best match the previous iteration's
  /// labels so a warm-started classifier keeps its class semantics.
  bool align_clusters = true;
  std::size_t snippetwise_top_k = 0;  // 0 => max(1, T/8)

  ProposalConfig proposals = default_proposals();
  std::vector<double> iou_thresholds = threshold_grid(0.5, 1.0, 0.05);
  std::size_t precision_depth = 10;

  AblationSwitches ablation;
  std::uint64_t seed = 0;

  std::string output_dir;
  bool overwrite = false;
  bool dump_clusters = false;
  bool export_maps = false;
  bool save_checkpoints = false;

  static ProposalConfig default_proposals();

  /// Throws InvalidArgument when settings break module preconditions.
  void validate() const;
  /// Iteration count after ablation overrides (the CoLA-UTAL baseline runs once).
  std::size_t effective_iterations() const;
  bool cci_enabled() const;
  bool iis_enabled() const;
};

void to_json(nlohmann::json& j, const PipelineConfig& cfg);
/// Missing keys keep their defaults; unknown keys are rejected.
void from_json(const nlohmann::json& j, PipelineConfig& cfg);

PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace feel
