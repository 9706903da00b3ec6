#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "feel/config.hpp"
#include "feel/dataset.hpp"
#include "feel/error.hpp"
#include "feel/evaluation.hpp"
#include "feel/localizer.hpp"

namespace feel {

/// A module error raised inside the iteration loop, tagged with the
/// 1-based iteration it happened in.
class IterationError : public Error {
 public:
  IterationError(std::string inner_kind, std::size_t iteration, const std::string& what)
      : Error(what), inner_kind_(std::move(inner_kind)), iteration_(iteration) {}
  const char* kind() const noexcept override { return inner_kind_.c_str(); }
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::string inner_kind_;
  std::size_t iteration_;
};

struct IterationRecord {
  std::size_t iteration = 0;
  double rate = 0.0;
  std::size_t selected = 0;
  std::vector<std::size_t> per_cluster;
  std::size_t epochs = 0;
  // Ground-truth diagnostics; NaN without annotations or when not applicable.
  double selection_accuracy = 0.0;
  double full_accuracy = 0.0;
  double nmi_selected = 0.0;
  double nmi_full = 0.0;
  double precision_initial = 0.0;
  double precision_refined = 0.0;
  double loss_total = 0.0;
  double loss_classification = 0.0;
  double loss_contrastive = 0.0;
  std::vector<double> map;  // per IoU threshold; empty without annotations
  double average_map = 0.0;
  double duration_ms = 0.0;
};

struct EvalReport {
  bool has_ground_truth = false;
  std::size_t iteration = 0;
  MapReport map;
  double nmi = 0.0;
  /// Ground-truth class of every cluster index.
  std::vector<int> cluster_to_class;
  std::vector<std::size_t> pseudo_labels;
};

struct PipelineResult {
  PipelineConfig config;
  std::vector<IterationRecord> records;
  EvalReport final_eval;
  /// Final proposals after NMS with labels mapped to ground-truth classes
  /// (cluster indices when no annotations exist).
  std::vector<Proposal> proposals;
  LocalizerParams params;
};

/// Permutation p with p[c] = new index of current cluster c, maximizing the
/// number of videos whose relabeled cluster equals their previous cluster.
std::vector<std::size_t> best_label_permutation(const std::vector<std::size_t>& previous,
                                                const std::vector<std::size_t>& current,
                                                std::size_t num_clusters);

/// Loads (or synthesizes) data according to the config.
struct LoadedData {
  Dataset dataset;
  std::optional<GroundTruth> ground_truth;
};
LoadedData load_data(const PipelineConfig& cfg);

PipelineResult run_pipeline(const PipelineConfig& cfg);
PipelineResult run_pipeline(const PipelineConfig& cfg, const LoadedData& data);

/// Column layout of iterations.csv; `duration_ms` is the last column.
std::string iterations_csv(const std::vector<IterationRecord>& records,
                           std::span<const double> iou_thresholds);

/// Creates `out_dir` if needed; throws IoError when it cannot be created or
/// already holds reports and `overwrite` is false.
void check_output_dir(const std::filesystem::path& out_dir, bool overwrite);

/// Writes iterations.csv, final_eval.json, config_resolved.json and
/// proposals.csv into `out_dir`, each through a temporary file and rename.
/// A directory that already holds reports is refused unless `overwrite`.
void emit_reports(const PipelineResult& result, const std::filesystem::path& out_dir, bool overwrite);

/// Writes `content` to `path` via a sibling temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace feel
