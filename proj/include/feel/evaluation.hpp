#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "feel/dataset.hpp"
#include "feel/localizer.hpp"

namespace feel {

struct Proposal {
  std::string video_id;
  double start = 0.0;  // snippet units, half-open [start, end)
  double end = 0.0;
  int label = 0;       // cluster index before mapping, class id after
  double score = 0.0;
};

struct ProposalConfig {
  double class_threshold = 0.1;
  std::vector<double> activation_thresholds;
  double nms_threshold = 0.7;
  double margin_fraction = 0.25;
};

/// {start, start + step, ...} strictly below stop (count = round((stop-start)/step)).
std::vector<double> threshold_grid(double start, double stop, double step);

/// Mean of the column inside [start, end) minus the mean over the flanking
/// margins of floor(margin_fraction * length) snippets (clipped to the video;
/// with no flank the outer mean is 0).
double score_proposal(std::span<const double> activation, std::size_t start, std::size_t end,
                      double margin_fraction = 0.25);

double temporal_iou(double a_start, double a_end, double b_start, double b_end);

/// Maximal runs with value strictly above `threshold`, as [start, end).
std::vector<std::pair<std::size_t, std::size_t>> runs_above(std::span<const double> values,
                                                            double threshold);

/// Candidate segments for every class whose probability exceeds the class
/// threshold, pooled over all activation thresholds (before NMS). Columns are
/// min-max normalized per video before thresholding; scores use raw values.
std::vector<Proposal> generate_proposals(const ActivationMaps& maps, const std::string& video_id,
                                         const ProposalConfig& cfg);

/// Greedy NMS across classes: keep the best remaining proposal and drop every
/// other with IoU above the threshold. Equal scores keep input order.
std::vector<Proposal> nms(std::vector<Proposal> proposals, double threshold = 0.7);

/// Majority ground-truth class of each cluster (ties to the lower class id,
/// empty clusters to class 0). Videos with truth < 0 are ignored.
std::vector<int> map_clusters_to_labels(std::span<const std::size_t> clusters,
                                        std::span<const int> truth, std::size_t num_clusters);

struct MapReport {
  std::vector<double> iou_thresholds;
  std::vector<double> map;                      // per threshold
  std::vector<int> classes;                     // classes that have ground truth
  std::vector<std::vector<double>> class_ap;    // [threshold][class position]
  double average = 0.0;
};

/// All-point interpolated AP from score-ranked true/false positive flags.
double average_precision(const std::vector<bool>& true_positive, std::size_t positives);

MapReport mean_average_precision(const std::vector<Proposal>& proposals, const GroundTruth& gt,
                                 std::span<const double> iou_thresholds);

/// Normalized mutual information, arithmetic-mean normalization.
double nmi(std::span<const int> predicted, std::span<const int> truth);

/// Mean over centers of the fraction of the first k ranked videos whose
/// truth equals the center's class.
double ranking_precision(const std::vector<std::vector<std::size_t>>& rankings,
                         std::span<const int> center_class, std::span<const int> truth, std::size_t k);

void write_proposals_csv(const std::vector<Proposal>& proposals, const std::filesystem::path& path);

}  // namespace feel
