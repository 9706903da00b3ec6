#pragma once

#include <cstddef>
#include <vector>

#include "feel/numerics.hpp"

namespace feel {

struct PseudoLabelSet {
  std::vector<std::size_t> labels;     // per video: nearest center index
  std::vector<double> distances;       // refined distance to that center
};

/// Per center, the videos labeled with it in re-ranked order.
struct FilteredRanking {
  std::vector<std::vector<std::size_t>> lists;
  std::size_t cluster_size(std::size_t k) const { return lists[k].size(); }
};

enum class ScheduleMode { kConstant, kVariable };

struct SelectionSchedule {
  ScheduleMode mode = ScheduleMode::kConstant;
  std::size_t max_iterations = 6;
  double mu = 1.05;  // variable mode only

  void validate() const;
};

struct SelectedVideo {
  std::size_t video = 0;
  std::size_t label = 0;
};

struct SelectionRound {
  std::size_t iteration = 0;
  double rate = 0.0;
  std::vector<SelectedVideo> selected;
  std::vector<std::size_t> per_cluster;
};

/// Label each video (column) with its argmin row; ties to the lower row.
PseudoLabelSet assign_pseudolabels(const RealMatrix& refined);

FilteredRanking filtered_rankings(const std::vector<std::vector<std::size_t>>& rankings,
                                  const std::vector<std::size_t>& labels);

/// Fraction of each cluster used at iteration i (1-based).
double selection_rate(std::size_t iteration, const SelectionSchedule& schedule);

/// Takes the first floor(rate * n_k) videos of every filtered list.
SelectionRound select_instances(const FilteredRanking& filtered, double rate,
                                std::size_t iteration = 0);

/// ceil(max_epochs * selected / total), at least 1.
std::size_t epochs_for_iteration(std::size_t max_epochs, std::size_t selected, std::size_t total);

}  // namespace feel
