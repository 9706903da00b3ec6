#include "feel/curriculum.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "feel/error.hpp"

namespace feel {

void SelectionSchedule::validate() const {
  if (max_iterations < 1) throw InvalidArgument("I_max must be >= 1");
  if (mode == ScheduleMode::kVariable && !(mu > 1.0))
    throw InvalidArgument("variable mode needs mu > 1");
}

PseudoLabelSet assign_pseudolabels(const RealMatrix& refined) {
  if (refined.rows() == 0) throw InvalidArgument("no centers to assign labels from");
  PseudoLabelSet out;
  out.labels.resize(refined.cols());
  out.distances.resize(refined.cols());
  for (std::size_t n = 0; n < refined.cols(); ++n) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < refined.rows(); ++k)
      if (refined(k, n) < refined(best, n)) best = k;
    out.labels[n] = best;
    out.distances[n] = refined(best, n);
  }
  return out;
}

FilteredRanking filtered_rankings(const std::vector<std::vector<std::size_t>>& rankings,
                                  const std::vector<std::size_t>& labels) {
  FilteredRanking out;
  out.lists.resize(rankings.size());
  for (std::size_t k = 0; k < rankings.size(); ++k)
    for (std::size_t v : rankings[k]) {
      if (v >= labels.size()) throw InvalidArgument("ranking names an unknown video");
      if (labels[v] == k) out.lists[k].push_back(v);
    }
  return out;
}

double selection_rate(std::size_t iteration, const SelectionSchedule& schedule) {
  schedule.validate();
  if (iteration < 1 || iteration > schedule.max_iterations)
    throw InvalidArgument("iteration " + std::to_string(iteration) + " outside [1, " +
                          std::to_string(schedule.max_iterations) + "]");
  if (iteration == schedule.max_iterations) return 1.0;
  const double i = static_cast<double>(iteration);
  const double imax = static_cast<double>(schedule.max_iterations);
  if (schedule.mode == ScheduleMode::kConstant) return i / imax;
  // expm1/log1p keep precision when mu is close to 1.
  const double log_mu = std::log1p(schedule.mu - 1.0);
  return std::expm1(i * log_mu) / std::expm1(imax * log_mu);
}

SelectionRound select_instances(const FilteredRanking& filtered, double rate,
                                std::size_t iteration) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw InvalidArgument("selection rate must lie in [0, 1]");
  SelectionRound round;
  round.iteration = iteration;
  round.rate = rate;
  round.per_cluster.resize(filtered.lists.size());
  for (std::size_t k = 0; k < filtered.lists.size(); ++k) {
    const auto& list = filtered.lists[k];
    // The slack absorbs rounding in products such as 0.7 * 10 that are integral.
    const auto take = std::min(
        list.size(),
        static_cast<std::size_t>(std::floor(rate * static_cast<double>(list.size()) + 1e-9)));
    round.per_cluster[k] = take;
    for (std::size_t j = 0; j < take; ++j) round.selected.push_back({list[j], k});
  }
  return round;
}

std::size_t epochs_for_iteration(std::size_t max_epochs, std::size_t selected, std::size_t total) {
  if (total == 0) throw InvalidArgument("total video count must be positive");
  if (selected > total) throw InvalidArgument("selected count exceeds total");
  const std::size_t e = (max_epochs * selected + total - 1) / total;
  return e < 1 ? 1 : e;
}

}  // namespace feel
