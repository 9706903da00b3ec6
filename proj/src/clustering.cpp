#include "feel/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "feel/error.hpp"

namespace feel {

std::vector<double> uniform_attention(std::size_t snippet_count) {
  if (snippet_count == 0) throw InvalidArgument("uniform_attention needs T >= 1");
  return std::vector<double>(snippet_count, 1.0 / static_cast<double>(snippet_count));
}

std::vector<double> aggregate_global_feature(const RealMatrix& snippets,
                                             std::span<const double> attention) {
  if (attention.size() != snippets.rows())
    throw InvalidArgument("attention length " + std::to_string(attention.size()) +
                          " != snippet count " + std::to_string(snippets.rows()));
  std::vector<double> out(snippets.cols(), 0.0);
  for (std::size_t t = 0; t < snippets.rows(); ++t) {
    const double w = attention[t];
    auto row = snippets.row(t);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += w * row[j];
  }
  return out;
}

GlobalFeatureTable aggregate_dataset(const Dataset& dataset,
                                     const std::vector<std::vector<double>>& attention,
                                     std::size_t attention_iteration) {
  if (attention.size() != dataset.size())
    throw InvalidArgument("one attention map per video is required");
  GlobalFeatureTable table{RealMatrix(dataset.size(), dataset.feature_dim()), attention_iteration};
  for (std::size_t n = 0; n < dataset.size(); ++n) {
    auto f = aggregate_global_feature(dataset.videos[n].features, attention[n]);
    std::copy(f.begin(), f.end(), table.features.row(n).begin());
  }
  return table;
}

RealMatrix euclidean_confidence_matrix(const RealMatrix& centers, const RealMatrix& features) {
  if (centers.cols() != features.cols())
    throw InvalidArgument("centers and features have different widths");
  RealMatrix out(centers.rows(), features.rows());
  for (std::size_t k = 0; k < centers.rows(); ++k)
    for (std::size_t n = 0; n < features.rows(); ++n)
      out(k, n) = euclidean_distance(centers.row(k), features.row(n));
  return out;
}

std::vector<std::vector<std::size_t>> rank_rows(const RealMatrix& distances) {
  std::vector<std::vector<std::size_t>> out(distances.rows());
  for (std::size_t k = 0; k < distances.rows(); ++k) {
    auto& order = out[k];
    order.resize(distances.cols());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return distances(k, a) < distances(k, b);
    });
  }
  return out;
}

namespace {

std::size_t sample_weighted(const std::vector<double>& weights, double total, SeededRng& rng) {
  double target = rng.uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    target -= weights[i];
    if (target < 0.0 && weights[i] > 0.0) return i;
  }
  for (std::size_t i = weights.size(); i-- > 0;)
    if (weights[i] > 0.0) return i;
  return weights.size() - 1;
}

// Greedy k-means++: each step draws `trials` D^2-weighted candidates and keeps
// the one that lowers the seeding potential the most.
RealMatrix kmeans_plus_plus(const RealMatrix& x, std::size_t k, std::size_t trials, SeededRng& rng) {
  const std::size_t n = x.rows();
  RealMatrix centers(k, x.cols());
  std::vector<double> closest(n, std::numeric_limits<double>::infinity()), candidate(n), best(n);
  std::size_t pick = rng.index(n);
  std::copy(x.row(pick).begin(), x.row(pick).end(), centers.row(0).begin());
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += closest[i] = squared_distance(x.row(i), centers.row(0));
  for (std::size_t c = 1; c < k; ++c) {
    if (total <= 0.0) {
      // Every point coincides with a chosen center.
      pick = rng.index(n);
      std::copy(x.row(pick).begin(), x.row(pick).end(), centers.row(c).begin());
      continue;
    }
    double best_total = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < trials; ++t) {
      const std::size_t cand = sample_weighted(closest, total, rng);
      double cand_total = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        cand_total += candidate[i] = std::min(closest[i], squared_distance(x.row(i), x.row(cand)));
      if (cand_total < best_total) {
        best_total = cand_total;
        pick = cand;
        best.swap(candidate);
      }
    }
    std::copy(x.row(pick).begin(), x.row(pick).end(), centers.row(c).begin());
    closest.swap(best);
    total = best_total;
  }
  return centers;
}

}  // namespace

ClusterState kmeans(const GlobalFeatureTable& table, std::size_t num_clusters, SeededRng& rng,
                    const KMeansOptions& options) {
  const RealMatrix& x = table.features;
  const std::size_t n = x.rows(), dim = x.cols();
  if (num_clusters == 0) throw InvalidArgument("kmeans needs K >= 1");
  if (n < num_clusters)
    throw InvalidArgument("kmeans: N=" + std::to_string(n) + " < K=" + std::to_string(num_clusters));

  ClusterState state;
  const std::size_t trials = options.local_trials != 0
                                 ? options.local_trials
                                 : 2 + static_cast<std::size_t>(std::log(static_cast<double>(num_clusters)));
  state.centers = kmeans_plus_plus(x, num_clusters, trials, rng);
  std::vector<std::size_t> assign(n, 0);
  std::vector<double> cost(n, 0.0);

  for (std::size_t sweep = 1; sweep <= options.max_sweeps; ++sweep) {
    bool changed = false;
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < num_clusters; ++c) {
        const double d = squared_distance(x.row(i), state.centers.row(c));
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (sweep == 1 || assign[i] != best) changed = true;
      assign[i] = best;
      cost[i] = best_d;
      inertia += best_d;
    }
    state.inertia_history.push_back(inertia);
    state.sweeps = sweep;
    if (!changed || inertia == 0.0 || sweep == options.max_sweeps) break;

    // Update step.
    RealMatrix sums(num_clusters, dim);
    std::vector<std::size_t> counts(num_clusters, 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto s = sums.row(assign[i]);
      auto r = x.row(i);
      for (std::size_t j = 0; j < dim; ++j) s[j] += r[j];
      ++counts[assign[i]];
    }
    for (std::size_t c = 0; c < num_clusters; ++c) {
      if (counts[c] == 0) continue;
      auto dst = state.centers.row(c);
      auto s = sums.row(c);
      for (std::size_t j = 0; j < dim; ++j) dst[j] = s[j] / static_cast<double>(counts[c]);
    }
    for (std::size_t c = 0; c < num_clusters; ++c) {
      if (counts[c] != 0) continue;
      // Cost of each point against the updated center of its own cluster.
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = counts[assign[i]] == 0 ? 0.0 : squared_distance(x.row(i), state.centers.row(assign[i]));
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      std::copy(x.row(far).begin(), x.row(far).end(), state.centers.row(c).begin());
      --counts[assign[far]];
      assign[far] = c;
      counts[c] = 1;
    }
  }

  state.assignments = std::move(assign);
  state.inertia = state.inertia_history.back();
  state.confidence = euclidean_confidence_matrix(state.centers, x);
  state.rankings = rank_rows(state.confidence);
  return state;
}

std::vector<std::size_t> snippetwise_pseudolabels(
    const Dataset& dataset, const std::vector<std::vector<double>>& attention, std::size_t top_k,
    std::size_t num_clusters, SeededRng& rng) {
  if (top_k == 0) throw InvalidArgument("snippet-wise clustering needs k >= 1");
  if (attention.size() != dataset.size())
    throw InvalidArgument("one attention map per video is required");
  const std::size_t dim = dataset.feature_dim();
  GlobalFeatureTable pooled{RealMatrix(top_k * dataset.size(), dim), 0};
  for (std::size_t n = 0; n < dataset.size(); ++n) {
    const auto& feats = dataset.videos[n].features;
    if (top_k > feats.rows())
      throw InvalidArgument("snippet-wise k exceeds snippet count of '" + dataset.videos[n].video_id + "'");
    if (attention[n].size() != feats.rows()) throw InvalidArgument("attention length mismatch");
    RealMatrix column(feats.rows(), 1, attention[n]);
    const auto top = topk_rows(column, 0, top_k);
    for (std::size_t j = 0; j < top_k; ++j)
      std::copy(feats.row(top[j]).begin(), feats.row(top[j]).end(),
                pooled.features.row(n * top_k + j).begin());
  }
  const ClusterState state = kmeans(pooled, num_clusters, rng);
  std::vector<std::size_t> labels(dataset.size());
  for (std::size_t n = 0; n < dataset.size(); ++n) {
    std::vector<std::size_t> votes(num_clusters, 0);
    for (std::size_t j = 0; j < top_k; ++j) ++votes[state.assignments[n * top_k + j]];
    labels[n] = static_cast<std::size_t>(
        std::max_element(votes.begin(), votes.end()) - votes.begin());
  }
  return labels;
}

}  // namespace feel
