#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "feel/dataset.hpp"
#include "feel/numerics.hpp"
#include "feel/rng.hpp"

namespace feel {

/// Global video features (one row per video) and the iteration whose
/// attention maps produced them.
struct GlobalFeatureTable {
  RealMatrix features;
  std::size_t attention_iteration = 0;
};

struct KMeansOptions {
  std::size_t max_sweeps = 300;
  /// Candidates drawn per seeding step; 0 picks 2 + floor(ln K), 1 is plain k-means++.
  std::size_t local_trials = 0;
};

struct ClusterState {
  RealMatrix centers;                         // K x D
  std::vector<std::size_t> assignments;       // per video
  RealMatrix confidence;                      // K x N Euclidean distances
  std::vector<std::vector<std::size_t>> rankings;  // per center, videos ascending by distance
  std::vector<double> inertia_history;        // one entry per assignment sweep
  double inertia = 0.0;
  std::size_t sweeps = 0;
};

/// Attention used before any localizer exists: 1/T everywhere.
std::vector<double> uniform_attention(std::size_t snippet_count);

/// Sum over snippets of attention-weighted features (no renormalization).
std::vector<double> aggregate_global_feature(const RealMatrix& snippets,
                                             std::span<const double> attention);

GlobalFeatureTable aggregate_dataset(const Dataset& dataset,
                                     const std::vector<std::vector<double>>& attention,
                                     std::size_t attention_iteration);

/// Entry (k, n) is the Euclidean distance between center k and feature row n.
RealMatrix euclidean_confidence_matrix(const RealMatrix& centers, const RealMatrix& features);

/// Indices of each row of `distances` sorted ascending; ties by column index.
std::vector<std::vector<std::size_t>> rank_rows(const RealMatrix& distances);

/// Lloyd's algorithm with k-means++ seeding. An empty cluster is re-seeded
/// to the point currently farthest from its own center.
ClusterState kmeans(const GlobalFeatureTable& table, std::size_t num_clusters, SeededRng& rng,
                    const KMeansOptions& options = {});

/// Clusters the top-`top_k` attention snippets of every video together and
/// labels each video by majority vote over its snippets (ties to the lower
/// cluster index).
std::vector<std::size_t> snippetwise_pseudolabels(
    const Dataset& dataset, const std::vector<std::vector<double>>& attention, std::size_t top_k,
    std::size_t num_clusters, SeededRng& rng);

}  // namespace feel
