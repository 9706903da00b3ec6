#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "feel/numerics.hpp"

namespace feel {

/// K cluster centers followed by N videos in one feature space, with the full
/// symmetric pairwise Euclidean distance matrix. Entity e < K is center e;
/// entity K + n is video n.
class EntityUniverse {
 public:
  EntityUniverse(const RealMatrix& centers, const RealMatrix& videos);
  /// Wraps an existing distance matrix (must be square, symmetric within
  /// 1e-9, zero diagonal).
  EntityUniverse(RealMatrix distances, std::size_t num_centers);

  std::size_t size() const noexcept { return distances_.rows(); }
  std::size_t num_centers() const noexcept { return num_centers_; }
  std::size_t num_videos() const noexcept { return size() - num_centers_; }
  const RealMatrix& distances() const noexcept { return distances_; }
  double distance(std::size_t a, std::size_t b) const { return distances_(a, b); }

  /// All other entities ordered by distance from `e`, ties by index.
  std::span<const std::size_t> neighbor_order(std::size_t e) const { return order_[e]; }
  /// True when `z` is among the `l` nearest other entities of `e`.
  bool in_top(std::size_t e, std::size_t z, std::size_t l) const;

 private:
  void build_orders();

  RealMatrix distances_;
  std::size_t num_centers_;
  std::vector<std::vector<std::size_t>> order_;
};

/// N(e, l): the l nearest other entities, nearest first. 1 <= l <= size-1.
std::vector<std::size_t> top_l_neighbors(const EntityUniverse& u, std::size_t e, std::size_t l);

/// U(e, l) = { z in N(e, l) : e in N(z, l) }, sorted by index.
std::vector<std::size_t> k_reciprocal_set(const EntityUniverse& u, std::size_t e, std::size_t l);

/// U(e, l) grown by every U(z, floor(l/2)), z in U(e, l), that shares at
/// least two thirds of its members with U(e, l). Sorted by index.
std::vector<std::size_t> expand_reciprocal_set(const EntityUniverse& u, std::size_t e,
                                               std::size_t l);

/// Dense weight vector over all entities: exp(-d/scale) for members, else 0.
struct ReciprocalEncoding {
  std::vector<double> weights;
};

ReciprocalEncoding encode_neighbors(std::span<const std::size_t> members,
                                    std::span<const double> distance_row, double scale = 1.0);

/// 1 - |a & b| / |a | b| over sorted index sets; two empty sets give 1.
double jaccard_set_form(std::span<const std::size_t> a, std::span<const std::size_t> b);

/// 1 - sum(min) / sum(max); two all-zero encodings give 1.
double jaccard_encoded(std::span<const double> a, std::span<const double> b);

enum class DistanceScale {
  kNone,        // use distances exactly as given
  kMaxDistance  // divide by the largest universe distance
};

struct CciOptions {
  double gamma = 0.7;
  std::size_t l = 20;
  /// Query-expansion width; 0 disables it.
  std::size_t l_expansion = 6;
  DistanceScale scale = DistanceScale::kMaxDistance;
};

struct RefinedRanking {
  RealMatrix refined;   // K x N
  RealMatrix jaccard;   // K x N
  double gamma = 0.0;
  double scale = 1.0;
  std::vector<std::vector<std::size_t>> rankings;  // per center, ascending refined distance
};

/// refined(k, n) = gamma * scale * d_J(c_k, v_n) + (1 - gamma) * d_E(c_k, v_n).
/// With DistanceScale::kNone the scale is 1 and this is the plain blend.
RefinedRanking refined_distance_matrix(const EntityUniverse& universe, const CciOptions& options);

/// The blend alone, for callers that already hold d_J and d_E.
double blend_distance(double jaccard, double euclidean, double gamma, double scale = 1.0);

}  // namespace feel
