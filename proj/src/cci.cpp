#include "feel/cci.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <numeric>
#include <string>

#include "feel/clustering.hpp"
#include "feel/error.hpp"
#include "feel/log.hpp"

namespace feel {

EntityUniverse::EntityUniverse(const RealMatrix& centers, const RealMatrix& videos)
    : num_centers_(centers.rows()) {
  if (centers.cols() != videos.cols())
    throw InvalidArgument("centers and videos live in different feature spaces");
  const std::size_t total = centers.rows() + videos.rows();
  auto entity = [&](std::size_t e) {
    return e < num_centers_ ? centers.row(e) : videos.row(e - num_centers_);
  };
  distances_ = RealMatrix(total, total);
  for (std::size_t a = 0; a < total; ++a)
    for (std::size_t b = a + 1; b < total; ++b) {
      const double d = euclidean_distance(entity(a), entity(b));
      distances_(a, b) = d;
      distances_(b, a) = d;
    }
  build_orders();
}

EntityUniverse::EntityUniverse(RealMatrix distances, std::size_t num_centers)
    : distances_(std::move(distances)), num_centers_(num_centers) {
  if (distances_.rows() != distances_.cols()) throw InvalidArgument("universe matrix must be square");
  if (num_centers_ > distances_.rows()) throw InvalidArgument("more centers than entities");
  for (std::size_t a = 0; a < size(); ++a) {
    if (distances_(a, a) != 0.0) throw InvalidArgument("universe diagonal must be zero");
    for (std::size_t b = 0; b < a; ++b)
      if (std::abs(distances_(a, b) - distances_(b, a)) > 1e-9)
        throw InvalidArgument("universe distances must be symmetric");
  }
  build_orders();
}

void EntityUniverse::build_orders() {
  const std::size_t n = size();
  order_.assign(n, {});
  for (std::size_t e = 0; e < n; ++e) {
    auto& order = order_[e];
    order.reserve(n - 1);
    for (std::size_t z = 0; z < n; ++z)
      if (z != e) order.push_back(z);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return distances_(e, a) < distances_(e, b);
    });
  }
}

bool EntityUniverse::in_top(std::size_t e, std::size_t z, std::size_t l) const {
  if (z == e || l == 0) return false;
  const auto& order = order_[e];
  if (l >= order.size()) return true;
  // z is in the prefix iff it sorts before the l-th neighbor.
  const std::size_t boundary = order[l - 1];
  const double dz = distances_(e, z), db = distances_(e, boundary);
  return dz < db || (dz == db && z <= boundary);
}

std::vector<std::size_t> top_l_neighbors(const EntityUniverse& u, std::size_t e, std::size_t l) {
  if (e >= u.size()) throw InvalidArgument("entity index out of range");
  if (l < 1 || l > u.size() - 1)
    throw InvalidArgument("l=" + std::to_string(l) + " outside [1, " + std::to_string(u.size() - 1) + "]");
  auto order = u.neighbor_order(e);
  return {order.begin(), order.begin() + static_cast<std::ptrdiff_t>(l)};
}

std::vector<std::size_t> k_reciprocal_set(const EntityUniverse& u, std::size_t e, std::size_t l) {
  if (l == 0) return {};
  std::vector<std::size_t> out;
  for (std::size_t z : top_l_neighbors(u, e, l))
    if (u.in_top(z, e, l)) out.push_back(z);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> expand_reciprocal_set(const EntityUniverse& u, std::size_t e,
                                               std::size_t l) {
  const auto base = k_reciprocal_set(u, e, l);
  std::vector<std::size_t> out = base;
  const std::size_t half = l / 2;
  for (std::size_t z : base) {
    const auto candidate = k_reciprocal_set(u, z, half);
    std::vector<std::size_t> common;
    std::set_intersection(base.begin(), base.end(), candidate.begin(), candidate.end(),
                          std::back_inserter(common));
    // |common| >= 2/3 |candidate|, in integers.
    if (3 * common.size() >= 2 * candidate.size()) {
      std::vector<std::size_t> merged;
      std::set_union(out.begin(), out.end(), candidate.begin(), candidate.end(),
                     std::back_inserter(merged));
      out.swap(merged);
    }
  }
  return out;
}

ReciprocalEncoding encode_neighbors(std::span<const std::size_t> members,
                                    std::span<const double> distance_row, double scale) {
  if (!(scale > 0.0)) throw InvalidArgument("encoding scale must be positive");
  ReciprocalEncoding enc{std::vector<double>(distance_row.size(), 0.0)};
  for (std::size_t m : members) {
    if (m >= distance_row.size()) throw InvalidArgument("member index out of range");
    enc.weights[m] = std::exp(-distance_row[m] / scale);
  }
  return enc;
}

double jaccard_set_form(std::span<const std::size_t> a, std::span<const std::size_t> b) {
  std::vector<std::size_t> common, all;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(all));
  if (all.empty()) return 1.0;
  return 1.0 - static_cast<double>(common.size()) / static_cast<double>(all.size());
}

double jaccard_encoded(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("encodings over different universes");
  double lo = 0.0, hi = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    lo += std::min(a[i], b[i]);
    hi += std::max(a[i], b[i]);
  }
  if (hi == 0.0) return 1.0;
  return 1.0 - lo / hi;
}

double blend_distance(double jaccard, double euclidean, double gamma, double scale) {
  return gamma * scale * jaccard + (1.0 - gamma) * euclidean;
}

RefinedRanking refined_distance_matrix(const EntityUniverse& universe, const CciOptions& options) {
  if (!(options.gamma >= 0.0 && options.gamma <= 1.0))
    throw InvalidArgument("gamma must lie in [0, 1]");
  const std::size_t total = universe.size();
  const std::size_t K = universe.num_centers(), N = universe.num_videos();
  if (total < 2) throw InvalidArgument("universe needs at least two entities");

  std::size_t l = options.l;
  if (l > total - 1) {
    log::warn("reciprocal l=" + std::to_string(l) + " clamped to universe size - 1 = " +
              std::to_string(total - 1));
    l = total - 1;
  }
  std::size_t l_exp = std::min(options.l_expansion, total - 1);

  double scale = 1.0;
  if (options.scale == DistanceScale::kMaxDistance) {
    const auto values = universe.distances().values();
    const double max_d = *std::max_element(values.begin(), values.end());
    if (max_d > 0.0) scale = max_d;
  }

  std::vector<std::vector<double>> enc(total);
  for (std::size_t e = 0; e < total; ++e) {
    auto support = expand_reciprocal_set(universe, e, l);
    // The entity itself is part of its own neighborhood (weight exp(0) = 1).
    support.insert(std::lower_bound(support.begin(), support.end(), e), e);
    support.erase(std::unique(support.begin(), support.end()), support.end());
    enc[e] = encode_neighbors(support, universe.distances().row(e), scale).weights;
  }

  if (l_exp > 0) {
    std::vector<std::vector<double>> expanded(total, std::vector<double>(total, 0.0));
    for (std::size_t e = 0; e < total; ++e) {
      auto& dst = expanded[e];
      auto add = [&](std::size_t src) {
        for (std::size_t j = 0; j < total; ++j) dst[j] += enc[src][j];
      };
      add(e);
      auto order = universe.neighbor_order(e);
      for (std::size_t i = 0; i < l_exp; ++i) add(order[i]);
      for (double& w : dst) w /= static_cast<double>(l_exp + 1);
    }
    enc.swap(expanded);
  }

  RefinedRanking out;
  out.gamma = options.gamma;
  out.scale = scale;
  out.refined = RealMatrix(K, N);
  out.jaccard = RealMatrix(K, N);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t n = 0; n < N; ++n) {
      const double dj = jaccard_encoded(enc[k], enc[K + n]);
      out.jaccard(k, n) = dj;
      out.refined(k, n) = blend_distance(dj, universe.distance(k, K + n), options.gamma, scale);
    }
  out.rankings = rank_rows(out.refined);
  return out;
}

}  // namespace feel
