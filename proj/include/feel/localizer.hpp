#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "feel/dataset.hpp"
#include "feel/numerics.hpp"
#include "feel/rng.hpp"

namespace feel {

/// Embedding layer (D -> D) followed by the class-activation layer (D -> K).
struct LocalizerParams {
  RealMatrix embed_weight;  // D x D, input feature i -> embedded j
  RealMatrix embed_bias;    // 1 x D
  RealMatrix class_weight;  // D x K
  RealMatrix class_bias;    // 1 x K

  std::size_t dim() const noexcept { return embed_weight.rows(); }
  std::size_t classes() const noexcept { return class_weight.cols(); }
  std::size_t parameter_count() const noexcept;

  std::vector<double> flat() const;
  void assign_flat(std::span<const double> values);

  static LocalizerParams zeros(std::size_t dim, std::size_t classes);
  /// Uniform in +-sqrt(6 / (fan_in + fan_out)) for weights, zero biases.
  static LocalizerParams glorot(std::size_t dim, std::size_t classes, SeededRng& rng);

  friend bool operator==(const LocalizerParams&, const LocalizerParams&) = default;
};

/// Snippet mining knobs. Zero-valued counts mean "derive from T".
struct MiningConfig {
  double actionness_threshold = 0.5;
  std::size_t easy_count = 0;       // max(1, T/8)
  std::size_t hard_count = 0;       // max(1, T/32)
  std::size_t negative_count = 0;   // = easy count
  std::size_t erosion_margin = 0;   // max(1, T/64)
  std::size_t dilation_margin = 0;  // max(1, T/64)
  /// Threshold the per-video min-max normalized attention during training.
  bool normalize_attention = true;

  std::size_t easy_for(std::size_t t) const;
  std::size_t hard_for(std::size_t t) const;
  std::size_t negatives_for(std::size_t t) const;
  std::size_t erosion_for(std::size_t t) const;
  std::size_t dilation_for(std::size_t t) const;
};

struct LossConfig {
  double lambda = 0.005;
  double temperature = 0.07;
  std::size_t top_k = 0;  // 0 => max(1, T/8)
  /// Compare unit-normalized embedded snippets in the contrastive term.
  bool normalize_features = true;

  std::size_t top_k_for(std::size_t t) const;
};

struct LocalizerConfig {
  MiningConfig mining;
  LossConfig loss;
};

struct ActivationMaps {
  RealMatrix embedded;          // T x D, ReLU output
  RealMatrix class_activation;  // T x K, ReLU output
  std::vector<double> attention;      // T, sigmoid of row sums
  std::vector<double> video_scores;   // K, top-k means
  std::vector<double> probabilities;  // K, softmax of scores
  std::vector<std::vector<std::size_t>> top_rows;  // per class, rows averaged
};

ActivationMaps forward(const RealMatrix& snippets, const LocalizerParams& params,
                       const LocalizerConfig& cfg);

struct MinedSnippets {
  std::vector<std::size_t> hard_action;
  std::vector<std::size_t> hard_background;
  std::vector<std::size_t> easy_action;
  std::vector<std::size_t> easy_background;
};

/// Morphological mining on the thresholded attention (windows are clipped at
/// the video borders).
MinedSnippets mine_snippets(std::span<const double> attention, const MiningConfig& cfg,
                            SeededRng& rng);

/// The attention handed to mine_snippets during training: min-max normalized
/// per video when enabled (a constant map is returned unchanged).
std::vector<double> mining_attention(std::span<const double> attention, const MiningConfig& cfg);

std::vector<bool> erode(const std::vector<bool>& mask, std::size_t margin);
std::vector<bool> dilate(const std::vector<bool>& mask, std::size_t margin);

struct ContrastiveTriple {
  std::size_t query = 0;
  std::size_t positive = 0;
  std::vector<std::size_t> negatives;
};

struct VideoTriples {
  std::optional<ContrastiveTriple> action;      // hard action vs easy action / easy background
  std::optional<ContrastiveTriple> background;  // hard background vs easy background / easy action
};

VideoTriples sample_triples(const MinedSnippets& mined, std::size_t negative_count, SeededRng& rng);

/// -log(exp(q.p/theta) / (exp(q.p/theta) + sum exp(q.n/theta))) for rows of
/// `features`.
double contrastive_term(const RealMatrix& features, const ContrastiveTriple& triple,
                        double temperature);

/// Contrastive loss of one video, summed over its triples (0 when none).
double contrastive_loss(const RealMatrix& embedded, const VideoTriples& triples,
                        const LossConfig& cfg);

/// -log p[label].
double classification_loss(std::span<const double> probabilities, std::size_t label);

inline double total_loss(double classification, double contrastive, double lambda) {
  return classification + lambda * contrastive;
}

struct BatchItem {
  const RealMatrix* snippets = nullptr;
  std::size_t label = 0;
  VideoTriples triples;
};

struct LossBreakdown {
  double classification = 0.0;  // mean over the batch
  double contrastive = 0.0;     // sum over the batch
  double total = 0.0;
};

/// Batch loss with mining/triples held fixed.
LossBreakdown batch_loss(std::span<const BatchItem> batch, const LocalizerParams& params,
                         const LocalizerConfig& cfg);

/// Batch loss and its exact gradient with respect to every parameter. Top-k
/// rows and the sampled triples are constants of the forward pass; ReLU has
/// zero derivative at 0.
LossBreakdown backward(std::span<const BatchItem> batch, const LocalizerParams& params,
                       const LocalizerConfig& cfg, LocalizerParams& gradients);

struct TrainingExample {
  std::size_t video = 0;
  std::size_t label = 0;
};

struct TrainingTrace {
  std::vector<double> epoch_total;
  std::vector<double> epoch_classification;
  std::vector<double> epoch_contrastive;
  std::size_t steps = 0;
};

/// Shuffled mini-batch Adam over `examples` for `epochs` epochs. Mining and
/// triple sampling are redone for every batch from the current parameters.
TrainingTrace train_iteration(const Dataset& dataset, std::span<const TrainingExample> examples,
                              LocalizerParams& params, AdamState& adam, std::size_t epochs,
                              std::size_t batch_size, const LocalizerConfig& cfg, SeededRng& rng);

/// Mean classification loss over `examples` under the current parameters.
double mean_classification_loss(const Dataset& dataset, std::span<const TrainingExample> examples,
                                const LocalizerParams& params, const LocalizerConfig& cfg);

/// Class-agnostic attention of every video.
std::vector<std::vector<double>> attention_maps(const Dataset& dataset, const LocalizerParams& params,
                                                const LocalizerConfig& cfg);

struct Checkpoint {
  LocalizerParams params;
  AdamState adam;
  std::uint32_t iteration = 0;
};

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// CSV with columns snippet, S, A_0 .. A_{K-1}.
void write_attention_csv(const ActivationMaps& maps, const std::filesystem::path& path);

}  // namespace feel
