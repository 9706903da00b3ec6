#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "feel/numerics.hpp"

namespace feel {

/// Pre-extracted snippet features of one untrimmed video (T x feature_dim).
struct SnippetFeatureSet {
  std::string video_id;
  RealMatrix features;

  std::size_t snippet_count() const noexcept { return features.rows(); }
  std::size_t feature_dim() const noexcept { return features.cols(); }
};

struct Dataset {
  std::vector<SnippetFeatureSet> videos;
  std::size_t num_classes = 0;

  std::size_t size() const noexcept { return videos.size(); }
  std::size_t feature_dim() const;
  /// Throws ValidationError when any dataset invariant is broken.
  void validate() const;
};

enum class TimeUnit { kSnippet, kSeconds };

struct Segment {
  double start = 0.0;
  double end = 0.0;
  int label = 0;
  friend bool operator==(const Segment&, const Segment&) = default;
};

struct VideoAnnotation {
  std::string video_id;
  std::vector<Segment> segments;
  TimeUnit unit = TimeUnit::kSnippet;
  /// Required when unit is seconds: duration of one snippet in seconds
  /// (16 frames / fps for 16-frame snippets).
  std::optional<double> seconds_per_snippet;

  /// Segments converted to snippet units.
  std::vector<Segment> segments_in_snippets() const;
  friend bool operator==(const VideoAnnotation&, const VideoAnnotation&) = default;
};

struct GroundTruth {
  std::vector<VideoAnnotation> videos;

  const VideoAnnotation* find(const std::string& video_id) const;
  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

// FEAT1 binary feature files.
void save_features(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_features(const std::filesystem::path& path, std::size_t num_classes);

/// Row t of the result is [rgb_t | flow_t].
RealMatrix concat_streams(const RealMatrix& rgb, const RealMatrix& flow);
/// Pairs videos by position; ids must agree.
Dataset concat_datasets(const Dataset& rgb, const Dataset& flow);

// JSON-lines ground truth.
GroundTruth load_ground_truth(const std::filesystem::path& path,
                              std::optional<std::size_t> num_classes = std::nullopt);
void save_ground_truth(const GroundTruth& gt, const std::filesystem::path& path);
/// Checks segment extents against the videos' snippet counts and labels
/// against the dataset's class count.
void validate_ground_truth(const GroundTruth& gt, const Dataset& dataset);

/// Video-level class of every dataset video: the class covering the most
/// annotated snippets (ties to the lower class id), or -1 when the video has
/// no annotation.
std::vector<int> video_level_labels(const GroundTruth& gt, const Dataset& dataset);

struct SynthConfig {
  std::size_t num_classes = 10;
  std::size_t videos_per_class = 40;
  std::size_t snippets = 50;
  std::size_t feature_dim = 32;
  /// Distance of every class center (and the background center) from the origin.
  double separation = 4.0;
  /// Per-snippet noise on action snippets.
  double within_class_noise = 1.0;
  /// Per-snippet noise on background snippets.
  double background_noise = 1.0;
  /// Per-video offset shared by all action snippets of a video.
  double video_spread = 0.0;
  /// Per-video offset shared by all background snippets of a video.
  double scene_scale = 0.0;
  std::size_t actions_min = 1;
  std::size_t actions_max = 2;
  std::size_t length_min = 5;
  std::size_t length_max = 15;
  /// Exactly videos_per_class videos per class when true; otherwise every
  /// video draws its class uniformly.
  bool balanced = true;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticData {
  Dataset dataset;
  GroundTruth ground_truth;
  RealMatrix class_centers;      // K x feature_dim
  std::vector<double> background_center;
};

SyntheticData generate_synthetic(const SynthConfig& cfg);

}  // namespace feel
