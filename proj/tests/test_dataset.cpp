#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cstring>
#include <span>
#include <fstream>
#include <limits>
#include <set>

#include "feel/clustering.hpp"
#include "feel/dataset.hpp"
#include "feel/error.hpp"
#include "feel/evaluation.hpp"
#include "feel/log.hpp"
#include "oracles.hpp"
#include "tempdir.hpp"

using namespace feel;

namespace {

Dataset small_dataset() {
  Dataset d;
  d.num_classes = 2;
  d.videos.push_back({"v0", RealMatrix(2, 3, std::vector<double>{1, 2, 3, 4, 5, 6})});
  d.videos.push_back({"v1", RealMatrix(1, 3, std::vector<double>{-1, 0.5, 0.25})});
  return d;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("FEAT1 round trip is bitwise") {
  TempDir dir;
  SeededRng rng(1);
  Dataset d;
  d.num_classes = 3;
  for (int v = 0; v < 4; ++v) {
    RealMatrix m(5, 6);
    // Arbitrary finite float32 values, including extremes.
    for (double& x : m.values()) x = static_cast<float>(rng.uniform(-1e30, 1e30) * rng.uniform());
    m(0, 0) = std::numeric_limits<float>::max();
    m(0, 1) = std::numeric_limits<float>::denorm_min();
    m(0, 2) = -0.0;
    d.videos.push_back({"video_" + std::to_string(v), m});
  }
  save_features(d, dir / "f.feat");
  const Dataset back = load_features(dir / "f.feat", 3);
  REQUIRE(back.size() == d.size());
  for (std::size_t v = 0; v < d.size(); ++v) {
    CHECK(back.videos[v].video_id == d.videos[v].video_id);
    const std::span<const double> a = d.videos[v].features.values(), b = back.videos[v].features.values();
    REQUIRE(a.size() == b.size());
    CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
  }
}

TEST_CASE("FEAT1 fixture written by an independent byte writer") {
  const Dataset d = load_features(std::filesystem::path(FEEL_TEST_DATA_DIR) / "two_videos.feat", 2);
  REQUIRE(d.size() == 2);
  CHECK(d.videos[0].video_id == "a");
  CHECK(d.videos[1].video_id == "clip_b");
  CHECK(d.videos[0].features == RealMatrix(2, 3, std::vector<double>{1.5, -2.25, 0.0, 0.125, 1.0e6, -7.5}));
  CHECK(d.videos[1].features == RealMatrix(1, 3, std::vector<double>{65504.0, std::ldexp(1.0, -20), -3.0}));
}

TEST_CASE("FEAT1 writer matches the independent fixture bytes") {
  TempDir dir;
  const auto fixture = std::filesystem::path(FEEL_TEST_DATA_DIR) / "two_videos.feat";
  save_features(load_features(fixture, 2), dir / "copy.feat");
  CHECK(read_bytes(dir / "copy.feat") == read_bytes(fixture));
}

TEST_CASE("FEAT1 errors") {
  TempDir dir;
  const auto good = read_bytes(std::filesystem::path(FEEL_TEST_DATA_DIR) / "two_videos.feat");

  SUBCASE("bad magic") {
    auto bytes = good;
    bytes[0] = 'X';
    write_text(dir / "x.feat", bytes);
    CHECK_THROWS_AS(load_features(dir / "x.feat", 2), FormatError);
  }
  SUBCASE("bad version") {
    auto bytes = good;
    bytes[5] = 2;
    write_text(dir / "x.feat", bytes);
    CHECK_THROWS_AS(load_features(dir / "x.feat", 2), FormatError);
  }
  SUBCASE("truncated payload") {
    write_text(dir / "x.feat", good.substr(0, good.size() - 3));
    CHECK_THROWS_AS(load_features(dir / "x.feat", 2), CorruptFileError);
  }
  SUBCASE("trailing bytes") {
    write_text(dir / "x.feat", good + "zz");
    CHECK_THROWS_AS(load_features(dir / "x.feat", 2), CorruptFileError);
  }
  SUBCASE("empty video list") {
    std::string bytes = "FEAT1";
    bytes += std::string("\x01\x00\x00\x00", 4);
    bytes += std::string("\x00\x00\x00\x00", 4);
    write_text(dir / "x.feat", bytes);
    CHECK_THROWS_AS(load_features(dir / "x.feat", 2), ValidationError);
  }
  SUBCASE("duplicate id") {
    Dataset d = small_dataset();
    d.videos[1].video_id = "v0";
    d.videos[1].features = RealMatrix(1, 3);
    // Writing is not validated, so the loader sees the duplicate.
    save_features(d, dir / "x.feat");
    CHECK_THROWS_AS(load_features(dir / "x.feat", 2), ValidationError);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(load_features(dir / "none.feat", 2), IoError); }
}

TEST_CASE("dataset validation") {
  Dataset d = small_dataset();
  CHECK_NOTHROW(d.validate());
  d.num_classes = 1;
  CHECK_THROWS_AS(d.validate(), ValidationError);
  d = small_dataset();
  d.videos[1].features = RealMatrix(1, 2);
  CHECK_THROWS_AS(d.validate(), ValidationError);
  d = small_dataset();
  d.videos[0].features(0, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(d.validate(), ValidationError);
  d = small_dataset();
  d.videos[0].features = RealMatrix(0, 3);
  CHECK_THROWS_AS(d.validate(), ValidationError);
}

TEST_CASE("concat streams") {
  const RealMatrix rgb(2, 1, std::vector<double>{1, 2});
  const RealMatrix flow(2, 1, std::vector<double>{10, 20});
  CHECK(concat_streams(rgb, flow) == RealMatrix(2, 2, std::vector<double>{1, 10, 2, 20}));
  const auto doubled = concat_streams(rgb, rgb);
  CHECK(doubled(0, 0) == doubled(0, 1));
  CHECK(doubled(1, 0) == doubled(1, 1));
  CHECK_THROWS_AS(concat_streams(rgb, RealMatrix(3, 1)), InvalidArgument);
  CHECK_THROWS_AS(concat_streams(rgb, RealMatrix(2, 2)), InvalidArgument);

  SeededRng rng(2);
  const auto a = oracle::random_matrix(5, 3, rng), b = oracle::random_matrix(5, 3, rng);
  const auto c = concat_streams(a, b);
  REQUIRE(c.cols() == 6);
  for (std::size_t t = 0; t < 5; ++t)
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(c(t, j) == a(t, j));
      CHECK(c(t, 3 + j) == b(t, j));
    }
}

TEST_CASE("concat datasets pairs videos by id") {
  Dataset rgb = small_dataset(), flow = small_dataset();
  const Dataset both = concat_datasets(rgb, flow);
  CHECK(both.feature_dim() == 6);
  CHECK(both.feature_dim() % 2 == 0);
  flow.videos[1].video_id = "other";
  CHECK_THROWS_AS(concat_datasets(rgb, flow), InvalidArgument);
}

TEST_CASE("ground truth parsing") {
  TempDir dir;
  SUBCASE("empty file") {
    write_text(dir / "gt.jsonl", "");
    CHECK(load_ground_truth(dir / "gt.jsonl").videos.empty());
  }
  SUBCASE("round trip") {
    GroundTruth gt;
    gt.videos.push_back({"v0", {{0, 4, 1}, {6, 9.5, 0}}, TimeUnit::kSnippet, std::nullopt});
    gt.videos.push_back({"v1", {{0.5, 2.0, 1}}, TimeUnit::kSeconds, 0.64});
    save_ground_truth(gt, dir / "gt.jsonl");
    CHECK(load_ground_truth(dir / "gt.jsonl", 2) == gt);
  }
  SUBCASE("start not before end") {
    write_text(dir / "gt.jsonl", R"({"video_id":"v0","segments":[{"start":3,"end":3,"label":0}],"unit":"snippet"})");
    CHECK_THROWS_AS(load_ground_truth(dir / "gt.jsonl"), ValidationError);
  }
  SUBCASE("label out of range") {
    write_text(dir / "gt.jsonl", R"({"video_id":"v0","segments":[{"start":0,"end":3,"label":5}],"unit":"snippet"})");
    CHECK_THROWS_AS(load_ground_truth(dir / "gt.jsonl", 2), ValidationError);
  }
  SUBCASE("malformed line reports its number") {
    write_text(dir / "gt.jsonl",
               "{\"video_id\":\"v0\",\"segments\":[],\"unit\":\"snippet\"}\n\n{\"video_id\": oops}\n");
    try {
      load_ground_truth(dir / "gt.jsonl");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
  }
  SUBCASE("missing key") {
    write_text(dir / "gt.jsonl", R"({"video_id":"v0","unit":"snippet"})");
    CHECK_THROWS_AS(load_ground_truth(dir / "gt.jsonl"), ParseError);
  }
  SUBCASE("seconds without a conversion factor") {
    write_text(dir / "gt.jsonl", R"({"video_id":"v0","segments":[{"start":0,"end":1,"label":0}],"unit":"seconds"})");
    CHECK_THROWS_AS(load_ground_truth(dir / "gt.jsonl"), ValidationError);
  }
}

TEST_CASE("seconds convert to snippet units") {
  VideoAnnotation a{"v", {{1.28, 2.56, 0}}, TimeUnit::kSeconds, 0.64};
  const auto s = a.segments_in_snippets();
  CHECK(s[0].start == doctest::Approx(2.0));
  CHECK(s[0].end == doctest::Approx(4.0));
}

TEST_CASE("ground truth validated against video extents") {
  const Dataset d = small_dataset();
  GroundTruth gt;
  gt.videos.push_back({"v0", {{0, 2, 1}}, TimeUnit::kSnippet, std::nullopt});
  CHECK_NOTHROW(validate_ground_truth(gt, d));
  gt.videos[0].segments[0].end = 3;
  CHECK_THROWS_AS(validate_ground_truth(gt, d), ValidationError);
  gt.videos[0].segments[0].end = 2;
  gt.videos[0].video_id = "unknown";
  CHECK_THROWS_AS(validate_ground_truth(gt, d), ValidationError);
}

TEST_CASE("video level labels take the dominant class") {
  Dataset d = small_dataset();
  d.videos[0].features = RealMatrix(10, 3);
  GroundTruth gt;
  gt.videos.push_back({"v0", {{0, 2, 0}, {3, 7, 1}}, TimeUnit::kSnippet, std::nullopt});
  CHECK(video_level_labels(gt, d) == std::vector<int>{1, -1});
}

TEST_CASE("synthetic data with zero noise places actions on class centers") {
  SynthConfig cfg;
  cfg.num_classes = 3;
  cfg.videos_per_class = 4;
  cfg.snippets = 50;
  cfg.feature_dim = 8;
  cfg.within_class_noise = 0.0;
  cfg.background_noise = 0.0;
  const auto s = generate_synthetic(cfg);
  const auto truth = video_level_labels(s.ground_truth, s.dataset);
  for (std::size_t n = 0; n < s.dataset.size(); ++n) {
    const auto& ann = *s.ground_truth.find(s.dataset.videos[n].video_id);
    std::vector<bool> action(cfg.snippets, false);
    for (const auto& seg : ann.segments) {
      CHECK(seg.label == truth[n]);
      for (auto t = static_cast<std::size_t>(seg.start); t < static_cast<std::size_t>(seg.end); ++t) {
        action[t] = true;
        for (std::size_t j = 0; j < cfg.feature_dim; ++j)
          CHECK(s.dataset.videos[n].features(t, j) == s.class_centers(static_cast<std::size_t>(seg.label), j));
      }
    }
    for (std::size_t t = 0; t < cfg.snippets; ++t)
      if (!action[t])
        for (std::size_t j = 0; j < cfg.feature_dim; ++j)
          CHECK(s.dataset.videos[n].features(t, j) == s.background_center[j]);
  }
}

TEST_CASE("synthetic data is deterministic and respects config") {
  SynthConfig cfg;
  cfg.num_classes = 4;
  cfg.videos_per_class = 5;
  const auto a = generate_synthetic(cfg), b = generate_synthetic(cfg);
  CHECK(a.dataset.videos.size() == 20);
  for (std::size_t n = 0; n < 20; ++n) CHECK(a.dataset.videos[n].features == b.dataset.videos[n].features);
  CHECK(a.ground_truth == b.ground_truth);
  CHECK_NOTHROW(validate_ground_truth(a.ground_truth, a.dataset));
  cfg.seed = 1;
  CHECK(generate_synthetic(cfg).dataset.videos[0].features != a.dataset.videos[0].features);

  std::vector<int> per_class(4, 0);
  for (int t : video_level_labels(a.ground_truth, a.dataset)) ++per_class[static_cast<std::size_t>(t)];
  CHECK(per_class == std::vector<int>{5, 5, 5, 5});
  for (const auto& v : a.ground_truth.videos) {
    CHECK(v.segments.size() >= cfg.actions_min);
    CHECK(v.segments.size() <= cfg.actions_max);
    for (const auto& s : v.segments) {
      CHECK(s.end - s.start >= static_cast<double>(cfg.length_min));
      CHECK(s.end - s.start <= static_cast<double>(cfg.length_max));
    }
  }
}

TEST_CASE("synthetic config rejects infeasible layouts") {
  SynthConfig cfg;
  cfg.snippets = 10;
  cfg.length_max = 8;
  cfg.actions_max = 2;
  CHECK_THROWS_AS(generate_synthetic(cfg), InvalidArgument);
  cfg = SynthConfig{};
  cfg.separation = 0.0;
  CHECK_THROWS_AS(generate_synthetic(cfg), InvalidArgument);
}

TEST_CASE("unbalanced synthetic labels are uniform") {
  SynthConfig cfg;
  cfg.num_classes = 5;
  cfg.videos_per_class = 200;
  cfg.balanced = false;
  cfg.snippets = 20;
  cfg.feature_dim = 2;
  cfg.length_min = 2;
  cfg.length_max = 5;
  const auto s = generate_synthetic(cfg);
  std::vector<double> counts(5, 0.0);
  for (int t : video_level_labels(s.ground_truth, s.dataset)) counts[static_cast<std::size_t>(t)] += 1.0;
  double chi = 0.0;
  for (double c : counts) chi += (c - 200.0) * (c - 200.0) / 200.0;
  boost::math::chi_squared dist(4);
  CHECK(boost::math::cdf(boost::math::complement(dist, chi)) > 0.01);
}

TEST_CASE("well separated synthetic classes are recovered by clustering") {
  SynthConfig cfg;
  cfg.num_classes = 5;
  cfg.videos_per_class = 20;
  cfg.separation = 10.0;
  cfg.within_class_noise = 1.0;
  cfg.background_noise = 1.0;
  const auto s = generate_synthetic(cfg);
  // Mean-pool the annotated action snippets of each video.
  GlobalFeatureTable table{RealMatrix(s.dataset.size(), cfg.feature_dim), 0};
  for (std::size_t n = 0; n < s.dataset.size(); ++n) {
    const auto& ann = *s.ground_truth.find(s.dataset.videos[n].video_id);
    double count = 0.0;
    for (const auto& seg : ann.segments)
      for (auto t = static_cast<std::size_t>(seg.start); t < static_cast<std::size_t>(seg.end); ++t, count += 1.0)
        for (std::size_t j = 0; j < cfg.feature_dim; ++j) table.features(n, j) += s.dataset.videos[n].features(t, j);
    for (std::size_t j = 0; j < cfg.feature_dim; ++j) table.features(n, j) /= count;
  }
  SeededRng rng(0);
  const auto state = kmeans(table, 5, rng);
  const auto truth = video_level_labels(s.ground_truth, s.dataset);
  std::vector<int> pred(state.assignments.begin(), state.assignments.end());
  CHECK(nmi(pred, truth) > 0.95);
}
