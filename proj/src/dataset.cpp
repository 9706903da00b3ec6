#include "feel/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "feel/error.hpp"
#include "feel/rng.hpp"

namespace feel {
namespace {

constexpr char kMagic[5] = {'F', 'E', 'A', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

class ByteWriter {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void f32(float f) { u32(std::bit_cast<std::uint32_t>(f)); }
  const std::vector<char>& data() const { return buf_; }

 private:
  std::vector<char> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::vector<char> data) : data_(std::move(data)) {}

  void need(std::size_t n, const char* what) const {
    if (data_.size() - pos_ < n)
      throw CorruptFileError(std::string("truncated FEAT1 payload while reading ") + what);
  }
  std::string bytes(std::size_t n, const char* what) {
    need(n, what);
    std::string s(data_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  std::uint16_t u16(const char* what) {
    need(2, what);
    std::uint16_t v = 0;
    for (int i = 0; i < 2; ++i)
      v |= static_cast<std::uint16_t>(static_cast<unsigned char>(data_[pos_ + i]) << (8 * i));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  std::vector<char> data_;
  std::size_t pos_ = 0;
};

std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

std::size_t Dataset::feature_dim() const {
  return videos.empty() ? 0 : videos.front().feature_dim();
}

void Dataset::validate() const {
  if (videos.empty()) throw ValidationError("dataset has no videos");
  if (num_classes < 2) throw ValidationError("dataset needs at least 2 classes");
  const std::size_t dim = feature_dim();
  if (dim == 0) throw ValidationError("feature dimension must be positive");
  std::set<std::string> seen;
  for (const auto& v : videos) {
    if (!seen.insert(v.video_id).second)
      throw ValidationError("duplicate video id '" + v.video_id + "'");
    if (v.snippet_count() < 1) throw ValidationError("video '" + v.video_id + "' has no snippets");
    if (v.feature_dim() != dim)
      throw ValidationError("video '" + v.video_id + "' has feature dim " +
                            std::to_string(v.feature_dim()) + ", expected " + std::to_string(dim));
    if (!v.features.all_finite())
      throw ValidationError("video '" + v.video_id + "' has non-finite features");
  }
}

void save_features(const Dataset& dataset, const std::filesystem::path& path) {
  ByteWriter w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(dataset.videos.size()));
  for (const auto& v : dataset.videos) {
    if (v.video_id.size() > UINT16_MAX) throw InvalidArgument("video id too long for FEAT1");
    w.u16(static_cast<std::uint16_t>(v.video_id.size()));
    w.bytes(v.video_id.data(), v.video_id.size());
    w.u32(static_cast<std::uint32_t>(v.snippet_count()));
    w.u32(static_cast<std::uint32_t>(v.feature_dim()));
    for (double x : v.features.values()) w.f32(static_cast<float>(x));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(w.data().data(), static_cast<std::streamsize>(w.data().size()));
  if (!out) throw IoError("write failed for " + path.string());
}

Dataset load_features(const std::filesystem::path& path, std::size_t num_classes) {
  ByteReader r(read_file(path));
  if (r.remaining() < sizeof kMagic) throw FormatError("not a FEAT1 file: " + path.string());
  if (r.bytes(sizeof kMagic, "magic") != std::string(kMagic, sizeof kMagic))
    throw FormatError("bad FEAT1 magic in " + path.string());
  const std::uint32_t version = r.u32("version");
  if (version != kVersion)
    throw FormatError("unsupported FEAT1 version " + std::to_string(version));
  const std::uint32_t count = r.u32("video count");

  Dataset ds;
  ds.num_classes = num_classes;
  for (std::uint32_t n = 0; n < count; ++n) {
    SnippetFeatureSet v;
    const std::uint16_t id_len = r.u16("id length");
    v.video_id = r.bytes(id_len, "video id");
    const std::uint32_t t = r.u32("snippet count");
    const std::uint32_t d = r.u32("feature dim");
    const std::size_t total = static_cast<std::size_t>(t) * d;
    r.need(total * 4, "feature payload");
    std::vector<double> data(total);
    for (auto& x : data) x = r.f32("feature");
    v.features = RealMatrix(t, d, std::move(data));
    ds.videos.push_back(std::move(v));
  }
  if (r.remaining() != 0)
    throw CorruptFileError(std::to_string(r.remaining()) + " trailing bytes after FEAT1 payload");
  ds.validate();
  return ds;
}

RealMatrix concat_streams(const RealMatrix& rgb, const RealMatrix& flow) {
  if (rgb.rows() != flow.rows() || rgb.cols() != flow.cols())
    throw InvalidArgument("concat_streams: rgb and flow shapes differ");
  const std::size_t d = rgb.cols();
  RealMatrix out(rgb.rows(), 2 * d);
  for (std::size_t t = 0; t < rgb.rows(); ++t) {
    auto dst = out.row(t);
    std::copy(rgb.row(t).begin(), rgb.row(t).end(), dst.begin());
    std::copy(flow.row(t).begin(), flow.row(t).end(), dst.begin() + static_cast<std::ptrdiff_t>(d));
  }
  return out;
}

Dataset concat_datasets(const Dataset& rgb, const Dataset& flow) {
  if (rgb.size() != flow.size()) throw InvalidArgument("rgb and flow video counts differ");
  Dataset out;
  out.num_classes = rgb.num_classes;
  for (std::size_t n = 0; n < rgb.size(); ++n) {
    if (rgb.videos[n].video_id != flow.videos[n].video_id)
      throw InvalidArgument("rgb/flow video id mismatch at position " + std::to_string(n));
    out.videos.push_back(
        {rgb.videos[n].video_id, concat_streams(rgb.videos[n].features, flow.videos[n].features)});
  }
  return out;
}

std::vector<Segment> VideoAnnotation::segments_in_snippets() const {
  if (unit == TimeUnit::kSnippet) return segments;
  if (!seconds_per_snippet || *seconds_per_snippet <= 0.0)
    throw ValidationError("video '" + video_id + "' uses seconds but has no seconds_per_snippet");
  std::vector<Segment> out = segments;
  for (auto& s : out) {
    s.start /= *seconds_per_snippet;
    s.end /= *seconds_per_snippet;
  }
  return out;
}

const VideoAnnotation* GroundTruth::find(const std::string& video_id) const {
  for (const auto& v : videos)
    if (v.video_id == video_id) return &v;
  return nullptr;
}

GroundTruth load_ground_truth(const std::filesystem::path& path,
                              std::optional<std::size_t> num_classes) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  GroundTruth gt;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    VideoAnnotation ann;
    try {
      const auto j = nlohmann::json::parse(line);
      ann.video_id = j.at("video_id").get<std::string>();
      const std::string unit = j.value("unit", std::string("snippet"));
      if (unit == "snippet") {
        ann.unit = TimeUnit::kSnippet;
      } else if (unit == "seconds") {
        ann.unit = TimeUnit::kSeconds;
      } else {
        throw ParseError("unknown unit '" + unit + "'", line_no);
      }
      if (j.contains("seconds_per_snippet"))
        ann.seconds_per_snippet = j.at("seconds_per_snippet").get<double>();
      for (const auto& s : j.at("segments")) {
        ann.segments.push_back(
            {s.at("start").get<double>(), s.at("end").get<double>(), s.at("label").get<int>()});
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(e.what(), line_no);
    }
    for (const auto& s : ann.segments) {
      if (!(s.start < s.end))
        throw ValidationError("line " + std::to_string(line_no) + ": segment start >= end");
      if (s.label < 0 || (num_classes && static_cast<std::size_t>(s.label) >= *num_classes))
        throw ValidationError("line " + std::to_string(line_no) + ": label " +
                              std::to_string(s.label) + " out of range");
    }
    if (ann.unit == TimeUnit::kSeconds && !ann.seconds_per_snippet)
      throw ValidationError("line " + std::to_string(line_no) +
                            ": unit 'seconds' requires seconds_per_snippet");
    if (!seen.insert(ann.video_id).second)
      throw ValidationError("line " + std::to_string(line_no) + ": duplicate video id '" +
                            ann.video_id + "'");
    gt.videos.push_back(std::move(ann));
  }
  return gt;
}

void save_ground_truth(const GroundTruth& gt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& v : gt.videos) {
    nlohmann::json j;
    j["video_id"] = v.video_id;
    j["unit"] = v.unit == TimeUnit::kSnippet ? "snippet" : "seconds";
    if (v.seconds_per_snippet) j["seconds_per_snippet"] = *v.seconds_per_snippet;
    j["segments"] = nlohmann::json::array();
    for (const auto& s : v.segments)
      j["segments"].push_back({{"start", s.start}, {"end", s.end}, {"label", s.label}});
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

void validate_ground_truth(const GroundTruth& gt, const Dataset& dataset) {
  std::map<std::string, std::size_t> lengths;
  for (const auto& v : dataset.videos) lengths[v.video_id] = v.snippet_count();
  for (const auto& ann : gt.videos) {
    auto it = lengths.find(ann.video_id);
    if (it == lengths.end())
      throw ValidationError("ground truth names unknown video '" + ann.video_id + "'");
    for (const auto& s : ann.segments_in_snippets()) {
      if (s.start < 0.0 || s.end > static_cast<double>(it->second) + 1e-9)
        throw ValidationError("segment outside video extent in '" + ann.video_id + "'");
      if (static_cast<std::size_t>(s.label) >= dataset.num_classes)
        throw ValidationError("label out of range in '" + ann.video_id + "'");
    }
  }
}

std::vector<int> video_level_labels(const GroundTruth& gt, const Dataset& dataset) {
  std::vector<int> labels(dataset.size(), -1);
  for (std::size_t n = 0; n < dataset.size(); ++n) {
    const auto* ann = gt.find(dataset.videos[n].video_id);
    if (!ann || ann->segments.empty()) continue;
    std::map<int, double> cover;
    for (const auto& s : ann->segments_in_snippets()) cover[s.label] += s.end - s.start;
    double best = -1.0;
    for (const auto& [label, amount] : cover) {
      if (amount > best) {
        best = amount;
        labels[n] = label;
      }
    }
  }
  return labels;
}

void SynthConfig::validate() const {
  if (num_classes < 2) throw InvalidArgument("synthetic data needs at least 2 classes");
  if (videos_per_class < 1) throw InvalidArgument("videos_per_class must be >= 1");
  if (snippets < 1 || feature_dim < 1) throw InvalidArgument("snippets and feature_dim must be >= 1");
  if (!(separation > 0.0)) throw InvalidArgument("separation must be positive");
  if (within_class_noise < 0 || background_noise < 0 || video_spread < 0 || scene_scale < 0)
    throw InvalidArgument("noise scales must be non-negative");
  if (actions_min < 1 || actions_min > actions_max)
    throw InvalidArgument("invalid actions-per-video range");
  if (length_min < 1 || length_min > length_max)
    throw InvalidArgument("invalid action length range");
  // Worst case: the most and longest actions, one background snippet between each.
  if (actions_max * length_max + (actions_max - 1) > snippets)
    throw InvalidArgument("action count/length ranges do not fit within " +
                          std::to_string(snippets) + " snippets");
}

namespace {

std::vector<double> random_direction(SeededRng& rng, std::size_t dim, double radius) {
  std::vector<double> v(dim);
  double norm = 0.0;
  while (norm == 0.0) {
    for (auto& x : v) x = rng.normal();
    norm = std::sqrt(dot(v, v));
  }
  for (auto& x : v) x *= radius / norm;
  return v;
}

}  // namespace

SyntheticData generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  SeededRng rng = SeededRng(cfg.seed).substream(0, "synthetic-dataset");
  const std::size_t K = cfg.num_classes, D = cfg.feature_dim, T = cfg.snippets;

  SyntheticData out;
  out.class_centers = RealMatrix(K, D);
  for (std::size_t k = 0; k < K; ++k) {
    auto c = random_direction(rng, D, cfg.separation);
    std::copy(c.begin(), c.end(), out.class_centers.row(k).begin());
  }
  out.background_center = random_direction(rng, D, cfg.separation);

  const std::size_t total = K * cfg.videos_per_class;
  std::vector<int> labels(total);
  if (cfg.balanced) {
    for (std::size_t n = 0; n < total; ++n) labels[n] = static_cast<int>(n % K);
    rng.shuffle(labels);
  } else {
    for (auto& l : labels) l = static_cast<int>(rng.index(K));
  }

  out.dataset.num_classes = K;
  for (std::size_t n = 0; n < total; ++n) {
    const int label = labels[n];
    const auto count = static_cast<std::size_t>(
        rng.integer(static_cast<std::int64_t>(cfg.actions_min), static_cast<std::int64_t>(cfg.actions_max)));
    std::vector<std::size_t> lengths(count);
    std::size_t used = 0;
    for (auto& len : lengths) {
      len = static_cast<std::size_t>(rng.integer(static_cast<std::int64_t>(cfg.length_min),
                                                 static_cast<std::int64_t>(cfg.length_max)));
      used += len;
    }
    // Distribute the free background snippets over count+1 gaps; inner gaps
    // keep one mandatory background snippet so segments never touch.
    const std::size_t slack = T - used - (count - 1);
    std::vector<std::size_t> cuts(count);
    for (auto& c : cuts) c = rng.index(slack + 1);
    std::sort(cuts.begin(), cuts.end());

    VideoAnnotation ann;
    ann.video_id = "video_" + std::to_string(n);
    std::vector<int> snippet_class(T, -1);
    std::size_t cursor = 0, prev_cut = 0;
    for (std::size_t a = 0; a < count; ++a) {
      cursor += cuts[a] - prev_cut + (a > 0 ? 1 : 0);
      prev_cut = cuts[a];
      ann.segments.push_back({static_cast<double>(cursor), static_cast<double>(cursor + lengths[a]), label});
      for (std::size_t t = cursor; t < cursor + lengths[a]; ++t) snippet_class[t] = label;
      cursor += lengths[a];
    }

    std::vector<double> action_offset(D), scene_offset(D);
    for (auto& x : action_offset) x = cfg.video_spread * rng.normal();
    for (auto& x : scene_offset) x = cfg.scene_scale * rng.normal();

    RealMatrix feats(T, D);
    for (std::size_t t = 0; t < T; ++t) {
      auto row = feats.row(t);
      if (snippet_class[t] >= 0) {
        auto center = out.class_centers.row(static_cast<std::size_t>(snippet_class[t]));
        for (std::size_t j = 0; j < D; ++j)
          row[j] = center[j] + action_offset[j] + cfg.within_class_noise * rng.normal();
      } else {
        for (std::size_t j = 0; j < D; ++j)
          row[j] = out.background_center[j] + scene_offset[j] + cfg.background_noise * rng.normal();
      }
    }
    out.dataset.videos.push_back({ann.video_id, std::move(feats)});
    out.ground_truth.videos.push_back(std::move(ann));
  }
  out.dataset.validate();
  return out;
}

}  // namespace feel
