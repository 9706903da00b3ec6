#include "feel/config.hpp"

#include <fstream>
#include <set>

#include "feel/error.hpp"

namespace feel {

ProposalConfig PipelineConfig::default_proposals() {
  ProposalConfig p;
  p.class_threshold = 0.1;
  p.activation_thresholds = threshold_grid(0.0, 0.15, 0.015);
  p.nms_threshold = 0.7;
  p.margin_fraction = 0.25;
  return p;
}

std::size_t PipelineConfig::effective_iterations() const {
  return ablation.cola_utal ? 1 : schedule.max_iterations;
}

bool PipelineConfig::cci_enabled() const {
  return !(ablation.disable_cci || ablation.cola_utal || ablation.snippetwise);
}

bool PipelineConfig::iis_enabled() const {
  return !(ablation.disable_iis || ablation.cola_utal || ablation.snippetwise);
}

void PipelineConfig::validate() const {
  schedule.validate();
  if (!synthetic && features_path.empty() && (rgb_path.empty() || flow_path.empty()))
    throw InvalidArgument("no input: give features, rgb+flow, or synthetic");
  if (synthetic) synth.validate();
  if ((synthetic ? synth.num_classes : num_classes) < 2) throw InvalidArgument("need K >= 2");
  if (!(cci.gamma >= 0.0 && cci.gamma <= 1.0)) throw InvalidArgument("gamma must lie in [0, 1]");
  if (cci.l < 1) throw InvalidArgument("l must be >= 1");
  if (batch_size < 1) throw InvalidArgument("batch size must be >= 1");
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning rate must be positive");
  if (localizer.loss.lambda < 0.0) throw InvalidArgument("lambda must be >= 0");
  if (!(localizer.loss.temperature > 0.0)) throw InvalidArgument("temperature must be positive");
  if (proposals.activation_thresholds.empty()) throw InvalidArgument("empty activation threshold grid");
  if (iou_thresholds.empty()) throw InvalidArgument("empty IoU grid");
  if (ablation.snippetwise && (ablation.cola_utal))
    throw InvalidArgument("snippet-wise and CoLA-UTAL modes are exclusive");
}

namespace {

std::string mode_name(ScheduleMode m) { return m == ScheduleMode::kConstant ? "constant" : "variable"; }

ScheduleMode parse_mode(const std::string& s) {
  if (s == "constant") return ScheduleMode::kConstant;
  if (s == "variable") return ScheduleMode::kVariable;
  throw InvalidArgument("unknown selection mode '" + s + "'");
}

std::string scale_name(DistanceScale s) { return s == DistanceScale::kNone ? "none" : "max"; }

DistanceScale parse_scale(const std::string& s) {
  if (s == "none") return DistanceScale::kNone;
  if (s == "max") return DistanceScale::kMaxDistance;
  throw InvalidArgument("unknown distance scale '" + s + "'");
}

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> keys, const char* where) {
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw InvalidArgument(std::string("unknown config key '") + key + "' in " + where);
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void to_json(nlohmann::json& j, const PipelineConfig& c) {
  j = nlohmann::json{
      {"features", c.features_path},
      {"rgb", c.rgb_path},
      {"flow", c.flow_path},
      {"ground_truth", c.ground_truth_path},
      {"synthetic", c.synthetic},
      {"synth",
       {{"num_classes", c.synth.num_classes},
        {"videos_per_class", c.synth.videos_per_class},
        {"snippets", c.synth.snippets},
        {"feature_dim", c.synth.feature_dim},
        {"separation", c.synth.separation},
        {"within_class_noise", c.synth.within_class_noise},
        {"background_noise", c.synth.background_noise},
        {"video_spread", c.synth.video_spread},
        {"scene_scale", c.synth.scene_scale},
        {"actions_min", c.synth.actions_min},
        {"actions_max", c.synth.actions_max},
        {"length_min", c.synth.length_min},
        {"length_max", c.synth.length_max},
        {"balanced", c.synth.balanced},
        {"seed", c.synth.seed}}},
      {"num_classes", c.num_classes},
      {"mode", mode_name(c.schedule.mode)},
      {"imax", c.schedule.max_iterations},
      {"mu", c.schedule.mu},
      {"gamma", c.cci.gamma},
      {"l", c.cci.l},
      {"l_expansion", c.cci.l_expansion},
      {"distance_scale", scale_name(c.cci.scale)},
      {"kmeans_max_sweeps", c.kmeans.max_sweeps},
      {"kmeans_local_trials", c.kmeans.local_trials},
      {"mining",
       {{"actionness_threshold", c.localizer.mining.actionness_threshold},
        {"easy_count", c.localizer.mining.easy_count},
        {"hard_count", c.localizer.mining.hard_count},
        {"negative_count", c.localizer.mining.negative_count},
        {"erosion_margin", c.localizer.mining.erosion_margin},
        {"dilation_margin", c.localizer.mining.dilation_margin},
        {"normalize_attention", c.localizer.mining.normalize_attention}}},
      {"loss",
       {{"lambda", c.localizer.loss.lambda},
        {"temperature", c.localizer.loss.temperature},
        {"top_k", c.localizer.loss.top_k},
        {"normalize_features", c.localizer.loss.normalize_features}}},
      {"max_epochs", c.max_epochs},
      {"batch_size", c.batch_size},
      {"learning_rate", c.learning_rate},
      {"reinit_each_iteration", c.reinit_each_iteration},
      {"align_clusters", c.align_clusters},
      {"snippetwise_top_k", c.snippetwise_top_k},
      {"class_threshold", c.proposals.class_threshold},
      {"activation_thresholds", c.proposals.activation_thresholds},
      {"nms_threshold", c.proposals.nms_threshold},
      {"proposal_margin", c.proposals.margin_fraction},
      {"iou_thresholds", c.iou_thresholds},
      {"precision_depth", c.precision_depth},
      {"ablation",
       {{"disable_cci", c.ablation.disable_cci},
        {"disable_iis", c.ablation.disable_iis},
        {"snippetwise", c.ablation.snippetwise},
        {"cola_utal", c.ablation.cola_utal}}},
      {"seed", c.seed},
      {"out", c.output_dir},
      {"overwrite", c.overwrite},
      {"dump_clusters", c.dump_clusters},
      {"export_maps", c.export_maps},
      {"save_checkpoints", c.save_checkpoints},
  };
}

void from_json(const nlohmann::json& j, PipelineConfig& c) {
  try {
    reject_unknown(j,
                   {"features", "rgb", "flow", "ground_truth", "synthetic", "synth", "num_classes", "mode",
                    "imax", "mu", "gamma", "l", "l_expansion", "distance_scale", "kmeans_max_sweeps",
                    "kmeans_local_trials", "mining", "loss", "max_epochs", "batch_size", "learning_rate", "reinit_each_iteration",
                    "align_clusters", "snippetwise_top_k", "class_threshold", "activation_thresholds",
                    "nms_threshold", "proposal_margin", "iou_thresholds", "precision_depth", "ablation",
                    "seed", "out", "overwrite", "dump_clusters", "export_maps", "save_checkpoints"},
                   "config");
    read(j, "features", c.features_path);
    read(j, "rgb", c.rgb_path);
    read(j, "flow", c.flow_path);
    read(j, "ground_truth", c.ground_truth_path);
    read(j, "synthetic", c.synthetic);
    if (j.contains("synth")) {
      const auto& s = j.at("synth");
      reject_unknown(s,
                     {"num_classes", "videos_per_class", "snippets", "feature_dim", "separation",
                      "within_class_noise", "background_noise", "video_spread", "scene_scale", "actions_min",
                      "actions_max", "length_min", "length_max", "balanced", "seed"},
                     "synth");
      read(s, "num_classes", c.synth.num_classes);
      read(s, "videos_per_class", c.synth.videos_per_class);
      read(s, "snippets", c.synth.snippets);
      read(s, "feature_dim", c.synth.feature_dim);
      read(s, "separation", c.synth.separation);
      read(s, "within_class_noise", c.synth.within_class_noise);
      read(s, "background_noise", c.synth.background_noise);
      read(s, "video_spread", c.synth.video_spread);
      read(s, "scene_scale", c.synth.scene_scale);
      read(s, "actions_min", c.synth.actions_min);
      read(s, "actions_max", c.synth.actions_max);
      read(s, "length_min", c.synth.length_min);
      read(s, "length_max", c.synth.length_max);
      read(s, "balanced", c.synth.balanced);
      read(s, "seed", c.synth.seed);
    }
    read(j, "num_classes", c.num_classes);
    if (j.contains("mode")) c.schedule.mode = parse_mode(j.at("mode").get<std::string>());
    read(j, "imax", c.schedule.max_iterations);
    read(j, "mu", c.schedule.mu);
    read(j, "gamma", c.cci.gamma);
    read(j, "l", c.cci.l);
    read(j, "l_expansion", c.cci.l_expansion);
    if (j.contains("distance_scale")) c.cci.scale = parse_scale(j.at("distance_scale").get<std::string>());
    read(j, "kmeans_max_sweeps", c.kmeans.max_sweeps);
    read(j, "kmeans_local_trials", c.kmeans.local_trials);
    if (j.contains("mining")) {
      const auto& m = j.at("mining");
      reject_unknown(m,
                     {"actionness_threshold", "easy_count", "hard_count", "negative_count", "erosion_margin",
                      "dilation_margin", "normalize_attention"},
                     "mining");
      read(m, "actionness_threshold", c.localizer.mining.actionness_threshold);
      read(m, "easy_count", c.localizer.mining.easy_count);
      read(m, "hard_count", c.localizer.mining.hard_count);
      read(m, "negative_count", c.localizer.mining.negative_count);
      read(m, "erosion_margin", c.localizer.mining.erosion_margin);
      read(m, "dilation_margin", c.localizer.mining.dilation_margin);
      read(m, "normalize_attention", c.localizer.mining.normalize_attention);
    }
    if (j.contains("loss")) {
      const auto& l = j.at("loss");
      reject_unknown(l, {"lambda", "temperature", "top_k", "normalize_features"}, "loss");
      read(l, "lambda", c.localizer.loss.lambda);
      read(l, "temperature", c.localizer.loss.temperature);
      read(l, "top_k", c.localizer.loss.top_k);
      read(l, "normalize_features", c.localizer.loss.normalize_features);
    }
    read(j, "max_epochs", c.max_epochs);
    read(j, "batch_size", c.batch_size);
    read(j, "learning_rate", c.learning_rate);
    read(j, "reinit_each_iteration", c.reinit_each_iteration);
    read(j, "align_clusters", c.align_clusters);
    read(j, "snippetwise_top_k", c.snippetwise_top_k);
    read(j, "class_threshold", c.proposals.class_threshold);
    read(j, "activation_thresholds", c.proposals.activation_thresholds);
    read(j, "nms_threshold", c.proposals.nms_threshold);
    read(j, "proposal_margin", c.proposals.margin_fraction);
    read(j, "iou_thresholds", c.iou_thresholds);
    read(j, "precision_depth", c.precision_depth);
    if (j.contains("ablation")) {
      const auto& a = j.at("ablation");
      reject_unknown(a, {"disable_cci", "disable_iis", "snippetwise", "cola_utal"}, "ablation");
      read(a, "disable_cci", c.ablation.disable_cci);
      read(a, "disable_iis", c.ablation.disable_iis);
      read(a, "snippetwise", c.ablation.snippetwise);
      read(a, "cola_utal", c.ablation.cola_utal);
    }
    read(j, "seed", c.seed);
    read(j, "out", c.output_dir);
    read(j, "overwrite", c.overwrite);
    read(j, "dump_clusters", c.dump_clusters);
    read(j, "export_maps", c.export_maps);
    read(j, "save_checkpoints", c.save_checkpoints);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("bad config value: ") + e.what());
  }
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("config " + path.string() + ": " + e.what());
  }
  PipelineConfig cfg;
  from_json(j, cfg);
  return cfg;
}

}  // namespace feel
