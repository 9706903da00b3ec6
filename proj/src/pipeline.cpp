#include "feel/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "feel/cci.hpp"
#include "feel/clustering.hpp"
#include "feel/curriculum.hpp"
#include "feel/log.hpp"

namespace feel {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Kuhn-Munkres on a square cost matrix; returns the column assigned to each row.
std::vector<std::size_t> hungarian(const std::vector<std::vector<double>>& cost) {
  const std::size_t n = cost.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_to_col(n, 0);
  for (std::size_t j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

void permute_rows(RealMatrix& m, const std::vector<std::size_t>& perm) {
  RealMatrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    std::copy(m.row(r).begin(), m.row(r).end(), out.row(perm[r]).begin());
  m = std::move(out);
}

void relabel(ClusterState& state, const std::vector<std::size_t>& perm) {
  permute_rows(state.centers, perm);
  permute_rows(state.confidence, perm);
  std::vector<std::vector<std::size_t>> rankings(state.rankings.size());
  for (std::size_t k = 0; k < perm.size(); ++k) rankings[perm[k]] = std::move(state.rankings[k]);
  state.rankings = std::move(rankings);
  for (auto& a : state.assignments) a = perm[a];
}

struct Diagnostics {
  double accuracy_selected = kNaN;
  double accuracy_full = kNaN;
  double nmi_selected = kNaN;
  double nmi_full = kNaN;
};

Diagnostics label_diagnostics(const std::vector<std::size_t>& labels, const std::vector<SelectedVideo>& selected,
                              const std::vector<int>& truth, const std::vector<int>& mapping) {
  Diagnostics d;
  std::vector<int> pred_all, truth_all, pred_sel, truth_sel;
  std::size_t hits_all = 0, hits_sel = 0;
  for (std::size_t n = 0; n < labels.size(); ++n) {
    if (truth[n] < 0) continue;
    pred_all.push_back(static_cast<int>(labels[n]));
    truth_all.push_back(truth[n]);
    hits_all += mapping[labels[n]] == truth[n];
  }
  for (const auto& s : selected) {
    if (truth[s.video] < 0) continue;
    pred_sel.push_back(static_cast<int>(s.label));
    truth_sel.push_back(truth[s.video]);
    hits_sel += mapping[s.label] == truth[s.video];
  }
  if (!pred_all.empty()) {
    d.accuracy_full = static_cast<double>(hits_all) / static_cast<double>(pred_all.size());
    d.nmi_full = nmi(pred_all, truth_all);
  }
  if (!pred_sel.empty()) {
    d.accuracy_selected = static_cast<double>(hits_sel) / static_cast<double>(pred_sel.size());
    d.nmi_selected = nmi(pred_sel, truth_sel);
  }
  return d;
}

std::vector<Proposal> infer_proposals(const Dataset& dataset, const LocalizerParams& params,
                                      const PipelineConfig& cfg, const std::vector<int>* mapping) {
  std::vector<Proposal> all;
  for (const auto& video : dataset.videos) {
    const ActivationMaps maps = forward(video.features, params, cfg.localizer);
    auto kept = nms(generate_proposals(maps, video.video_id, cfg.proposals), cfg.proposals.nms_threshold);
    for (auto& p : kept) {
      if (mapping) p.label = (*mapping)[static_cast<std::size_t>(p.label)];
      all.push_back(std::move(p));
    }
  }
  return all;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string num(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void dump_clusters(const std::filesystem::path& path, const Dataset& dataset, const ClusterState* state,
                   const RealMatrix* refined, const std::vector<std::size_t>& labels,
                   const std::vector<SelectedVideo>& selected) {
  std::vector<bool> chosen(labels.size(), false);
  for (const auto& s : selected) chosen[s.video] = true;
  std::ostringstream out;
  out << "video_id,kmeans_cluster,pseudo_label,euclidean_to_label,refined_to_label,selected\n";
  for (std::size_t n = 0; n < labels.size(); ++n) {
    out << csv_escape(dataset.videos[n].video_id) << ',';
    out << (state ? std::to_string(state->assignments[n]) : std::string()) << ',' << labels[n] << ',';
    out << (state ? num(state->confidence(labels[n], n)) : std::string()) << ',';
    out << (refined ? num((*refined)(labels[n], n)) : std::string()) << ',' << (chosen[n] ? 1 : 0) << '\n';
  }
  write_file_atomic(path, out.str());
}

}  // namespace

std::vector<std::size_t> best_label_permutation(const std::vector<std::size_t>& previous,
                                                const std::vector<std::size_t>& current,
                                                std::size_t num_clusters) {
  if (previous.size() != current.size()) throw InvalidArgument("label vectors differ in length");
  std::vector<std::vector<double>> cost(num_clusters, std::vector<double>(num_clusters, 0.0));
  for (std::size_t n = 0; n < current.size(); ++n) {
    if (current[n] >= num_clusters || previous[n] >= num_clusters)
      throw InvalidArgument("label out of range");
    cost[current[n]][previous[n]] -= 1.0;
  }
  return hungarian(cost);
}

LoadedData load_data(const PipelineConfig& cfg) {
  LoadedData data;
  if (cfg.synthetic) {
    auto synth = generate_synthetic(cfg.synth);
    data.dataset = std::move(synth.dataset);
    data.ground_truth = std::move(synth.ground_truth);
    return data;
  }
  if (!cfg.features_path.empty()) {
    data.dataset = load_features(cfg.features_path, cfg.num_classes);
  } else {
    data.dataset = concat_datasets(load_features(cfg.rgb_path, cfg.num_classes),
                                   load_features(cfg.flow_path, cfg.num_classes));
  }
  if (!cfg.ground_truth_path.empty()) {
    data.ground_truth = load_ground_truth(cfg.ground_truth_path, cfg.num_classes);
    validate_ground_truth(*data.ground_truth, data.dataset);
  }
  return data;
}

PipelineResult run_pipeline(const PipelineConfig& cfg) { return run_pipeline(cfg, load_data(cfg)); }

PipelineResult run_pipeline(const PipelineConfig& cfg, const LoadedData& data) {
  PipelineResult result;
  result.config = cfg;
  PipelineConfig& c = result.config;
  c.validate();
  const Dataset& dataset = data.dataset;
  dataset.validate();
  c.num_classes = dataset.num_classes;
  if (c.synthetic) c.synth.num_classes = dataset.num_classes;
  const std::size_t classes = dataset.num_classes;
  const std::size_t count = dataset.size();
  if (classes > count) throw InvalidArgument("more clusters than videos");

  const bool annotated = data.ground_truth.has_value();
  const std::vector<int> truth = annotated ? video_level_labels(*data.ground_truth, dataset) : std::vector<int>();
  const std::filesystem::path out_dir = c.output_dir;
  const bool can_dump = !out_dir.empty();
  if (can_dump && (c.dump_clusters || c.export_maps || c.save_checkpoints))
    std::filesystem::create_directories(out_dir);

  SeededRng root(c.seed);
  SeededRng init_rng = root.substream(0, "localizer-init");
  LocalizerParams params = LocalizerParams::glorot(dataset.feature_dim(), classes, init_rng);
  AdamState adam = AdamState::fresh(params.parameter_count(), c.learning_rate);

  std::vector<std::vector<double>> attention(count);
  for (std::size_t n = 0; n < count; ++n) attention[n] = uniform_attention(dataset.videos[n].features.rows());

  std::size_t snippet_k = c.snippetwise_top_k;
  if (snippet_k == 0) {
    std::size_t min_t = dataset.videos.front().features.rows();
    for (const auto& v : dataset.videos) min_t = std::min(min_t, v.features.rows());
    snippet_k = std::max<std::size_t>(1, min_t / 8);
  }

  std::vector<std::size_t> previous;
  const std::size_t iterations = c.effective_iterations();
  SelectionSchedule schedule = c.schedule;
  schedule.max_iterations = iterations;

  for (std::size_t i = 1; i <= iterations; ++i) {
    try {
      const auto started = std::chrono::steady_clock::now();
      IterationRecord rec;
      rec.iteration = i;
      rec.precision_initial = rec.precision_refined = kNaN;

      std::vector<std::size_t> labels;
      FilteredRanking filtered;
      std::optional<ClusterState> state;
      std::optional<RealMatrix> refined;
      if (c.ablation.snippetwise) {
        SeededRng rng = root.substream(i, "snippet-clustering");
        labels = snippetwise_pseudolabels(dataset, attention, snippet_k, classes, rng);
        if (c.align_clusters && !previous.empty()) {
          const auto perm = best_label_permutation(previous, labels, classes);
          for (auto& l : labels) l = perm[l];
        }
        filtered.lists.assign(classes, {});
        for (std::size_t n = 0; n < count; ++n) filtered.lists[labels[n]].push_back(n);
      } else {
        const GlobalFeatureTable table = aggregate_dataset(dataset, attention, i - 1);
        SeededRng rng = root.substream(i, "kmeans");
        state = kmeans(table, classes, rng, c.kmeans);
        if (c.align_clusters && !previous.empty())
          relabel(*state, best_label_permutation(previous, state->assignments, classes));
        const std::vector<std::vector<std::size_t>>* rankings = &state->rankings;
        RefinedRanking cci;
        if (c.cci_enabled()) {
          const EntityUniverse universe(state->centers, table.features);
          cci = refined_distance_matrix(universe, c.cci);
          refined = cci.refined;
          rankings = &cci.rankings;
          labels = assign_pseudolabels(cci.refined).labels;
        } else {
          labels = assign_pseudolabels(state->confidence).labels;
        }
        filtered = filtered_rankings(*rankings, labels);
        if (annotated) {
          const auto center_class = map_clusters_to_labels(state->assignments, truth, classes);
          rec.precision_initial = ranking_precision(state->rankings, center_class, truth, c.precision_depth);
          rec.precision_refined = ranking_precision(*rankings, center_class, truth, c.precision_depth);
        }
      }

      rec.rate = c.iis_enabled() ? selection_rate(i, schedule) : 1.0;
      const SelectionRound round = select_instances(filtered, rec.rate, i);
      rec.selected = round.selected.size();
      rec.per_cluster = round.per_cluster;
      if (i == 1 && rec.selected < classes)
        log::warn("first-round selection holds " + std::to_string(rec.selected) + " videos, fewer than K = " +
                  std::to_string(classes) + "; raise the selection rate or lower the iteration count");

      if (c.reinit_each_iteration && i > 1) {
        SeededRng reinit = root.substream(i, "localizer-init");
        params = LocalizerParams::glorot(dataset.feature_dim(), classes, reinit);
        adam = AdamState::fresh(params.parameter_count(), c.learning_rate);
      }
      std::vector<TrainingExample> examples;
      examples.reserve(round.selected.size());
      for (const auto& s : round.selected) examples.push_back({s.video, s.label});
      rec.epochs = epochs_for_iteration(c.max_epochs, rec.selected, count);
      SeededRng train_rng = root.substream(i, "training");
      const TrainingTrace trace =
          train_iteration(dataset, examples, params, adam, rec.epochs, c.batch_size, c.localizer, train_rng);
      rec.loss_total = trace.epoch_total.empty() ? kNaN : trace.epoch_total.back();
      rec.loss_classification = trace.epoch_classification.empty() ? kNaN : trace.epoch_classification.back();
      rec.loss_contrastive = trace.epoch_contrastive.empty() ? kNaN : trace.epoch_contrastive.back();

      attention = attention_maps(dataset, params, c.localizer);

      rec.selection_accuracy = rec.full_accuracy = rec.nmi_selected = rec.nmi_full = kNaN;
      rec.average_map = kNaN;
      EvalReport eval;
      eval.iteration = i;
      eval.pseudo_labels = labels;
      eval.nmi = kNaN;
      std::vector<Proposal> proposals;
      if (annotated) {
        const auto mapping = map_clusters_to_labels(labels, truth, classes);
        const Diagnostics d = label_diagnostics(labels, round.selected, truth, mapping);
        rec.selection_accuracy = d.accuracy_selected;
        rec.full_accuracy = d.accuracy_full;
        rec.nmi_selected = d.nmi_selected;
        rec.nmi_full = d.nmi_full;
        proposals = infer_proposals(dataset, params, c, &mapping);
        eval.has_ground_truth = true;
        eval.map = mean_average_precision(proposals, *data.ground_truth, c.iou_thresholds);
        eval.nmi = d.nmi_full;
        eval.cluster_to_class = mapping;
        rec.map = eval.map.map;
        rec.average_map = eval.map.average;
      } else if (i == iterations) {
        proposals = infer_proposals(dataset, params, c, nullptr);
      }

      if (can_dump && c.dump_clusters)
        dump_clusters(out_dir / ("clusters_iter" + std::to_string(i) + ".csv"), dataset,
                      state ? &*state : nullptr, refined ? &*refined : nullptr, labels, round.selected);
      if (can_dump && c.save_checkpoints)
        save_checkpoint({params, adam, static_cast<std::uint32_t>(i)},
                        out_dir / ("checkpoint_iter" + std::to_string(i) + ".bin"));

      previous = labels;
      rec.duration_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
      result.records.push_back(std::move(rec));
      if (i == iterations) {
        result.final_eval = std::move(eval);
        result.proposals = std::move(proposals);
      }
    } catch (const IterationError&) {
      throw;
    } catch (const Error& e) {
      throw IterationError(e.kind(), i, "iteration " + std::to_string(i) + ": " + e.what());
    }
  }

  if (can_dump && c.export_maps) {
    const auto dir = out_dir / "maps";
    std::filesystem::create_directories(dir);
    for (const auto& video : dataset.videos)
      write_attention_csv(forward(video.features, params, c.localizer), dir / (video.video_id + ".csv"));
  }
  result.params = std::move(params);
  return result;
}

}  // namespace feel
