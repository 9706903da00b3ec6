#include "feel/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include "feel/error.hpp"
#include "feel/log.hpp"

namespace feel {

std::vector<double> threshold_grid(double start, double stop, double step) {
  if (!(step > 0.0) || !(stop > start)) throw InvalidArgument("invalid threshold grid");
  const auto count = static_cast<std::size_t>(std::llround((stop - start) / step));
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = start + static_cast<double>(i) * step;
  return out;
}

double score_proposal(std::span<const double> activation, std::size_t start, std::size_t end,
                      double margin_fraction) {
  if (!(start < end) || end > activation.size()) throw InvalidArgument("invalid proposal segment");
  const std::size_t len = end - start;
  double inner = 0.0;
  for (std::size_t t = start; t < end; ++t) inner += activation[t];
  inner /= static_cast<double>(len);

  const auto margin = static_cast<std::size_t>(std::floor(margin_fraction * static_cast<double>(len)));
  const std::size_t left = start >= margin ? start - margin : 0;
  const std::size_t right = std::min(activation.size(), end + margin);
  double outer = 0.0;
  std::size_t outer_count = 0;
  for (std::size_t t = left; t < start; ++t, ++outer_count) outer += activation[t];
  for (std::size_t t = end; t < right; ++t, ++outer_count) outer += activation[t];
  if (outer_count > 0) outer /= static_cast<double>(outer_count);
  return inner - outer;
}

double temporal_iou(double a_start, double a_end, double b_start, double b_end) {
  const double inter = std::max(0.0, std::min(a_end, b_end) - std::max(a_start, b_start));
  const double uni = (a_end - a_start) + (b_end - b_start) - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

std::vector<std::pair<std::size_t, std::size_t>> runs_above(std::span<const double> values,
                                                            double threshold) {
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  std::size_t t = 0;
  while (t < values.size()) {
    if (!(values[t] > threshold)) {
      ++t;
      continue;
    }
    std::size_t s = t;
    while (t < values.size() && values[t] > threshold) ++t;
    runs.emplace_back(s, t);
  }
  return runs;
}

std::vector<Proposal> generate_proposals(const ActivationMaps& maps, const std::string& video_id,
                                         const ProposalConfig& cfg) {
  if (cfg.activation_thresholds.empty()) throw InvalidArgument("empty activation threshold grid");
  std::vector<Proposal> out;
  const RealMatrix& A = maps.class_activation;
  for (std::size_t k = 0; k < A.cols(); ++k) {
    if (!(maps.probabilities[k] > cfg.class_threshold)) continue;
    const auto raw = A.column(k);
    const auto [lo_it, hi_it] = std::minmax_element(raw.begin(), raw.end());
    const double lo = *lo_it, range = *hi_it - *lo_it;
    if (range <= 0.0) continue;
    std::vector<double> norm(raw.size());
    for (std::size_t t = 0; t < raw.size(); ++t) norm[t] = (raw[t] - lo) / range;
    for (double thr : cfg.activation_thresholds)
      for (const auto& [s, e] : runs_above(norm, thr))
        out.push_back({video_id, static_cast<double>(s), static_cast<double>(e), static_cast<int>(k),
                       score_proposal(raw, s, e, cfg.margin_fraction)});
  }
  return out;
}

std::vector<Proposal> nms(std::vector<Proposal> proposals, double threshold) {
  std::stable_sort(proposals.begin(), proposals.end(),
                   [](const Proposal& a, const Proposal& b) { return a.score > b.score; });
  std::vector<Proposal> kept;
  std::vector<bool> removed(proposals.size(), false);
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    if (removed[i]) continue;
    kept.push_back(proposals[i]);
    for (std::size_t j = i + 1; j < proposals.size(); ++j)
      if (!removed[j] && temporal_iou(proposals[i].start, proposals[i].end, proposals[j].start,
                                      proposals[j].end) > threshold)
        removed[j] = true;
  }
  return kept;
}

std::vector<int> map_clusters_to_labels(std::span<const std::size_t> clusters,
                                        std::span<const int> truth, std::size_t num_clusters) {
  if (clusters.size() != truth.size()) throw InvalidArgument("cluster/truth length mismatch");
  std::vector<std::map<int, std::size_t>> votes(num_clusters);
  for (std::size_t n = 0; n < clusters.size(); ++n) {
    if (truth[n] < 0) continue;
    if (clusters[n] >= num_clusters) throw InvalidArgument("cluster index out of range");
    ++votes[clusters[n]][truth[n]];
  }
  std::vector<int> mapping(num_clusters, 0);
  for (std::size_t k = 0; k < num_clusters; ++k) {
    if (votes[k].empty()) {
      log::warn("cluster " + std::to_string(k) + " has no annotated members; mapped to class 0");
      continue;
    }
    std::size_t best = 0;
    for (const auto& [label, count] : votes[k])  // ascending label order
      if (count > best) {
        best = count;
        mapping[k] = label;
      }
  }
  return mapping;
}

double average_precision(const std::vector<bool>& true_positive, std::size_t positives) {
  if (positives == 0) return 0.0;
  std::vector<double> recall, precision;
  std::size_t tp = 0;
  for (std::size_t i = 0; i < true_positive.size(); ++i) {
    if (true_positive[i]) ++tp;
    recall.push_back(static_cast<double>(tp) / static_cast<double>(positives));
    precision.push_back(static_cast<double>(tp) / static_cast<double>(i + 1));
  }
  // Precision envelope from the right, then area over recall steps.
  for (std::size_t i = precision.size(); i-- > 1;)
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double ap = 0.0, prev_recall = 0.0;
  for (std::size_t i = 0; i < recall.size(); ++i) {
    ap += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  return ap;
}

MapReport mean_average_precision(const std::vector<Proposal>& proposals, const GroundTruth& gt,
                                 std::span<const double> iou_thresholds) {
  struct GtSegment {
    std::string video_id;
    double start, end;
  };
  std::map<int, std::vector<GtSegment>> by_class;
  for (const auto& ann : gt.videos)
    for (const auto& s : ann.segments_in_snippets()) by_class[s.label].push_back({ann.video_id, s.start, s.end});

  MapReport report;
  report.iou_thresholds.assign(iou_thresholds.begin(), iou_thresholds.end());
  for (const auto& [label, segs] : by_class) report.classes.push_back(label);
  if (by_class.empty()) {
    log::warn("no ground-truth segments: mAP reported as 0");
    report.map.assign(iou_thresholds.size(), 0.0);
    report.class_ap.assign(iou_thresholds.size(), {});
    return report;
  }

  std::map<int, std::vector<const Proposal*>> ranked;
  for (const auto& p : proposals) ranked[p.label].push_back(&p);
  for (auto& [label, list] : ranked)
    std::stable_sort(list.begin(), list.end(),
                     [](const Proposal* a, const Proposal* b) { return a->score > b->score; });

  for (double thr : iou_thresholds) {
    std::vector<double> aps;
    for (const auto& [label, segs] : by_class) {
      std::vector<bool> matched(segs.size(), false);
      std::vector<bool> flags;
      for (const Proposal* p : ranked[label]) {
        double best_iou = -1.0;
        std::size_t best = segs.size();
        for (std::size_t g = 0; g < segs.size(); ++g) {
          if (matched[g] || segs[g].video_id != p->video_id) continue;
          const double iou = temporal_iou(p->start, p->end, segs[g].start, segs[g].end);
          if (iou > best_iou) {
            best_iou = iou;
            best = g;
          }
        }
        const bool hit = best < segs.size() && best_iou >= thr;
        if (hit) matched[best] = true;
        flags.push_back(hit);
      }
      aps.push_back(average_precision(flags, segs.size()));
    }
    report.class_ap.push_back(aps);
    report.map.push_back(std::accumulate(aps.begin(), aps.end(), 0.0) / static_cast<double>(aps.size()));
  }
  report.average = report.map.empty() ? 0.0
                                      : std::accumulate(report.map.begin(), report.map.end(), 0.0) /
                                            static_cast<double>(report.map.size());
  return report;
}

double nmi(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) throw InvalidArgument("nmi: length mismatch");
  if (predicted.empty()) throw InvalidArgument("nmi of empty partitions");
  const double n = static_cast<double>(predicted.size());
  std::map<int, double> pa, pb;
  std::map<std::pair<int, int>, double> joint;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    pa[predicted[i]] += 1.0;
    pb[truth[i]] += 1.0;
    joint[{predicted[i], truth[i]}] += 1.0;
  }
  auto entropy = [n](const std::map<int, double>& counts) {
    double h = 0.0;
    for (const auto& [k, c] : counts) h -= (c / n) * std::log(c / n);
    return h;
  };
  const double ha = entropy(pa), hb = entropy(pb);
  if (pa.size() == 1 && pb.size() == 1) return 1.0;
  double mi = 0.0;
  for (const auto& [key, c] : joint) mi += (c / n) * std::log(c * n / (pa[key.first] * pb[key.second]));
  const double denom = 0.5 * (ha + hb);
  if (denom <= 0.0) return 0.0;
  return std::clamp(mi / denom, 0.0, 1.0);
}

double ranking_precision(const std::vector<std::vector<std::size_t>>& rankings,
                         std::span<const int> center_class, std::span<const int> truth, std::size_t k) {
  if (rankings.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t c = 0; c < rankings.size(); ++c) {
    const std::size_t depth = std::min(k, rankings[c].size());
    if (depth == 0) continue;
    std::size_t hits = 0;
    for (std::size_t j = 0; j < depth; ++j)
      if (truth[rankings[c][j]] == center_class[c]) ++hits;
    total += static_cast<double>(hits) / static_cast<double>(depth);
  }
  return total / static_cast<double>(rankings.size());
}

void write_proposals_csv(const std::vector<Proposal>& proposals, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(10);
  out << "video_id,start,end,class,score\n";
  for (const auto& p : proposals)
    out << p.video_id << ',' << p.start << ',' << p.end << ',' << p.label << ',' << p.score << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace feel
