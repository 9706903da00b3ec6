#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "feel/pipeline.hpp"

namespace feel {

namespace {

const char* const kReportFiles[] = {"iterations.csv", "final_eval.json", "config_resolved.json", "proposals.csv"};

std::string num(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

std::filesystem::path temp_sibling(const std::filesystem::path& path) {
  return path.parent_path() / (path.filename().string() + ".tmp");
}

void commit(const std::filesystem::path& tmp, const std::filesystem::path& path) {
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot replace " + path.string());
  }
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  const auto tmp = temp_sibling(path);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  commit(tmp, path);
}

std::string iterations_csv(const std::vector<IterationRecord>& records, std::span<const double> iou_thresholds) {
  std::ostringstream out;
  out << "iteration,beta,selected,per_cluster,epochs,selection_accuracy,full_accuracy,nmi_selected,nmi_full,"
         "precision_initial,precision_refined,loss_total,loss_classification,loss_contrastive";
  for (double t : iou_thresholds) {
    char buf[32];
    std::snprintf(buf, sizeof buf, ",map@%.2f", t);
    out << buf;
  }
  out << ",average_map,duration_ms\n";
  for (const auto& r : records) {
    out << r.iteration << ',' << num(r.rate) << ',' << r.selected << ',';
    for (std::size_t k = 0; k < r.per_cluster.size(); ++k) out << (k ? ";" : "") << r.per_cluster[k];
    out << ',' << r.epochs << ',' << num(r.selection_accuracy) << ',' << num(r.full_accuracy) << ','
        << num(r.nmi_selected) << ',' << num(r.nmi_full) << ',' << num(r.precision_initial) << ','
        << num(r.precision_refined) << ',' << num(r.loss_total) << ',' << num(r.loss_classification) << ','
        << num(r.loss_contrastive);
    for (std::size_t t = 0; t < iou_thresholds.size(); ++t)
      out << ',' << (t < r.map.size() ? num(r.map[t]) : std::string());
    out << ',' << num(r.average_map) << ',' << num(r.duration_ms) << '\n';
  }
  return out.str();
}

void check_output_dir(const std::filesystem::path& out_dir, bool overwrite) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir))
    throw IoError("cannot create output directory " + out_dir.string());
  if (!overwrite)
    for (const char* name : kReportFiles)
      if (std::filesystem::exists(out_dir / name))
        throw IoError((out_dir / name).string() + " already exists; pass --overwrite to replace it");
}

void emit_reports(const PipelineResult& result, const std::filesystem::path& out_dir, bool overwrite) {
  if (result.records.empty()) throw InvalidArgument("no iteration records to report");
  check_output_dir(out_dir, overwrite);

  write_file_atomic(out_dir / "iterations.csv", iterations_csv(result.records, result.config.iou_thresholds));

  const EvalReport& e = result.final_eval;
  nlohmann::json eval{{"iteration", e.iteration}, {"has_ground_truth", e.has_ground_truth}};
  if (e.has_ground_truth) {
    nlohmann::json grid = nlohmann::json::array();
    for (std::size_t t = 0; t < e.map.iou_thresholds.size(); ++t) {
      nlohmann::json per_class = nlohmann::json::object();
      for (std::size_t c = 0; c < e.map.classes.size(); ++c)
        per_class[std::to_string(e.map.classes[c])] = number_or_null(e.map.class_ap[t][c]);
      grid.push_back({{"iou", e.map.iou_thresholds[t]}, {"map", number_or_null(e.map.map[t])}, {"class_ap", per_class}});
    }
    eval["map"] = grid;
    eval["average_map"] = number_or_null(e.map.average);
    eval["nmi"] = number_or_null(e.nmi);
    eval["cluster_to_class"] = e.cluster_to_class;
  }
  eval["pseudo_labels"] = e.pseudo_labels;
  eval["proposals"] = result.proposals.size();
  write_file_atomic(out_dir / "final_eval.json", eval.dump(2) + "\n");

  nlohmann::json cfg = result.config;
  write_file_atomic(out_dir / "config_resolved.json", cfg.dump(2) + "\n");

  const auto proposals = out_dir / "proposals.csv";
  const auto tmp = temp_sibling(proposals);
  write_proposals_csv(result.proposals, tmp);
  commit(tmp, proposals);
}

}  // namespace feel
