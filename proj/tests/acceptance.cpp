// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "feel/cci.hpp"
#include "feel/clustering.hpp"
#include "feel/curriculum.hpp"
#include "feel/evaluation.hpp"
#include "feel/log.hpp"
#include "feel/pipeline.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

using namespace feel;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

EntityUniverse random_universe(SeededRng& rng, std::size_t max_videos) {
  const std::size_t K = 1 + rng.index(4);
  const std::size_t N = K + 2 + rng.index(max_videos - K - 1);
  const std::size_t dim = 2 + rng.index(4);
  return EntityUniverse(oracle::random_points(K, dim, rng), oracle::random_points(N - K, dim, rng));
}

Outcome jaccard_equivalence() {
  SeededRng rng(1001);
  std::size_t binary_mismatch = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto u = random_universe(rng, 50);
    const std::size_t l = 1 + rng.index(std::min<std::size_t>(10, u.size() - 1));
    const std::size_t a = rng.index(u.size()), b = rng.index(u.size());
    const auto sa = expand_reciprocal_set(u, a, l), sb = expand_reciprocal_set(u, b, l);
    std::vector<double> ba(u.size(), 0.0), bb(u.size(), 0.0);
    for (auto i : sa) ba[i] = 1.0;
    for (auto i : sb) bb[i] = 1.0;
    binary_mismatch += jaccard_encoded(ba, bb) != jaccard_set_form(sa, sb);
    std::vector<double> row_a(u.size()), row_b(u.size());
    for (std::size_t z = 0; z < u.size(); ++z) {
      row_a[z] = u.distance(a, z);
      row_b[z] = u.distance(b, z);
    }
    const auto wa = encode_neighbors(sa, row_a).weights, wb = encode_neighbors(sb, row_b).weights;
    worst = std::max(worst, std::abs(jaccard_encoded(wa, wb) - static_cast<double>(oracle::jaccard_weighted(wa, wb))));
  }
  return {binary_mismatch == 0 && worst < 1e-12,
          fmt("binary mismatches %.0f, max weighted error %.3g", static_cast<double>(binary_mismatch), worst)};
}

Outcome reciprocal_oracle() {
  SeededRng rng(1002);
  std::size_t checked = 0, mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto u = random_universe(rng, 40);
    for (std::size_t e = 0; e < u.size(); ++e) {
      const std::size_t l = 1 + rng.index(u.size() - 1);
      const auto r = k_reciprocal_set(u, e, l);
      const auto x = expand_reciprocal_set(u, e, l);
      mismatches += std::set<std::size_t>(r.begin(), r.end()) != oracle::reciprocal(u.distances(), e, l);
      mismatches += std::set<std::size_t>(x.begin(), x.end()) != oracle::expanded(u.distances(), e, l);
      checked += 2;
    }
  }
  return {mismatches == 0, fmt("%.0f mismatches in %.0f sets", static_cast<double>(mismatches),
                               static_cast<double>(checked))};
}

Outcome gradient_check() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed)
    for (std::size_t T : {8u, 50u})
      for (std::size_t K : {3u, 10u}) {
        const auto f = gradcheck::make_fixture(2000 + seed, T, K, 6, 2, seed % 2 == 0 ? 0.005 : 1.0);
        for (double e : gradcheck::relative_errors(f, 1e-5)) worst = std::max(worst, e);
      }
  return {worst < 1e-4, fmt("max relative error %.3g over 40 configurations", worst)};
}

Outcome schedule_properties() {
  bool ok = true;
  double constant_err = 0.0;
  for (std::size_t imax = 1; imax <= 12; ++imax) {
    const SelectionSchedule s{ScheduleMode::kConstant, imax, 1.05};
    for (std::size_t i = 1; i <= imax; ++i)
      constant_err = std::max(constant_err, std::abs(selection_rate(i, s) - static_cast<double>(i) / imax));
    ok = ok && selection_rate(imax, s) == 1.0;
  }
  ok = ok && constant_err == 0.0;
  for (double mu : {1.01, 1.05, 1.2, 2.0})
    for (std::size_t imax : {3u, 6u, 10u}) {
      const SelectionSchedule s{ScheduleMode::kVariable, imax, mu};
      ok = ok && selection_rate(imax, s) == 1.0;
      for (std::size_t i = 1; i < imax; ++i) ok = ok && selection_rate(i + 1, s) > selection_rate(i, s);
      for (std::size_t i = 1; i + 1 < imax; ++i)
        ok = ok && selection_rate(i + 2, s) - selection_rate(i + 1, s) > selection_rate(i + 1, s) - selection_rate(i, s);
    }
  double convergence = 0.0;
  for (std::size_t imax : {3u, 6u, 10u}) {
    const SelectionSchedule near{ScheduleMode::kVariable, imax, 1.0 + 1e-7};
    const SelectionSchedule flat{ScheduleMode::kConstant, imax, 1.05};
    for (std::size_t i = 1; i <= imax; ++i)
      convergence = std::max(convergence, std::abs(selection_rate(i, near) - selection_rate(i, flat)));
  }
  ok = ok && convergence < 1e-4;
  const oracle::ld mu = 1.05L;
  const double extended = static_cast<double>((mu - 1) / (std::pow(mu, 10.0L) - 1));
  const double b1 = selection_rate(1, SelectionSchedule{ScheduleMode::kVariable, 10, 1.05});
  ok = ok && std::abs(b1 - extended) < 1e-4 && std::abs(b1 - 0.0795) < 1e-4;
  return {ok, fmt("beta_1 %.6f (extended %.6f), mu->1 gap %.2g", b1, extended, convergence)};
}

Outcome nms_and_map() {
  SeededRng rng(1005);
  auto random_props = [&](std::size_t n) {
    std::vector<Proposal> out;
    for (std::size_t i = 0; i < n; ++i) {
      const double s = rng.uniform(0.0, 90.0);
      out.push_back({"v", s, s + rng.uniform(1.0, 15.0), static_cast<int>(rng.index(3)),
                     std::round(rng.uniform() * 20.0) / 20.0 + 1e-6 * rng.uniform()});
    }
    return out;
  };
  std::size_t nms_mismatch = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto props = random_props(50);
    const auto a = nms(props, 0.7), b = oracle::nms(props, 0.7);
    bool same = a.size() == b.size();
    for (std::size_t i = 0; same && i < a.size(); ++i)
      same = a[i].start == b[i].start && a[i].end == b[i].end && a[i].label == b[i].label && a[i].score == b[i].score;
    nms_mismatch += !same;
  }

  GroundTruth hand;
  hand.videos.push_back({"v", {{0, 10, 0}, {20, 30, 0}, {40, 50, 1}}, TimeUnit::kSnippet, std::nullopt});
  const std::vector<Proposal> props{
      {"v", 0, 10, 0, 0.9}, {"v", 50, 60, 0, 0.8}, {"v", 40, 48, 1, 0.7}, {"v", 20, 30, 0, 0.6}};
  const auto r = mean_average_precision(props, hand, std::vector<double>{0.5, 0.85});
  const double ap0 = 0.5 * 1.0 + 0.5 * (2.0 / 3.0);
  const bool hand_ok = r.map[0] == (ap0 + 1.0) / 2.0 && r.map[1] == ap0 / 2.0;

  std::size_t monotone_fail = 0;
  const auto grid = threshold_grid(0.1, 1.0, 0.1);
  for (int trial = 0; trial < 50; ++trial) {
    GroundTruth gt;
    gt.videos.push_back({"v", {}, TimeUnit::kSnippet, std::nullopt});
    for (int i = 0; i < 10; ++i) {
      const double s = rng.uniform(0.0, 90.0);
      gt.videos[0].segments.push_back({s, s + rng.uniform(2.0, 12.0), static_cast<int>(rng.index(3))});
    }
    const auto m = mean_average_precision(random_props(30), gt, grid).map;
    for (std::size_t i = 0; i + 1 < m.size(); ++i) monotone_fail += m[i] < m[i + 1];
  }
  return {nms_mismatch == 0 && hand_ok && monotone_fail == 0,
          fmt("nms mismatches %.0f, hand fixture exact %.0f, monotonicity violations %.0f",
              static_cast<double>(nms_mismatch), hand_ok ? 1.0 : 0.0, static_cast<double>(monotone_fail))};
}

Outcome kmeans_properties() {
  bool monotone = true;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SeededRng data(3000 + seed);
    GlobalFeatureTable t{oracle::random_matrix(80, 5, data, -3, 3), 0};
    SeededRng rng(seed);
    const auto s = kmeans(t, 6, rng);
    for (std::size_t i = 1; i < s.inertia_history.size(); ++i)
      monotone = monotone && s.inertia_history[i] <= s.inertia_history[i - 1];
  }
  // Five unit-variance blobs whose centers are pairwise 10 apart.
  const std::size_t per = 40, K = 5, D = 8;
  const double offset = 10.0 / std::sqrt(2.0);
  double worst = 1.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SeededRng data(3100 + seed);
    GlobalFeatureTable t{RealMatrix(per * K, D), 0};
    std::vector<int> truth;
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t i = 0; i < per; ++i) {
        for (std::size_t j = 0; j < D; ++j) t.features(k * per + i, j) = (j == k ? offset : 0.0) + data.normal();
        truth.push_back(static_cast<int>(k));
      }
    SeededRng rng(seed);
    const auto s = kmeans(t, K, rng);
    worst = std::min(worst, nmi(std::vector<int>(s.assignments.begin(), s.assignments.end()), truth));
  }
  return {monotone && worst > 0.95, fmt("inertia monotone %.0f, worst planted NMI %.4f", monotone ? 1.0 : 0.0, worst)};
}

// Runs for the end-to-end criteria, keyed by variant then seed.
struct Runs {
  std::map<std::string, std::vector<PipelineResult>> results;
  std::map<std::string, std::vector<std::string>> csv;
};

const std::vector<std::string> kVariants{"full", "no-cci", "no-iis", "cola-utal"};
constexpr std::uint64_t kSeeds = 3;

PipelineConfig variant_config(const std::string& name, std::uint64_t seed) {
  PipelineConfig c;
  c.synthetic = true;
  c.seed = seed;
  c.synth.seed = seed;
  c.ablation.disable_cci = name == "no-cci";
  c.ablation.disable_iis = name == "no-iis";
  c.ablation.cola_utal = name == "cola-utal";
  return c;
}

std::string without_duration(const std::string& csv) {
  std::istringstream in(csv);
  std::string out;
  for (std::string line; std::getline(in, line);) out += line.substr(0, line.rfind(',')) + "\n";
  return out;
}

Runs run_all() {
  Runs r;
  for (const auto& v : kVariants)
    for (std::uint64_t s = 0; s < kSeeds; ++s) {
      const auto cfg = variant_config(v, s);
      auto res = run_pipeline(cfg);
      r.csv[v].push_back(iterations_csv(res.records, cfg.iou_thresholds));
      r.results[v].push_back(std::move(res));
    }
  return r;
}

double mean_of(const std::vector<PipelineResult>& rs, const std::function<double(const PipelineResult&)>& f) {
  double s = 0.0;
  for (const auto& r : rs) s += f(r);
  return s / static_cast<double>(rs.size());
}

}  // namespace

int main() {
  log::set_quiet(true);
  int failures = 0;
  auto report = [&](int id, double budget_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs >= budget_s) {
      o.pass = false;
      o.detail += fmt(" [over the %.0f s budget]", budget_s);
    }
    failures += !o.pass;
    std::printf("%s criterion %d (%.2f s): %s\n", o.pass ? "PASS" : "FAIL", id, secs, o.detail.c_str());
    std::fflush(stdout);
  };

  report(1, 10, jaccard_equivalence);
  report(2, 10, reciprocal_oracle);
  report(3, 120, gradient_check);
  report(4, 1, schedule_properties);
  report(5, 30, nms_and_map);
  report(6, 10, kmeans_properties);

  Runs runs;
  report(7, 900, [&] {
    runs = run_all();
    auto nmi_of = [](const PipelineResult& r) { return r.final_eval.nmi; };
    auto map50 = [](const PipelineResult& r) { return r.final_eval.map.map[0]; };
    const double full_nmi = mean_of(runs.results["full"], nmi_of);
    const double no_cci_nmi = mean_of(runs.results["no-cci"], nmi_of);
    const double no_iis_nmi = mean_of(runs.results["no-iis"], nmi_of);
    const double full_map = mean_of(runs.results["full"], map50);
    const double base_map = mean_of(runs.results["cola-utal"], map50);
    double p0 = 0.0, p1 = 0.0;
    std::string per_seed;
    for (const auto& r : runs.results["full"]) {
      p0 += r.records[0].precision_initial / kSeeds;
      p1 += r.records[0].precision_refined / kSeeds;
      per_seed += fmt(" %.2f->%.2f", r.records[0].precision_initial, r.records[0].precision_refined);
    }
    const bool c = p1 >= p0;
    const bool a = full_nmi >= no_cci_nmi && full_nmi >= no_iis_nmi;
    const bool b = full_map - base_map >= 0.05;
    std::string detail = fmt("(a) NMI full %.4f, no-cci %.4f, no-iis %.4f; ", full_nmi, no_cci_nmi, no_iis_nmi);
    detail += fmt("(b) mAP@0.5 full %.4f vs baseline %.4f; ", full_map, base_map);
    detail += fmt("(c) precision@10 mean %.3f -> %.3f (per seed", p0, p1) + per_seed + ")";
    return Outcome{a && b && c, detail};
  });

  // Every run whose first iteration selects a strict subset.
  report(8, 1, [&] {
    bool ok = true;
    std::size_t runs_checked = 0;
    double mean_sel = 0.0, mean_all = 0.0;
    std::string detail;
    for (const char* v : {"full", "no-cci"})
      for (const auto& r : runs.results[v]) {
        const auto& rec = r.records.at(0);
        ok = ok && rec.selection_accuracy > rec.full_accuracy;
        mean_sel += rec.selection_accuracy;
        mean_all += rec.full_accuracy;
        ++runs_checked;
        detail += std::string(v) + fmt(" %.3f vs %.3f; ", rec.selection_accuracy, rec.full_accuracy);
      }
    if (runs_checked == 0) return Outcome{false, "criterion 7 runs missing"};
    mean_sel /= static_cast<double>(runs_checked);
    mean_all /= static_cast<double>(runs_checked);
    return Outcome{ok, "selected vs all accuracy at iteration 1: " + detail +
                           fmt("mean %.3f vs %.3f", mean_sel, mean_all)};
  });

  report(9, 900, [&] {
    const auto again = run_all();
    std::size_t differing = 0, compared = 0;
    for (const auto& v : kVariants)
      for (std::uint64_t s = 0; s < kSeeds; ++s) {
        if (runs.csv[v].size() <= s) return Outcome{false, "criterion 7 runs missing"};
        differing += without_duration(runs.csv[v][s]) != without_duration(again.csv.at(v)[s]);
        ++compared;
      }
    return Outcome{differing == 0, fmt("%.0f of %.0f iterations.csv files differ", static_cast<double>(differing),
                                       static_cast<double>(compared))};
  });

  std::printf("%s: %d criteria failed\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
  return failures == 0 ? 0 : 1;
}
