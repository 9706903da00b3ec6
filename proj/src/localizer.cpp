#include "feel/localizer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

#include "feel/error.hpp"
#include "feel/log.hpp"

namespace feel {

// ---------------------------------------------------------------------------
// Parameters

std::size_t LocalizerParams::parameter_count() const noexcept {
  return embed_weight.size() + embed_bias.size() + class_weight.size() + class_bias.size();
}

std::vector<double> LocalizerParams::flat() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const RealMatrix* m : {&embed_weight, &embed_bias, &class_weight, &class_bias})
    out.insert(out.end(), m->values().begin(), m->values().end());
  return out;
}

void LocalizerParams::assign_flat(std::span<const double> values) {
  if (values.size() != parameter_count()) throw InvalidArgument("flat parameter length mismatch");
  std::size_t offset = 0;
  for (RealMatrix* m : {&embed_weight, &embed_bias, &class_weight, &class_bias}) {
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(offset), m->size(), m->values().begin());
    offset += m->size();
  }
}

LocalizerParams LocalizerParams::zeros(std::size_t dim, std::size_t classes) {
  return {RealMatrix(dim, dim), RealMatrix(1, dim), RealMatrix(dim, classes), RealMatrix(1, classes)};
}

LocalizerParams LocalizerParams::glorot(std::size_t dim, std::size_t classes, SeededRng& rng) {
  LocalizerParams p = zeros(dim, classes);
  const double embed_limit = std::sqrt(6.0 / static_cast<double>(dim + dim));
  const double class_limit = std::sqrt(6.0 / static_cast<double>(dim + classes));
  for (double& w : p.embed_weight.values()) w = rng.uniform(-embed_limit, embed_limit);
  for (double& w : p.class_weight.values()) w = rng.uniform(-class_limit, class_limit);
  return p;
}

// ---------------------------------------------------------------------------
// Config helpers

namespace {
std::size_t at_least_one(std::size_t v) { return v < 1 ? 1 : v; }
}  // namespace

std::size_t MiningConfig::easy_for(std::size_t t) const { return easy_count ? easy_count : at_least_one(t / 8); }
std::size_t MiningConfig::hard_for(std::size_t t) const { return hard_count ? hard_count : at_least_one(t / 32); }
std::size_t MiningConfig::negatives_for(std::size_t t) const {
  return negative_count ? negative_count : easy_for(t);
}
std::size_t MiningConfig::erosion_for(std::size_t t) const {
  return erosion_margin ? erosion_margin : at_least_one(t / 64);
}
std::size_t MiningConfig::dilation_for(std::size_t t) const {
  return dilation_margin ? dilation_margin : at_least_one(t / 64);
}
std::size_t LossConfig::top_k_for(std::size_t t) const {
  return std::min(t, top_k ? top_k : at_least_one(t / 8));
}

// ---------------------------------------------------------------------------
// Forward

ActivationMaps forward(const RealMatrix& snippets, const LocalizerParams& params,
                       const LocalizerConfig& cfg) {
  const std::size_t T = snippets.rows(), D = params.dim(), K = params.classes();
  if (snippets.cols() != D)
    throw InvalidArgument("snippet width " + std::to_string(snippets.cols()) +
                          " does not match localizer width " + std::to_string(D));
  if (T == 0) throw InvalidArgument("forward on a video with no snippets");

  ActivationMaps maps;
  maps.embedded = matmul(snippets, params.embed_weight);
  for (std::size_t t = 0; t < T; ++t) {
    auto row = maps.embedded.row(t);
    for (std::size_t j = 0; j < D; ++j) row[j] = relu(row[j] + params.embed_bias(0, j));
  }
  maps.class_activation = matmul(maps.embedded, params.class_weight);
  maps.attention.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    auto row = maps.class_activation.row(t);
    double sum = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      row[k] = relu(row[k] + params.class_bias(0, k));
      sum += row[k];
    }
    maps.attention[t] = sigmoid(sum);
  }
  const std::size_t top_k = cfg.loss.top_k_for(T);
  maps.top_rows.resize(K);
  maps.video_scores.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    maps.top_rows[k] = topk_rows(maps.class_activation, k, top_k);
    double s = 0.0;
    for (std::size_t r : maps.top_rows[k]) s += maps.class_activation(r, k);
    maps.video_scores[k] = s / static_cast<double>(top_k);
  }
  maps.probabilities = softmax(maps.video_scores);

  // A >= 0 and p sums to one by construction; S can round to exactly 1 when
  // the summed activation saturates the sigmoid.
  double psum = 0.0;
  for (double p : maps.probabilities) psum += p;
  if (std::abs(psum - 1.0) > 1e-9 || !maps.class_activation.all_finite())
    throw InvalidArgument("localizer forward produced invalid activations");
  for (double s : maps.attention)
    if (!(s > 0.0 && s <= 1.0)) throw InvalidArgument("attention outside (0, 1]");
  return maps;
}

// ---------------------------------------------------------------------------
// Mining

std::vector<bool> erode(const std::vector<bool>& mask, std::size_t margin) {
  const std::size_t T = mask.size();
  std::vector<bool> out(T, false);
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t lo = t >= margin ? t - margin : 0;
    const std::size_t hi = std::min(T - 1, t + margin);
    bool all = true;
    for (std::size_t s = lo; s <= hi && all; ++s) all = mask[s];
    out[t] = all;
  }
  return out;
}

std::vector<bool> dilate(const std::vector<bool>& mask, std::size_t margin) {
  const std::size_t T = mask.size();
  std::vector<bool> out(T, false);
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t lo = t >= margin ? t - margin : 0;
    const std::size_t hi = std::min(T - 1, t + margin);
    bool any = false;
    for (std::size_t s = lo; s <= hi && !any; ++s) any = mask[s];
    out[t] = any;
  }
  return out;
}

namespace {

std::vector<std::size_t> subsample(std::vector<std::size_t> pool, std::size_t limit, SeededRng& rng) {
  if (pool.size() <= limit) return pool;
  std::vector<std::size_t> out;
  for (std::size_t i : rng.sample_without_replacement(pool.size(), limit)) out.push_back(pool[i]);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<double> mining_attention(std::span<const double> attention, const MiningConfig& cfg) {
  std::vector<double> out(attention.begin(), attention.end());
  if (!cfg.normalize_attention || out.empty()) return out;
  const auto [lo, hi] = std::minmax_element(out.begin(), out.end());
  const double low = *lo, range = *hi - *lo;
  if (!(range > 0.0)) return out;
  for (double& v : out) v = (v - low) / range;
  return out;
}

MinedSnippets mine_snippets(std::span<const double> attention, const MiningConfig& cfg,
                            SeededRng& rng) {
  const std::size_t T = attention.size();
  MinedSnippets mined;
  if (T == 0) return mined;

  std::vector<bool> mask(T);
  for (std::size_t t = 0; t < T; ++t) mask[t] = attention[t] > cfg.actionness_threshold;
  const auto eroded = erode(mask, cfg.erosion_for(T));
  const auto dilated = dilate(mask, cfg.dilation_for(T));
  std::vector<std::size_t> hard_action, hard_background;
  for (std::size_t t = 0; t < T; ++t) {
    if (mask[t] && !eroded[t]) hard_action.push_back(t);
    if (dilated[t] && !mask[t]) hard_background.push_back(t);
  }
  const std::size_t hard = cfg.hard_for(T);
  mined.hard_action = subsample(std::move(hard_action), hard, rng);
  mined.hard_background = subsample(std::move(hard_background), hard, rng);

  std::vector<std::size_t> order(T);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return attention[a] > attention[b]; });
  const std::size_t easy = std::min(cfg.easy_for(T), T);
  mined.easy_action.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(easy));
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return attention[a] < attention[b]; });
  for (std::size_t t : order) {
    if (mined.easy_background.size() == easy) break;
    if (std::find(mined.easy_action.begin(), mined.easy_action.end(), t) == mined.easy_action.end())
      mined.easy_background.push_back(t);
  }
  std::sort(mined.easy_action.begin(), mined.easy_action.end());
  std::sort(mined.easy_background.begin(), mined.easy_background.end());
  return mined;
}

VideoTriples sample_triples(const MinedSnippets& mined, std::size_t negative_count, SeededRng& rng) {
  auto draw = [&](const std::vector<std::size_t>& pool, std::size_t count) {
    std::vector<std::size_t> out;
    if (pool.size() >= count) {
      for (std::size_t i : rng.sample_without_replacement(pool.size(), count)) out.push_back(pool[i]);
    } else {
      for (std::size_t i = 0; i < count; ++i) out.push_back(pool[rng.index(pool.size())]);
    }
    return out;
  };
  auto make = [&](const std::vector<std::size_t>& queries, const std::vector<std::size_t>& positives,
                  const std::vector<std::size_t>& negatives) -> std::optional<ContrastiveTriple> {
    if (queries.empty() || positives.empty() || negatives.empty() || negative_count == 0)
      return std::nullopt;
    ContrastiveTriple tr;
    tr.query = queries[rng.index(queries.size())];
    tr.positive = positives[rng.index(positives.size())];
    tr.negatives = draw(negatives, negative_count);
    return tr;
  };
  VideoTriples out;
  out.action = make(mined.hard_action, mined.easy_action, mined.easy_background);
  out.background = make(mined.hard_background, mined.easy_background, mined.easy_action);
  return out;
}

// ---------------------------------------------------------------------------
// Losses

namespace {

/// Similarity logits [positive, negatives...] divided by the temperature.
std::vector<double> triple_logits(const RealMatrix& f, const ContrastiveTriple& tr, double temperature) {
  std::vector<double> s;
  s.reserve(1 + tr.negatives.size());
  s.push_back(dot(f.row(tr.query), f.row(tr.positive)) / temperature);
  for (std::size_t n : tr.negatives) s.push_back(dot(f.row(tr.query), f.row(n)) / temperature);
  return s;
}

double log_sum_exp(const std::vector<double>& s) {
  const double m = *std::max_element(s.begin(), s.end());
  double total = 0.0;
  for (double x : s) total += std::exp(x - m);
  return m + std::log(total);
}

}  // namespace

double contrastive_term(const RealMatrix& features, const ContrastiveTriple& triple,
                        double temperature) {
  if (!(temperature > 0.0)) throw InvalidArgument("temperature must be positive");
  const auto s = triple_logits(features, triple, temperature);
  return log_sum_exp(s) - s[0];
}

double contrastive_loss(const RealMatrix& embedded, const VideoTriples& triples,
                        const LossConfig& cfg) {
  if (!triples.action && !triples.background) return 0.0;
  const RealMatrix f = cfg.normalize_features ? l2_normalize_rows(embedded) : embedded;
  double total = 0.0;
  if (triples.action) total += contrastive_term(f, *triples.action, cfg.temperature);
  if (triples.background) total += contrastive_term(f, *triples.background, cfg.temperature);
  return total;
}

double classification_loss(std::span<const double> probabilities, std::size_t label) {
  if (label >= probabilities.size())
    throw InvalidArgument("label " + std::to_string(label) + " out of range");
  return -std::log(probabilities[label]);
}

LossBreakdown batch_loss(std::span<const BatchItem> batch, const LocalizerParams& params,
                         const LocalizerConfig& cfg) {
  LossBreakdown out;
  if (batch.empty()) return out;
  for (const auto& item : batch) {
    const auto maps = forward(*item.snippets, params, cfg);
    out.classification += classification_loss(maps.probabilities, item.label);
    out.contrastive += contrastive_loss(maps.embedded, item.triples, cfg.loss);
  }
  out.classification /= static_cast<double>(batch.size());
  out.total = total_loss(out.classification, out.contrastive, cfg.loss.lambda);
  return out;
}

// ---------------------------------------------------------------------------
// Backward

namespace {

/// Adds d(weight * term)/d(features) into `grad_features` for one triple.
double accumulate_triple(const RealMatrix& f, const ContrastiveTriple& tr, double temperature,
                         double weight, RealMatrix& grad_features) {
  const auto s = triple_logits(f, tr, temperature);
  const double lse = log_sum_exp(s);
  const std::size_t D = f.cols();
  auto gq = grad_features.row(tr.query);
  auto q = f.row(tr.query);
  for (std::size_t j = 0; j < s.size(); ++j) {
    // dL/ds_j = softmax_j - [j == 0]
    const double coeff = weight * (std::exp(s[j] - lse) - (j == 0 ? 1.0 : 0.0)) / temperature;
    const std::size_t other = j == 0 ? tr.positive : tr.negatives[j - 1];
    auto x = f.row(other);
    auto gx = grad_features.row(other);
    for (std::size_t d = 0; d < D; ++d) {
      gq[d] += coeff * x[d];
      gx[d] += coeff * q[d];
    }
  }
  return lse - s[0];
}

}  // namespace

LossBreakdown backward(std::span<const BatchItem> batch, const LocalizerParams& params,
                       const LocalizerConfig& cfg, LocalizerParams& gradients) {
  const std::size_t D = params.dim(), K = params.classes();
  gradients = LocalizerParams::zeros(D, K);
  LossBreakdown out;
  if (batch.empty()) return out;
  const double cls_weight = 1.0 / static_cast<double>(batch.size());
  const double ctr_weight = cfg.loss.lambda;

  for (const auto& item : batch) {
    const RealMatrix& x = *item.snippets;
    const auto maps = forward(x, params, cfg);
    const std::size_t T = x.rows();
    const std::size_t top_k = cfg.loss.top_k_for(T);
    out.classification += classification_loss(maps.probabilities, item.label);

    // Classification path: d/da of -log softmax(a)[y] is p - onehot(y).
    RealMatrix grad_act(T, K);
    for (std::size_t k = 0; k < K; ++k) {
      const double ga = cls_weight * (maps.probabilities[k] - (k == item.label ? 1.0 : 0.0)) /
                        static_cast<double>(top_k);
      for (std::size_t r : maps.top_rows[k]) grad_act(r, k) += ga;
    }
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t k = 0; k < K; ++k)
        if (!(maps.class_activation(t, k) > 0.0)) grad_act(t, k) = 0.0;

    RealMatrix cw = matmul_at_b(maps.embedded, grad_act);
    for (std::size_t i = 0; i < cw.size(); ++i) gradients.class_weight.values()[i] += cw.values()[i];
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t k = 0; k < K; ++k) gradients.class_bias(0, k) += grad_act(t, k);
    RealMatrix grad_embedded = matmul_a_bt(grad_act, params.class_weight);

    // Contrastive path.
    if (item.triples.action || item.triples.background) {
      const bool normalize = cfg.loss.normalize_features;
      const RealMatrix f = normalize ? l2_normalize_rows(maps.embedded) : maps.embedded;
      RealMatrix grad_f(T, D);
      for (const auto* tr : {&item.triples.action, &item.triples.background})
        if (*tr) out.contrastive += accumulate_triple(f, **tr, cfg.loss.temperature, ctr_weight, grad_f);
      for (std::size_t t = 0; t < T; ++t) {
        auto gf = grad_f.row(t);
        auto ge = grad_embedded.row(t);
        if (!normalize) {
          for (std::size_t d = 0; d < D; ++d) ge[d] += gf[d];
          continue;
        }
        const auto h = maps.embedded.row(t);
        const double norm = std::sqrt(dot(h, h));
        if (norm == 0.0) continue;
        // d(h/|h|)^T g = (g - f (f.g)) / |h|
        const auto ft = f.row(t);
        const double proj = dot(ft, gf);
        for (std::size_t d = 0; d < D; ++d) ge[d] += (gf[d] - ft[d] * proj) / norm;
      }
    }

    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t d = 0; d < D; ++d)
        if (!(maps.embedded(t, d) > 0.0)) grad_embedded(t, d) = 0.0;
    RealMatrix ew = matmul_at_b(x, grad_embedded);
    for (std::size_t i = 0; i < ew.size(); ++i) gradients.embed_weight.values()[i] += ew.values()[i];
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t d = 0; d < D; ++d) gradients.embed_bias(0, d) += grad_embedded(t, d);
  }
  out.classification *= cls_weight;
  out.total = total_loss(out.classification, out.contrastive, cfg.loss.lambda);
  return out;
}

// ---------------------------------------------------------------------------
// Training

TrainingTrace train_iteration(const Dataset& dataset, std::span<const TrainingExample> examples,
                              LocalizerParams& params, AdamState& adam, std::size_t epochs,
                              std::size_t batch_size, const LocalizerConfig& cfg, SeededRng& rng) {
  TrainingTrace trace;
  if (examples.empty()) {
    log::warn("empty selection: skipping localizer training");
    return trace;
  }
  if (batch_size == 0) throw InvalidArgument("batch size must be positive");
  if (adam.first_moment.size() != params.parameter_count())
    throw InvalidArgument("Adam state does not match the localizer parameters");

  std::vector<std::size_t> order(examples.size());
  std::vector<double> flat_params, flat_grads;
  LocalizerParams grads;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    double total = 0.0, cls = 0.0, ctr = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t stop = std::min(order.size(), start + batch_size);
      std::vector<BatchItem> batch;
      batch.reserve(stop - start);
      for (std::size_t i = start; i < stop; ++i) {
        const auto& ex = examples[order[i]];
        const RealMatrix& x = dataset.videos.at(ex.video).features;
        const auto maps = forward(x, params, cfg);
        const auto mined = mine_snippets(mining_attention(maps.attention, cfg.mining), cfg.mining, rng);
        batch.push_back({&x, ex.label, sample_triples(mined, cfg.mining.negatives_for(x.rows()), rng)});
      }
      const LossBreakdown loss = backward(batch, params, cfg, grads);
      flat_params = params.flat();
      flat_grads = grads.flat();
      adam_step(flat_params, flat_grads, adam);
      params.assign_flat(flat_params);
      ++trace.steps;
      total += loss.total;
      cls += loss.classification;
      ctr += loss.contrastive;
      ++batches;
    }
    trace.epoch_total.push_back(total / static_cast<double>(batches));
    trace.epoch_classification.push_back(cls / static_cast<double>(batches));
    trace.epoch_contrastive.push_back(ctr / static_cast<double>(batches));
  }
  return trace;
}

double mean_classification_loss(const Dataset& dataset, std::span<const TrainingExample> examples,
                                const LocalizerParams& params, const LocalizerConfig& cfg) {
  if (examples.empty()) return 0.0;
  double total = 0.0;
  for (const auto& ex : examples) {
    const auto maps = forward(dataset.videos.at(ex.video).features, params, cfg);
    total += classification_loss(maps.probabilities, ex.label);
  }
  return total / static_cast<double>(examples.size());
}

std::vector<std::vector<double>> attention_maps(const Dataset& dataset, const LocalizerParams& params,
                                                const LocalizerConfig& cfg) {
  std::vector<std::vector<double>> out;
  out.reserve(dataset.size());
  for (const auto& v : dataset.videos) out.push_back(forward(v.features, params, cfg).attention);
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints
//
// Layout (little-endian): "FEELCKPT", u32 version (1), u32 iteration,
// u32 dim, u32 classes, u64 adam step, f64 lr, f64 beta1, f64 beta2,
// f64 epsilon, u64 P, then P parameters, P first moments, P second moments
// (all f64, parameter order as LocalizerParams::flat()).

namespace {

constexpr char kCheckpointMagic[8] = {'F', 'E', 'E', 'L', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kCheckpointVersion = 1;

void put_u64(std::vector<char>& buf, std::uint64_t v, int bytes = 8) {
  for (int i = 0; i < bytes; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_f64(std::vector<char>& buf, double v) { put_u64(buf, std::bit_cast<std::uint64_t>(v)); }

struct Cursor {
  const std::vector<char>& data;
  std::size_t pos = 0;
  std::uint64_t get(int bytes) {
    if (data.size() - pos < static_cast<std::size_t>(bytes)) throw CorruptFileError("truncated checkpoint");
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data[pos + i])) << (8 * i);
    pos += static_cast<std::size_t>(bytes);
    return v;
  }
  double f64() { return std::bit_cast<double>(get(8)); }
};

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  std::vector<char> buf(kCheckpointMagic, kCheckpointMagic + sizeof kCheckpointMagic);
  put_u64(buf, kCheckpointVersion, 4);
  put_u64(buf, ck.iteration, 4);
  put_u64(buf, ck.params.dim(), 4);
  put_u64(buf, ck.params.classes(), 4);
  put_u64(buf, ck.adam.step);
  for (double v : {ck.adam.learning_rate, ck.adam.beta1, ck.adam.beta2, ck.adam.epsilon}) put_f64(buf, v);
  const auto flat = ck.params.flat();
  if (ck.adam.first_moment.size() != flat.size() || ck.adam.second_moment.size() != flat.size())
    throw InvalidArgument("Adam state does not match parameters");
  put_u64(buf, flat.size());
  for (const auto* v : {&flat, &ck.adam.first_moment, &ck.adam.second_moment})
    for (double x : *v) put_f64(buf, x);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::vector<char> data{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (data.size() < sizeof kCheckpointMagic ||
      !std::equal(kCheckpointMagic, kCheckpointMagic + sizeof kCheckpointMagic, data.begin()))
    throw FormatError("not a localizer checkpoint: " + path.string());
  Cursor c{data, sizeof kCheckpointMagic};
  if (c.get(4) != kCheckpointVersion) throw FormatError("unsupported checkpoint version");
  Checkpoint ck;
  ck.iteration = static_cast<std::uint32_t>(c.get(4));
  const auto dim = static_cast<std::size_t>(c.get(4));
  const auto classes = static_cast<std::size_t>(c.get(4));
  ck.params = LocalizerParams::zeros(dim, classes);
  ck.adam.step = c.get(8);
  ck.adam.learning_rate = c.f64();
  ck.adam.beta1 = c.f64();
  ck.adam.beta2 = c.f64();
  ck.adam.epsilon = c.f64();
  const auto count = static_cast<std::size_t>(c.get(8));
  if (count != ck.params.parameter_count()) throw CorruptFileError("checkpoint parameter count mismatch");
  std::vector<double> flat(count);
  for (auto& x : flat) x = c.f64();
  ck.params.assign_flat(flat);
  ck.adam.first_moment.resize(count);
  ck.adam.second_moment.resize(count);
  for (auto& x : ck.adam.first_moment) x = c.f64();
  for (auto& x : ck.adam.second_moment) x = c.f64();
  if (c.pos != data.size()) throw CorruptFileError("trailing bytes in checkpoint");
  return ck;
}

void write_attention_csv(const ActivationMaps& maps, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(9);
  out << "snippet,S";
  for (std::size_t k = 0; k < maps.class_activation.cols(); ++k) out << ",A_" << k;
  out << '\n';
  for (std::size_t t = 0; t < maps.attention.size(); ++t) {
    out << t << ',' << maps.attention[t];
    for (std::size_t k = 0; k < maps.class_activation.cols(); ++k) out << ',' << maps.class_activation(t, k);
    out << '\n';
  }
}

}  // namespace feel
