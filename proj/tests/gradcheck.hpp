#pragma once

// Central finite-difference check of the localizer's analytic gradients.

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "feel/localizer.hpp"
#include "feel/rng.hpp"

namespace gradcheck {

struct Fixture {
  std::vector<feel::RealMatrix> videos;
  std::vector<feel::BatchItem> batch;
  feel::LocalizerParams params;
  feel::LocalizerConfig cfg;
};

// A batch of random videos whose triples are mined from the initial forward pass.
inline Fixture make_fixture(std::uint64_t seed, std::size_t T, std::size_t K, std::size_t D,
                            std::size_t batch_size, double lambda) {
  Fixture f;
  feel::SeededRng rng(seed);
  f.cfg.loss.lambda = lambda;
  f.params = feel::LocalizerParams::glorot(D, K, rng);
  for (double& b : f.params.embed_bias.values()) b = 0.1 * rng.normal();
  for (double& b : f.params.class_bias.values()) b = 0.1 * rng.normal();
  for (std::size_t i = 0; i < batch_size; ++i) {
    feel::RealMatrix x(T, D);
    for (double& v : x.values()) v = rng.normal();
    f.videos.push_back(std::move(x));
  }
  for (std::size_t i = 0; i < batch_size; ++i) {
    const auto maps = feel::forward(f.videos[i], f.params, f.cfg);
    const auto mined = feel::mine_snippets(feel::mining_attention(maps.attention, f.cfg.mining), f.cfg.mining, rng);
    f.batch.push_back({&f.videos[i], rng.index(K), feel::sample_triples(mined, f.cfg.mining.negatives_for(T), rng)});
  }
  return f;
}

// Max relative error per parameter block: max|a - n| / max(max|a|, max|n|).
inline std::array<double, 4> relative_errors(const Fixture& f, double h = 1e-5) {
  feel::LocalizerParams analytic = feel::LocalizerParams::zeros(f.params.dim(), f.params.classes());
  feel::backward(f.batch, f.params, f.cfg, analytic);
  feel::RealMatrix feel::LocalizerParams::*blocks[4] = {
      &feel::LocalizerParams::embed_weight, &feel::LocalizerParams::embed_bias,
      &feel::LocalizerParams::class_weight, &feel::LocalizerParams::class_bias};
  std::array<double, 4> out{};
  for (int b = 0; b < 4; ++b) {
    feel::LocalizerParams p = f.params;
    auto values = (p.*blocks[b]).values();
    const auto grads = (analytic.*blocks[b]).values();
    double diff = 0.0, scale = 1e-12;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double keep = values[i];
      values[i] = keep + h;
      const double up = feel::batch_loss(f.batch, p, f.cfg).total;
      values[i] = keep - h;
      const double down = feel::batch_loss(f.batch, p, f.cfg).total;
      values[i] = keep;
      const double numeric = (up - down) / (2.0 * h);
      diff = std::max(diff, std::abs(numeric - grads[i]));
      scale = std::max({scale, std::abs(numeric), std::abs(grads[i])});
    }
    out[static_cast<std::size_t>(b)] = diff / scale;
  }
  return out;
}

}  // namespace gradcheck
