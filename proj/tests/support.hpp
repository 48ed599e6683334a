#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "hmn/generator.hpp"
#include "hmn/graph.hpp"
#include "hmn/trainer.hpp"

namespace hmn::testing {

inline std::vector<double> uniform_vector(std::mt19937_64& rng, std::size_t n, double lo = -1.0,
                                          double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

inline diff::Tensor random_tensor(std::mt19937_64& rng, diff::Shape shape, double lo = -1.0,
                                  double hi = 1.0) {
  const auto n = diff::shape_size(shape);
  return diff::Tensor(std::move(shape), uniform_vector(rng, n, lo, hi));
}

inline std::size_t uniform_size(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

/// Random simplex point of length n.
inline std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t n) {
  auto v = uniform_vector(rng, n, 0.01, 1.0);
  double s = 0.0;
  for (double x : v) s += x;
  for (auto& x : v) x /= s;
  return v;
}

/// Random dialogue in ids: n sentences of length 1..max_len over ids 1..vocab-1.
inline data::EncodedDialogue random_dialogue(std::mt19937_64& rng, std::size_t vocab,
                                             std::size_t n, std::size_t max_len) {
  data::EncodedDialogue d;
  std::uniform_int_distribution<int> id(1, static_cast<int>(vocab) - 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<int> s(uniform_size(rng, 1, max_len));
    for (auto& t : s) t = id(rng);
    d.sentences.push_back(std::move(s));
  }
  d.query.resize(uniform_size(rng, 1, max_len));
  for (auto& t : d.query) t = id(rng);
  d.answer_sentence = static_cast<int>(uniform_size(rng, 0, n - 1));
  const auto& src = d.sentences[static_cast<std::size_t>(d.answer_sentence)];
  d.answer = src[uniform_size(rng, 0, src.size() - 1)];
  return d;
}

inline double sum(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

/// Finite-difference settings for whole-model checks. At the training init
/// (std 0.1) many recurrent and attention gradients of a d=8 model sit near
/// 1e-9, below what central differences on an O(1) loss can resolve, so the
/// checks run at parameters scaled up threefold.
inline constexpr double kCheckStep = 1e-4;
inline constexpr double kCheckScale = 3.0;

inline model::ModelParams check_instance(train::VariantKind variant, std::uint64_t seed,
                                         std::size_t vocab = 30, std::size_t dim = 8,
                                         model::EncoderKind encoder = model::EncoderKind::bigru) {
  train::HyperParams hp;
  hp.dim = dim;
  hp.encoder = encoder;
  model::ModelParams p(train::model_config(variant, hp, vocab), seed);
  for (auto& prm : p.store()) prm.value.scale_(kCheckScale);
  return p;
}

/// Small corpus configuration that generates in well under a second.
inline data::CorpusConfig small_corpus_config(std::uint64_t seed, std::size_t train = 200,
                                              std::size_t dev = 40, std::size_t test = 200) {
  data::CorpusConfig cfg;
  cfg.train = train;
  cfg.dev = dev;
  cfg.test = test;
  cfg.default_pool_size = 400;
  cfg.seed = seed;
  return cfg;
}

}  // namespace hmn::testing
