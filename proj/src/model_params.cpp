#include "hmn/model_params.hpp"

#include <stdexcept>

namespace hmn::model {

std::string to_string(EncoderKind e) {
  switch (e) {
    case EncoderKind::bigru: return "bigru";
    case EncoderKind::gru: return "gru";
    case EncoderKind::embedding: return "embedding";
  }
  return "?";
}

EncoderKind parse_encoder(std::string_view s) {
  if (s == "bigru") return EncoderKind::bigru;
  if (s == "gru") return EncoderKind::gru;
  if (s == "embedding") return EncoderKind::embedding;
  throw std::invalid_argument("unknown encoder '" + std::string(s) + "'");
}

std::string to_string(TemporalMode t) {
  switch (t) {
    case TemporalMode::off: return "off";
    case TemporalMode::forward: return "forward";
    case TemporalMode::reverse: return "reverse";
  }
  return "?";
}

void ModelConfig::validate() const {
  if (vocab_size < 1) throw std::invalid_argument("vocab_size must be >= 1");
  if (dim < 1) throw std::invalid_argument("dim must be >= 1");
  if (hops < 1) throw std::invalid_argument("hops must be >= 1");
  if (max_sentences < 1) throw std::invalid_argument("max_sentences must be >= 1");
}

ModelParams::ModelParams(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  const auto V = cfg_.vocab_size;
  const auto d = cfg_.dim;
  embeddings_.push_back(add("A1", {V, d}, seed));
  for (std::size_t r = 1; r <= cfg_.hops; ++r) {
    embeddings_.push_back(add("C" + std::to_string(r), {V, d}, seed));
  }
  if (cfg_.temporal != TemporalMode::off) {
    temporal_.push_back(add("TA1", {cfg_.max_sentences, d}, seed));
    for (std::size_t r = 1; r <= cfg_.hops; ++r) {
      temporal_.push_back(add("TC" + std::to_string(r), {cfg_.max_sentences, d}, seed));
    }
  }
  if (cfg_.word_branch) {
    if (cfg_.encoder == EncoderKind::bigru || cfg_.encoder == EncoderKind::gru) {
      gru_fwd_ = add_gru("gru_fwd", seed);
    }
    if (cfg_.encoder == EncoderKind::bigru) gru_bwd_ = add_gru("gru_bwd", seed);
    att_v_ = add("att_v", {d}, seed);
    att_W_ = add("att_W", {d, d}, seed);
    att_U_ = add("att_U", {d, d}, seed);
  }
}

std::size_t ModelParams::add(const std::string& name, diff::Shape shape, std::uint64_t seed) {
  const auto index = store_.size();
  return store_.add(name, diff::init_gaussian(shape, diff::mix_seed(seed, index)));
}

GruIndices ModelParams::add_gru(const std::string& prefix, std::uint64_t seed) {
  const auto d = cfg_.dim;
  GruIndices g{};
  g.Wz = add(prefix + ".Wz", {d, d}, seed);
  g.Wr = add(prefix + ".Wr", {d, d}, seed);
  g.Wh = add(prefix + ".Wh", {d, d}, seed);
  g.Uz = add(prefix + ".Uz", {d, d}, seed);
  g.Ur = add(prefix + ".Ur", {d, d}, seed);
  g.Uh = add(prefix + ".Uh", {d, d}, seed);
  g.bz = add(prefix + ".bz", {d}, seed);
  g.br = add(prefix + ".br", {d}, seed);
  g.bh = add(prefix + ".bh", {d}, seed);
  return g;
}

void ModelParams::check_hop(std::size_t r) const {
  if (r < 1 || r > cfg_.hops) {
    throw std::out_of_range("hop " + std::to_string(r) + " outside 1.." +
                            std::to_string(cfg_.hops));
  }
}

diff::Parameter& ModelParams::A(std::size_t r) {
  check_hop(r);
  return store_[embeddings_[r - 1]];
}

diff::Parameter& ModelParams::C(std::size_t r) {
  check_hop(r);
  return store_[embeddings_[r]];
}

diff::Parameter& ModelParams::TA(std::size_t r) {
  check_hop(r);
  if (temporal_.empty()) throw std::logic_error("model built without temporal encoding");
  return store_[temporal_[r - 1]];
}

diff::Parameter& ModelParams::TC(std::size_t r) {
  check_hop(r);
  if (temporal_.empty()) throw std::logic_error("model built without temporal encoding");
  return store_[temporal_[r]];
}

diff::Parameter& ModelParams::att_v() {
  if (!att_v_) throw std::logic_error("model built without word branch");
  return store_[*att_v_];
}

diff::Parameter& ModelParams::att_W() {
  if (!att_W_) throw std::logic_error("model built without word branch");
  return store_[*att_W_];
}

diff::Parameter& ModelParams::att_U() {
  if (!att_U_) throw std::logic_error("model built without word branch");
  return store_[*att_U_];
}

}  // namespace hmn::model
