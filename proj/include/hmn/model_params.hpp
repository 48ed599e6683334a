#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "hmn/params.hpp"

namespace hmn::model {

enum class TemporalMode { off, forward, reverse };
enum class EncoderKind { bigru, gru, embedding };

std::string to_string(EncoderKind e);
EncoderKind parse_encoder(std::string_view s);
std::string to_string(TemporalMode t);

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t dim = 100;
  std::size_t hops = 3;
  std::size_t max_sentences = 16;
  TemporalMode temporal = TemporalMode::reverse;
  bool word_branch = false;
  EncoderKind encoder = EncoderKind::bigru;

  void validate() const;
};

/// Parameter indices of one GRU direction.
struct GruIndices {
  std::size_t Wz, Wr, Wh, Uz, Ur, Uh, bz, br, bh;
};

/// Every learnable array of the model, with adjacent weight tying built in:
/// embeddings are stored as E_0..E_R with A^1 = E_0, C^r = E_r and
/// A^{r+1} = C^r = E_r, so A^{r+1} and C^r are the same Parameter object.
/// Temporal matrices follow the same scheme.
class ModelParams {
 public:
  ModelParams(const ModelConfig& cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  diff::ParamStore& store() { return store_; }
  const diff::ParamStore& store() const { return store_; }

  // hop index r is 1-based, 1 <= r <= hops
  diff::Parameter& A(std::size_t r);
  diff::Parameter& C(std::size_t r);
  diff::Parameter& TA(std::size_t r);
  diff::Parameter& TC(std::size_t r);
  bool has_temporal() const { return !temporal_.empty(); }

  const std::optional<GruIndices>& gru_forward() const { return gru_fwd_; }
  const std::optional<GruIndices>& gru_backward() const { return gru_bwd_; }
  diff::Parameter& param(std::size_t index) { return store_[index]; }

  diff::Parameter& att_v();
  diff::Parameter& att_W();
  diff::Parameter& att_U();

 private:
  std::size_t add(const std::string& name, diff::Shape shape, std::uint64_t seed);
  GruIndices add_gru(const std::string& prefix, std::uint64_t seed);
  void check_hop(std::size_t r) const;

  ModelConfig cfg_;
  diff::ParamStore store_;
  std::vector<std::size_t> embeddings_;
  std::vector<std::size_t> temporal_;
  std::optional<GruIndices> gru_fwd_, gru_bwd_;
  std::optional<std::size_t> att_v_, att_W_, att_U_;
};

}  // namespace hmn::model
