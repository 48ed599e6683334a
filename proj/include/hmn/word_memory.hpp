#pragma once

#include <span>
#include <vector>

#include "hmn/sentence_memory.hpp"

namespace hmn::model {

/// Sentences kept by k-max pooling, in temporal order, and the words they
/// contribute. word_positions index the concatenation of all sentences.
struct Selection {
  std::vector<int> indices;
  std::vector<std::size_t> word_positions;
  std::vector<int> word_ids;
};

/// The min(k, n) sentences with the largest attention; ties go to the
/// smaller temporal index. Throws when k == 0.
Selection kmax_select(std::span<const double> attention, std::size_t k,
                      const Sentences& sentences);

/// One row m_t per word of the whole dialogue (sentences concatenated).
struct WordMemory {
  std::vector<NodeId> rows;
  EncoderKind kind = EncoderKind::bigru;
};

/// bigru: m_t = forward state + backward state; gru: forward state only;
/// embedding: m_t = C^R row. Initial hidden states are zero and the cell is
///   z = sig(x Wz + Uz h + bz), r = sig(x Wr + Ur h + br),
///   n = tanh(x Wh + Uh (r * h) + bh), h' = (1 - z) * n + z * h,
/// with x a row vector, so input projections of all positions are one product.
WordMemory encode_words(Graph& g, ModelParams& params, const Sentences& sentences);

/// softmax over selected positions of v^T tanh(W u + U m_t).
NodeId word_attention(Graph& g, ModelParams& params, NodeId probe, const Selection& selection,
                      const WordMemory& memory);

/// Scatters position weights onto vocabulary ids, summing repeated words.
NodeId trans(Graph& g, NodeId attention, std::span<const int> word_ids, std::size_t vocab_size);
std::vector<double> trans(std::span<const double> attention, std::span<const int> word_ids,
                          std::size_t vocab_size);

}  // namespace hmn::model
