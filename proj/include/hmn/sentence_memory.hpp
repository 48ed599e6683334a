#pragma once

#include <span>
#include <vector>

#include "hmn/graph.hpp"
#include "hmn/model_params.hpp"

namespace hmn::model {

using diff::Graph;
using diff::NodeId;
using Sentences = std::vector<std::vector<int>>;

/// d x J matrix with entries l_gj = (1 - j/J) - (g/d)(1 - 2j/J), 1-based g, j.
diff::Tensor positional_encoding(std::size_t J, std::size_t d);

/// Input (a) and output (c) channel rows for every sentence, n x d each.
struct SentenceMemory {
  NodeId a;
  NodeId c;
  std::size_t hop = 1;
};

/// Row of the temporal matrix used for sentence i (0-based) of n.
/// Reverse mode puts the most recent sentence at row 0.
std::size_t temporal_row(TemporalMode mode, std::size_t i, std::size_t n);

/// Memory for hop r, rebuilt from the raw tokens with A^r, C^r, T_A^r, T_C^r.
SentenceMemory encode_sentences(Graph& g, ModelParams& params, const Sentences& sentences,
                                std::size_t hop);

/// u_1 = sum_j l_j * (A^1 q_j).
NodeId encode_query(Graph& g, ModelParams& params, std::span<const int> query);

struct HopResult {
  NodeId attention;   // alpha over sentences
  NodeId output;      // o_r
  NodeId next_probe;  // u_{r+1} = o_r + u_r
};

HopResult hop(Graph& g, NodeId probe, const SentenceMemory& memory);

struct ReasoningState {
  std::vector<NodeId> probes;      // u_1..u_R
  std::vector<NodeId> outputs;     // o_1..o_R
  std::vector<NodeId> attentions;  // alpha per hop
  NodeId readout;                  // o_R + u_R
  NodeId p_sent;                   // softmax((C^R)^T (o_R + u_R)) over the vocabulary
};

ReasoningState reason(Graph& g, ModelParams& params, const Sentences& sentences,
                      std::span<const int> query);

}  // namespace hmn::model
