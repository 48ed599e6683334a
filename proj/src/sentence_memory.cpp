#include "hmn/sentence_memory.hpp"

#include <map>
#include <stdexcept>
#include <string>

namespace hmn::model {
namespace {

// Positional weights laid out like the gathered embedding rows (J x d).
const diff::Tensor& positional_rows(std::size_t J, std::size_t d) {
  thread_local std::map<std::pair<std::size_t, std::size_t>, diff::Tensor> cache;
  auto [it, fresh] = cache.try_emplace({J, d});
  if (fresh) {
    const auto l = positional_encoding(J, d);
    diff::Tensor w({J, d});
    for (std::size_t j = 0; j < J; ++j) {
      for (std::size_t g = 0; g < d; ++g) w.at(j, g) = l.at(g, j);
    }
    it->second = std::move(w);
  }
  return it->second;
}

NodeId bag(Graph& g, NodeId table, std::span<const int> ids, std::size_t d) {
  const auto rows = g.embedding_row_lookup(table, ids);
  const auto weights = g.constant(positional_rows(ids.size(), d));
  return g.sum_rows(g.mul(rows, weights));
}

}  // namespace

diff::Tensor positional_encoding(std::size_t J, std::size_t d) {
  if (J == 0) throw std::invalid_argument("positional_encoding: empty sentence (J = 0)");
  if (d == 0) throw std::invalid_argument("positional_encoding: d = 0");
  diff::Tensor l({d, J});
  const double Jd = static_cast<double>(J);
  const double dd = static_cast<double>(d);
  for (std::size_t g = 1; g <= d; ++g) {
    for (std::size_t j = 1; j <= J; ++j) {
      const double jj = static_cast<double>(j);
      l.at(g - 1, j - 1) = (1.0 - jj / Jd) - (static_cast<double>(g) / dd) * (1.0 - 2.0 * jj / Jd);
    }
  }
  return l;
}

std::size_t temporal_row(TemporalMode mode, std::size_t i, std::size_t n) {
  return mode == TemporalMode::reverse ? n - 1 - i : i;
}

SentenceMemory encode_sentences(Graph& g, ModelParams& params, const Sentences& sentences,
                                std::size_t hop) {
  const auto& cfg = params.config();
  const auto n = sentences.size();
  if (n == 0) throw std::invalid_argument("encode_sentences: no sentences");
  if (n > cfg.max_sentences) {
    throw std::invalid_argument("encode_sentences: " + std::to_string(n) +
                                " sentences exceed the temporal capacity " +
                                std::to_string(cfg.max_sentences));
  }
  const auto A = g.param(params.A(hop));
  const auto C = g.param(params.C(hop));
  const bool temporal = cfg.temporal != TemporalMode::off;
  NodeId TA{}, TC{};
  if (temporal) {
    TA = g.param(params.TA(hop));
    TC = g.param(params.TC(hop));
  }
  std::vector<NodeId> a_rows, c_rows;
  a_rows.reserve(n);
  c_rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = sentences[i];
    if (s.empty()) {
      throw std::invalid_argument("encode_sentences: sentence " + std::to_string(i) + " is empty");
    }
    auto a = bag(g, A, s, cfg.dim);
    auto c = bag(g, C, s, cfg.dim);
    if (temporal) {
      const int row = static_cast<int>(temporal_row(cfg.temporal, i, n));
      a = g.add(a, g.select_row(TA, row));
      c = g.add(c, g.select_row(TC, row));
    }
    a_rows.push_back(a);
    c_rows.push_back(c);
  }
  return SentenceMemory{g.stack(a_rows), g.stack(c_rows), hop};
}

NodeId encode_query(Graph& g, ModelParams& params, std::span<const int> query) {
  if (query.empty()) throw std::invalid_argument("encode_query: empty query");
  return bag(g, g.param(params.A(1)), query, params.config().dim);
}

HopResult hop(Graph& g, NodeId probe, const SentenceMemory& memory) {
  HopResult h;
  h.attention = g.softmax(g.matvec(memory.a, probe));
  h.output = g.matvec_transposed(memory.c, h.attention);
  h.next_probe = g.add(h.output, probe);
  return h;
}

ReasoningState reason(Graph& g, ModelParams& params, const Sentences& sentences,
                      std::span<const int> query) {
  const auto R = params.config().hops;
  ReasoningState st;
  NodeId u = encode_query(g, params, query);
  for (std::size_t r = 1; r <= R; ++r) {
    const auto memory = encode_sentences(g, params, sentences, r);
    const auto h = hop(g, u, memory);
    st.probes.push_back(u);
    st.outputs.push_back(h.output);
    st.attentions.push_back(h.attention);
    u = h.next_probe;
  }
  st.readout = u;
  st.p_sent = g.softmax(g.matvec(g.param(params.C(R)), st.readout));
  return st;
}

}  // namespace hmn::model
