#include "hmn/word_memory.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace hmn::model {
namespace {

struct GruNodes {
  NodeId Wz, Wr, Wh, Uz, Ur, Uh, bz, br, bh;
};

GruNodes bind(Graph& g, ModelParams& p, const GruIndices& ix) {
  return GruNodes{g.param(p.param(ix.Wz)), g.param(p.param(ix.Wr)), g.param(p.param(ix.Wh)),
                  g.param(p.param(ix.Uz)), g.param(p.param(ix.Ur)), g.param(p.param(ix.Uh)),
                  g.param(p.param(ix.bz)), g.param(p.param(ix.br)), g.param(p.param(ix.bh))};
}

// Input projections for every position at once: row t of xz is x_t^T Wz.
struct Projected {
  NodeId xz, xr, xh;
};

Projected project(Graph& g, const GruNodes& w, NodeId inputs) {
  return {g.matmul(inputs, w.Wz), g.matmul(inputs, w.Wr), g.matmul(inputs, w.Wh)};
}

NodeId gru_cell(Graph& g, const GruNodes& w, const Projected& x, int t, NodeId h) {
  const auto z = g.sigmoid(g.add(g.add(g.select_row(x.xz, t), g.matvec(w.Uz, h)), w.bz));
  const auto r = g.sigmoid(g.add(g.add(g.select_row(x.xr, t), g.matvec(w.Ur, h)), w.br));
  const auto n =
      g.tanh(g.add(g.add(g.select_row(x.xh, t), g.matvec(w.Uh, g.mul(r, h))), w.bh));
  return g.add(n, g.mul(z, g.sub(h, n)));
}

// Hidden state after each input, in input order; `reverse` runs right to left.
std::vector<NodeId> run_gru(Graph& g, const GruNodes& w, NodeId inputs, std::size_t length,
                            std::size_t d, bool reverse) {
  const auto x = project(g, w, inputs);
  std::vector<NodeId> hs(length);
  NodeId h = g.constant(diff::Tensor({d}));
  for (std::size_t s = 0; s < length; ++s) {
    const auto t = reverse ? length - 1 - s : s;
    h = gru_cell(g, w, x, static_cast<int>(t), h);
    hs[t] = h;
  }
  return hs;
}

}  // namespace

Selection kmax_select(std::span<const double> attention, std::size_t k,
                      const Sentences& sentences) {
  if (k == 0) throw std::invalid_argument("kmax_select: k must be >= 1");
  if (attention.size() != sentences.size()) {
    throw std::invalid_argument("kmax_select: attention length does not match sentence count");
  }
  std::vector<int> order(attention.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return attention[static_cast<std::size_t>(a)] > attention[static_cast<std::size_t>(b)];
  });
  order.resize(std::min(k, order.size()));
  std::sort(order.begin(), order.end());

  std::vector<std::size_t> offsets(sentences.size() + 1, 0);
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    offsets[i + 1] = offsets[i] + sentences[i].size();
  }
  Selection sel;
  sel.indices = order;
  for (int i : order) {
    const auto& s = sentences[static_cast<std::size_t>(i)];
    for (std::size_t j = 0; j < s.size(); ++j) {
      sel.word_positions.push_back(offsets[static_cast<std::size_t>(i)] + j);
      sel.word_ids.push_back(s[j]);
    }
  }
  return sel;
}

WordMemory encode_words(Graph& g, ModelParams& params, const Sentences& sentences) {
  const auto& cfg = params.config();
  if (sentences.empty()) throw std::invalid_argument("encode_words: no sentences");
  std::vector<int> ids;
  for (const auto& s : sentences) ids.insert(ids.end(), s.begin(), s.end());
  const auto CR = g.param(params.C(cfg.hops));
  const auto T = ids.size();
  WordMemory m;
  m.kind = cfg.encoder;
  if (cfg.encoder == EncoderKind::embedding) {
    for (int id : ids) m.rows.push_back(g.select_row(CR, id));
    return m;
  }
  const auto inputs = g.embedding_row_lookup(CR, ids);
  const auto fwd = run_gru(g, bind(g, params, *params.gru_forward()), inputs, T, cfg.dim, false);
  if (cfg.encoder == EncoderKind::gru) {
    m.rows = fwd;
    return m;
  }
  const auto bwd = run_gru(g, bind(g, params, *params.gru_backward()), inputs, T, cfg.dim, true);
  m.rows.reserve(T);
  for (std::size_t t = 0; t < T; ++t) m.rows.push_back(g.add(fwd[t], bwd[t]));
  return m;
}

NodeId word_attention(Graph& g, ModelParams& params, NodeId probe, const Selection& selection,
                      const WordMemory& memory) {
  if (selection.word_positions.empty()) {
    throw std::invalid_argument("word_attention: empty selection");
  }
  const auto v = g.param(params.att_v());
  const auto U = g.param(params.att_U());
  const auto Wu = g.matvec(g.param(params.att_W()), probe);
  std::vector<NodeId> scores;
  scores.reserve(selection.word_positions.size());
  for (auto t : selection.word_positions) {
    scores.push_back(g.inner_product(v, g.tanh(g.add(Wu, g.matvec(U, memory.rows.at(t))))));
  }
  return g.softmax(g.stack(scores));
}

NodeId trans(Graph& g, NodeId attention, std::span<const int> word_ids, std::size_t vocab_size) {
  return g.scatter_add(attention, word_ids, vocab_size);
}

std::vector<double> trans(std::span<const double> attention, std::span<const int> word_ids,
                          std::size_t vocab_size) {
  Graph g;
  const auto a = g.constant(diff::Tensor::vector({attention.begin(), attention.end()}));
  const auto p = trans(g, a, word_ids, vocab_size);
  const auto& v = g.value(p).data();
  return {v.begin(), v.end()};
}

}  // namespace hmn::model
