#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "hmn/gradcheck.hpp"
#include "hmn/sentence_memory.hpp"
#include "support.hpp"

using namespace hmn::model;
using hmn::diff::Tensor;

namespace {

ModelConfig tiny_config(std::size_t vocab = 30, std::size_t dim = 8, std::size_t hops = 3) {
  ModelConfig cfg;
  cfg.vocab_size = vocab;
  cfg.dim = dim;
  cfg.hops = hops;
  return cfg;
}

std::vector<double> values(const Graph& g, NodeId id) {
  const auto v = g.value(id).data();
  return {v.begin(), v.end()};
}

}  // namespace

TEST_SUITE("sentmem") {
  TEST_CASE("positional weights for a one-word sentence are g over d") {
    const auto l = positional_encoding(1, 5);
    for (std::size_t g = 1; g <= 5; ++g) CHECK(l.at(g - 1, 0) == doctest::Approx(g / 5.0));
  }

  TEST_CASE("first of two words has weight one half in every dimension") {
    const auto l = positional_encoding(2, 7);
    for (std::size_t g = 0; g < 7; ++g) CHECK(l.at(g, 0) == doctest::Approx(0.5).epsilon(1e-15));
  }

  TEST_CASE("hand evaluated d=2, J=3 matrix") {
    const auto l = positional_encoding(3, 2);
    // g=1 gives (1-j/3) - (1/2)(1-2j/3) = 1/2 for every j; g=2 gives j/3.
    const double expected[2][3] = {{0.5, 0.5, 0.5}, {1.0 / 3.0, 2.0 / 3.0, 1.0}};
    for (std::size_t g = 0; g < 2; ++g) {
      for (std::size_t j = 0; j < 3; ++j) {
        CHECK(l.at(g, j) == doctest::Approx(expected[g][j]).epsilon(1e-15));
      }
    }
  }

  TEST_CASE("positional weights match the closed form on random sizes") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 100; ++trial) {
      const auto J = hmn::testing::uniform_size(rng, 1, 18);
      const auto d = hmn::testing::uniform_size(rng, 1, 64);
      const auto l = positional_encoding(J, d);
      REQUIRE(l.shape() == hmn::diff::Shape{d, J});
      for (std::size_t g = 1; g <= d; ++g) {
        for (std::size_t j = 1; j <= J; ++j) {
          const double gd = double(g) / double(d), jJ = double(j) / double(J);
          CHECK(std::abs(l.at(g - 1, j - 1) - ((1 - jJ) - gd * (1 - 2 * jJ))) <= 1e-15);
        }
      }
    }
  }

  TEST_CASE("empty sentence length is rejected") {
    CHECK_THROWS_AS(positional_encoding(0, 4), std::invalid_argument);
  }

  TEST_CASE("one-token sentence memory is the scaled embedding plus the temporal row") {
    ModelParams p(tiny_config(), 3);
    Graph g;
    const auto m = encode_sentences(g, p, {{7}}, 1);
    const auto& a = g.value(m.a);
    const auto& c = g.value(m.c);
    const double d = 8.0;
    for (std::size_t k = 0; k < 8; ++k) {
      const double scale = double(k + 1) / d;
      CHECK(a.at(0, k) == doctest::Approx(scale * p.A(1).value.at(7, k) + p.TA(1).value.at(0, k)));
      CHECK(c.at(0, k) == doctest::Approx(scale * p.C(1).value.at(7, k) + p.TC(1).value.at(0, k)));
    }
  }

  TEST_CASE("zero embeddings isolate the reversed temporal rows") {
    ModelParams p(tiny_config(), 4);
    p.A(1).value.fill(0.0);
    Graph g;
    const Sentences s = {{1, 2}, {3}, {4, 5, 6}};
    const auto& a = g.value(encode_sentences(g, p, s, 1).a);
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t k = 0; k < 8; ++k) CHECK(a.at(i, k) == p.TA(1).value.at(2 - i, k));
    }
    CHECK(temporal_row(TemporalMode::reverse, 0, 3) == 2);
    CHECK(temporal_row(TemporalMode::forward, 0, 3) == 0);
  }

  TEST_CASE("without temporal encoding identical sentences give identical rows") {
    auto cfg = tiny_config();
    cfg.temporal = TemporalMode::off;
    ModelParams p(cfg, 5);
    CHECK_FALSE(p.has_temporal());
    Graph g;
    const auto& a = g.value(encode_sentences(g, p, {{3, 4}, {9}, {3, 4}}, 2).a);
    for (std::size_t k = 0; k < 8; ++k) CHECK(a.at(0, k) == a.at(2, k));
  }

  TEST_CASE("sentence memory rejects bad input") {
    ModelParams p(tiny_config(), 6);
    Graph g;
    CHECK_THROWS_AS(encode_sentences(g, p, {}, 1), std::invalid_argument);
    CHECK_THROWS_AS(encode_sentences(g, p, {{1}, {}}, 1), std::invalid_argument);
    CHECK_THROWS_AS(encode_sentences(g, p, Sentences(17, {1}), 1), std::invalid_argument);
    CHECK_THROWS_AS(encode_sentences(g, p, {{30}}, 1), std::out_of_range);
    CHECK_THROWS_AS(encode_sentences(g, p, {{1}}, 4), std::out_of_range);
  }

  TEST_CASE("query probe of one token is the scaled embedding row") {
    ModelParams p(tiny_config(), 7);
    Graph g;
    const auto& u = g.value(encode_query(g, p, std::vector<int>{11}));
    for (std::size_t k = 0; k < 8; ++k) {
      CHECK(u[k] == doctest::Approx(double(k + 1) / 8.0 * p.A(1).value.at(11, k)));
    }
  }

  TEST_CASE("zero query embedding gives a zero probe and order matters otherwise") {
    ModelParams p(tiny_config(), 8);
    {
      Graph g;
      const std::vector<int> q{2, 5};
      const std::vector<int> swapped{5, 2};
      CHECK_FALSE(g.value(encode_query(g, p, q)) == g.value(encode_query(g, p, swapped)));
    }
    p.A(1).value.fill(0.0);
    Graph g;
    for (double x : g.value(encode_query(g, p, std::vector<int>{1, 2, 3})).data()) CHECK(x == 0.0);
    CHECK_THROWS_AS(encode_query(g, p, std::vector<int>{}), std::invalid_argument);
  }

  TEST_CASE("hop attention examples") {
    Graph g;
    const auto u = g.constant(Tensor::vector({1.0, 0.0}));
    SUBCASE("single sentence") {
      SentenceMemory m{g.constant(Tensor::matrix(1, 2, {5, -3})),
                       g.constant(Tensor::matrix(1, 2, {2, 2})), 1};
      CHECK(g.value(hop(g, u, m).attention) == Tensor::vector({1.0}));
    }
    SUBCASE("orthogonal rows give uniform weights") {
      SentenceMemory m{g.constant(Tensor::matrix(3, 2, {0, 1, 0, -2, 0, 7})),
                       g.constant(Tensor({3, 2})), 1};
      for (double a : g.value(hop(g, u, m).attention).data()) {
        CHECK(a == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
      }
    }
    SUBCASE("logits ln 3 and 0") {
      SentenceMemory m{g.constant(Tensor::matrix(2, 2, {std::log(3.0), 0, 0, 0})),
                       g.constant(Tensor::matrix(2, 2, {4, 0, 0, 8})), 1};
      const auto h = hop(g, u, m);
      const auto& a = g.value(h.attention);
      CHECK(a[0] == doctest::Approx(0.75).epsilon(1e-14));
      CHECK(a[1] == doctest::Approx(0.25).epsilon(1e-14));
      CHECK(g.value(h.output) == Tensor::vector({3.0, 2.0}));
      CHECK(g.value(h.next_probe) == Tensor::vector({4.0, 2.0}));
    }
  }

  TEST_CASE("adjacent hops share storage") {
    ModelParams p(tiny_config(), 9);
    for (std::size_t r = 1; r < 3; ++r) {
      CHECK(&p.A(r + 1) == &p.C(r));
      CHECK(&p.TA(r + 1) == &p.TC(r));
    }
    CHECK(p.A(1).name == "A1");
    CHECK(p.C(3).name == "C3");
  }

  TEST_CASE("reasoning state invariants on random dialogues") {
    std::mt19937_64 rng(10);
    ModelParams p(tiny_config(40, 10, 3), 11);
    for (int trial = 0; trial < 50; ++trial) {
      const auto d = hmn::testing::random_dialogue(rng, 40, hmn::testing::uniform_size(rng, 1, 16), 6);
      Graph g;
      const auto st = reason(g, p, d.sentences, d.query);
      CHECK(std::abs(hmn::testing::sum(g.value(st.p_sent).data()) - 1.0) <= 1e-12);
      REQUIRE(st.probes.size() == 3);
      for (std::size_t r = 0; r < 3; ++r) {
        const auto alpha = values(g, st.attentions[r]);
        CHECK(std::abs(hmn::testing::sum(alpha) - 1.0) <= 1e-12);
        // o_r is the alpha-weighted combination of the output rows of hop r+1.
        Graph h;
        const auto& c = h.value(encode_sentences(h, p, d.sentences, r + 1).c);
        const auto& o = g.value(st.outputs[r]);
        for (std::size_t k = 0; k < 10; ++k) {
          double expect = 0.0, lo = 1e300, hi = -1e300;
          for (std::size_t i = 0; i < alpha.size(); ++i) {
            expect += alpha[i] * c.at(i, k);
            lo = std::min(lo, c.at(i, k));
            hi = std::max(hi, c.at(i, k));
          }
          CHECK(o[k] == doctest::Approx(expect).epsilon(1e-12));
          CHECK(o[k] >= lo - 1e-12);
          CHECK(o[k] <= hi + 1e-12);
        }
        const auto next = r + 1 < 3 ? g.value(st.probes[r + 1]) : g.value(st.readout);
        for (std::size_t k = 0; k < 10; ++k) {
          CHECK(next[k] == g.value(st.outputs[r])[k] + g.value(st.probes[r])[k]);
        }
      }
    }
  }

  TEST_CASE("one hop reasoning is a single hop plus readout") {
    ModelParams p(tiny_config(30, 8, 1), 12);
    const Sentences s = {{1, 2, 3}, {4, 5}, {6}};
    const std::vector<int> q = {7, 8};
    Graph g;
    const auto st = reason(g, p, s, q);
    Graph h;
    const auto u = encode_query(h, p, q);
    const auto step = hop(h, u, encode_sentences(h, p, s, 1));
    const auto logits = h.matvec(h.param(p.C(1)), step.next_probe);
    const auto expected = h.softmax(logits);
    const auto& a = g.value(st.p_sent);
    const auto& b = h.value(expected);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-15);
  }

  TEST_CASE("without temporal encoding sentence order does not matter") {
    auto cfg = tiny_config(30, 8, 3);
    cfg.temporal = TemporalMode::off;
    ModelParams p(cfg, 13);
    std::mt19937_64 rng(14);
    for (int trial = 0; trial < 30; ++trial) {
      auto d = hmn::testing::random_dialogue(rng, 30, 6, 5);
      auto permuted = d.sentences;
      std::shuffle(permuted.begin(), permuted.end(), rng);
      Graph g1, g2;
      const auto& a = g1.value(reason(g1, p, d.sentences, d.query).p_sent);
      const auto& b = g2.value(reason(g2, p, permuted, d.query).p_sent);
      for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-12);
    }
  }

  TEST_CASE("sentence path passes finite differences end to end") {
    ModelParams p(tiny_config(30, 8, 3), 15);
    for (auto& prm : p.store()) prm.value.scale_(hmn::testing::kCheckScale);
    std::mt19937_64 rng(16);
    const auto d = hmn::testing::random_dialogue(rng, 30, 4, 5);
    const auto results = hmn::diff::finite_diff_check_all(
        [&](Graph& g) {
          return g.cross_entropy(reason(g, p, d.sentences, d.query).p_sent, d.answer);
        },
        p.store(), hmn::testing::kCheckStep, 1e-4);
    CHECK(results.size() == 8);  // A1, C1..C3, TA1, TC1..TC3
    for (const auto& r : results) {
      INFO(r.leaf << " rel " << r.max_rel_error << " analytic " << r.analytic << " numeric "
                  << r.numeric);
      CHECK(r.passed());
    }
  }
}
