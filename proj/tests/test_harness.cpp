#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "hmn/harness.hpp"
#include "support.hpp"

using namespace hmn;
using train::Readout;
using train::VariantKind;

namespace {

const harness::PreparedCorpus& tiny_corpus() {
  static const harness::PreparedCorpus c = [] {
    auto cfg = testing::small_corpus_config(60, 60, 10, 40);
    return harness::prepare(data::generate_corpus(cfg).corpus);
  }();
  return c;
}

train::HyperParams tiny_hp() {
  train::HyperParams hp;
  hp.dim = 8;
  hp.k = 2;
  hp.epochs = 1;
  hp.batch_size = 10;
  return hp;
}

// Skips training: returns freshly initialized parameters.
train::TrainResult untrained(std::span<const data::EncodedDialogue>, std::size_t vocab,
                             const train::HyperParams& hp, VariantKind v) {
  return {model::ModelParams(train::model_config(v, hp, vocab), hp.seed), {}};
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("unseen flags match a recount against training answers") {
    const auto& c = tiny_corpus();
    std::set<int> train_answers;
    for (const auto& ex : c.train) train_answers.insert(ex.answer);
    for (const auto* split : {&c.dev, &c.test}) {
      REQUIRE(split->unseen.size() == split->examples.size());
      for (std::size_t i = 0; i < split->examples.size(); ++i) {
        CHECK(split->unseen[i] == !train_answers.count(split->examples[i].answer));
      }
    }
    CHECK_THROWS_AS(c.split("train"), std::invalid_argument);
  }

  TEST_CASE("error counting") {
    const auto& split = tiny_corpus().test;
    const auto oracle = harness::evaluate(split, [](const auto& ex) { return ex.answer; });
    CHECK(oracle.errors == 0);
    CHECK(oracle.total == split.examples.size());
    CHECK(oracle.unseen_accuracy() == 1.0);

    const int constant = split.examples.front().answer;
    std::size_t expected = 0, unseen_expected = 0;
    for (std::size_t i = 0; i < split.examples.size(); ++i) {
      if (split.examples[i].answer != constant) {
        ++expected;
        if (split.unseen[i]) ++unseen_expected;
      }
    }
    const auto fixed = harness::evaluate(split, [&](const auto&) { return constant; });
    CHECK(fixed.errors == expected);
    CHECK(fixed.unseen_errors == unseen_expected);
    CHECK(fixed.errors <= fixed.total);
    CHECK(fixed.records.size() == split.examples.size());
  }

  TEST_CASE("error count does not depend on example order") {
    auto split = tiny_corpus().test;
    const auto predict = [](const data::EncodedDialogue& ex) {
      return ex.answer % 3 == 0 ? ex.answer : -1;
    };
    const auto before = harness::evaluate(split, predict);
    std::mt19937_64 rng(61);
    std::vector<std::size_t> perm(split.examples.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    harness::PreparedSplit shuffled;
    for (auto i : perm) {
      shuffled.examples.push_back(split.examples[i]);
      shuffled.unseen.push_back(split.unseen[i]);
    }
    const auto after = harness::evaluate(shuffled, predict);
    CHECK(after.errors == before.errors);
    CHECK(after.unseen_errors == before.unseen_errors);
  }

  TEST_CASE("aggregation uses the sample standard deviation") {
    const auto zero = harness::aggregate({0, 0, 0, 0, 0});
    CHECK(zero.mean == 0.0);
    CHECK(zero.stddev == 0.0);
    const auto two = harness::aggregate({2, 4});
    CHECK(two.mean == 3.0);
    CHECK(two.stddev == doctest::Approx(std::sqrt(2.0)));
    CHECK(harness::aggregate({5}).stddev == 0.0);
  }

  TEST_CASE("experiments train HMN once per seed and report three readouts") {
    std::vector<std::pair<VariantKind, std::uint64_t>> calls;
    harness::ExperimentConfig cfg;
    cfg.hp = tiny_hp();
    cfg.variants = {VariantKind::memnn, VariantKind::hmn};
    cfg.runs = 2;
    cfg.base_seed = 7;
    cfg.train_fn = [&](auto examples, auto vocab, const auto& hp, auto v) {
      calls.emplace_back(v, hp.seed);
      return untrained(examples, vocab, hp, v);
    };
    const auto report = harness::run_experiment(tiny_corpus(), cfg);
    CHECK(calls.size() == 4);
    CHECK(calls[0].second == 7);
    CHECK(calls[1].second == 8);
    REQUIRE(report.rows.size() == 4);
    CHECK(report.rows[0].name == "MemNN");
    CHECK(report.rows[1].name == "HMN-Sent");
    CHECK(report.rows[2].name == "HMN-Word");
    CHECK(report.rows[3].name == "HMN-Joint");
    for (const auto& row : report.rows) {
      CHECK(row.valid());
      CHECK(row.errors.raw.size() == 2);
      for (double e : row.errors.raw) CHECK(e <= double(report.split_size));
    }
    CHECK(report.split_size == tiny_corpus().test.examples.size());
    CHECK_THROWS_AS(report.row("MemNN-H1"), std::out_of_range);
  }

  TEST_CASE("a failing run is isolated in its own rows") {
    harness::ExperimentConfig cfg;
    cfg.hp = tiny_hp();
    cfg.variants = {VariantKind::memnn_h1, VariantKind::memnn_nt};
    cfg.runs = 3;
    cfg.train_fn = [](auto examples, auto vocab, const auto& hp, auto v) {
      if (v == VariantKind::memnn_h1 && hp.seed == 2) throw std::runtime_error("diverged");
      return untrained(examples, vocab, hp, v);
    };
    const auto report = harness::run_experiment(tiny_corpus(), cfg);
    const auto& h1 = report.row("MemNN-H1");
    CHECK_FALSE(h1.valid());
    REQUIRE(h1.failures.size() == 1);
    CHECK(h1.failures[0].find("diverged") != std::string::npos);
    CHECK(h1.errors.raw.size() == 2);
    CHECK(report.row("MemNN-NT").valid());
    CHECK(report.row("MemNN-NT").errors.raw.size() == 3);
    CHECK(harness::format_table(report).find("MemNN-H1") != std::string::npos);
  }

  TEST_CASE("reports round trip through JSON") {
    harness::ExperimentConfig cfg;
    cfg.hp = tiny_hp();
    cfg.variants = {VariantKind::memnn_h1, VariantKind::hmn};
    cfg.runs = 2;
    cfg.train_fn = untrained;
    const auto report = harness::run_experiment(tiny_corpus(), cfg);
    const auto j = harness::to_json(report);
    const auto back = harness::report_from_json(j);
    CHECK(harness::to_json(back) == j);
    CHECK(back.hp == report.hp);
    CHECK(back.rows.size() == report.rows.size());
    auto bad = j;
    bad["version"] = 99;
    CHECK_THROWS(harness::report_from_json(bad));
  }

  TEST_CASE("identical seeds and settings give identical reports") {
    harness::ExperimentConfig cfg;
    cfg.hp = tiny_hp();
    cfg.variants = {VariantKind::memnn, VariantKind::hmn};
    cfg.runs = 2;
    const auto a = harness::run_experiment(tiny_corpus(), cfg);
    const auto b = harness::run_experiment(tiny_corpus(), cfg);
    CHECK(harness::to_json(a).dump() == harness::to_json(b).dump());
  }

  TEST_CASE("sweep covers every k and encoder") {
    const auto table = harness::k_sweep(tiny_corpus(), tiny_hp(), {1, 3},
                                        {model::EncoderKind::bigru, model::EncoderKind::embedding},
                                        1, 1);
    REQUIRE(table.rows.size() == 12);
    std::set<std::pair<std::size_t, model::EncoderKind>> cells;
    for (const auto& row : table.rows) {
      CHECK(row.variant == VariantKind::hmn);
      cells.insert({row.k, row.encoder});
    }
    CHECK(cells.size() == 4);
  }

  TEST_CASE("evaluation refuses a model trained on another vocabulary") {
    const auto& c = tiny_corpus();
    auto hp = tiny_hp();
    auto trained = untrained(c.train, c.vocab.size(), hp, VariantKind::memnn);
    train::SavedModel info{VariantKind::memnn, hp, c.vocab.size(), c.vocab.fingerprint() + 1};
    CHECK_THROWS_AS(harness::evaluate_model(trained.params, info, c.vocab, c.test),
                    harness::VocabularyMismatch);
    info.vocab_fingerprint = c.vocab.fingerprint();
    info.vocab_size = c.vocab.size() + 1;
    CHECK_THROWS_AS(harness::evaluate_model(trained.params, info, c.vocab, c.test),
                    harness::VocabularyMismatch);
  }

  TEST_CASE("attention traces are consistent and round trip") {
    const auto raw = data::generate_corpus(testing::small_corpus_config(62, 20, 2, 20)).corpus;
    const auto vocab = data::build_vocabulary(raw);
    auto hp = tiny_hp();
    hp.k = 3;
    auto params = testing::check_instance(VariantKind::hmn, 63, vocab.size());
    for (const auto& d : raw.test) {
      const auto t = harness::trace(d, vocab, params, hp);
      const auto n = d.sentences.size();
      REQUIRE(t.hop_attention.size() == hp.hops);
      for (const auto& row : t.hop_attention) {
        CHECK(row.size() == n);
        CHECK(std::abs(testing::sum(row) - 1.0) <= 1e-9);
      }
      CHECK(t.sentence_index.front() == n);
      CHECK(t.sentence_index.back() == 1);

      // The selected sentences hold the k largest final-hop weights.
      const auto& last = t.hop_attention.back();
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return last[a] > last[b]; });
      std::set<std::size_t> expected;
      for (std::size_t i = 0; i < std::min(hp.k, n); ++i) expected.insert(n - order[i]);
      CHECK(std::set<std::size_t>(t.selected.begin(), t.selected.end()) == expected);

      double mass = 0.0;
      for (const auto& w : t.words) {
        CHECK(expected.count(w.sentence) == 1);
        mass += w.weight;
      }
      CHECK(std::abs(mass - 1.0) <= 1e-9);
      CHECK(harness::trace_from_json(harness::to_json(t)) == t);
    }
    auto memnn = testing::check_instance(VariantKind::memnn, 64, vocab.size());
    CHECK_THROWS_AS(harness::trace(raw.test.front(), vocab, memnn, hp), std::invalid_argument);
  }
}
