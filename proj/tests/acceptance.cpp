// Acceptance suite: one PASS/FAIL line per criterion on stdout, progress on
// stderr. Criteria 5-7 train full-size models and dominate the runtime.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "hmn/checkpoint.hpp"
#include "hmn/corpus_io.hpp"
#include "hmn/gradcheck.hpp"
#include "hmn/harness.hpp"
#include "hmn/word_memory.hpp"
#include "support.hpp"

using namespace hmn;
using train::VariantKind;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x, int precision = 3) {
  std::ostringstream os;
  os.precision(precision);
  os << x;
  return os.str();
}

std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::vector<data::EncodedDialogue> random_examples(std::uint64_t seed, std::size_t count,
                                                   std::size_t vocab, std::size_t max_n) {
  std::mt19937_64 rng(seed);
  std::vector<data::EncodedDialogue> out;
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(testing::random_dialogue(rng, vocab, testing::uniform_size(rng, 1, max_n), 5));
  }
  return out;
}

Outcome gradient_check() {
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::string worst_leaf;
  std::set<std::string> checked;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto p = testing::check_instance(VariantKind::hmn, 100 + seed);
    std::mt19937_64 rng(200 + seed);
    const auto d = testing::random_dialogue(rng, 30, 4, 5);
    const auto results = diff::finite_diff_check_all(
        [&](model::Graph& g) {
          return g.cross_entropy(train::build_forward(g, p, d, 2, VariantKind::hmn).p_joint,
                                 d.answer);
        },
        p.store(), testing::kCheckStep, 1e-4);
    for (const auto& r : results) {
      checked.insert(r.leaf);
      if (!r.passed()) {
        return {false, r.leaf + " " + diff::to_string(r.status) + " rel " + fmt(r.max_rel_error)};
      }
      if (r.max_rel_error > worst) {
        worst = r.max_rel_error;
        worst_leaf = r.leaf;
      }
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool pass = checked.size() == 29 && secs < 60.0;
  return {pass, std::to_string(checked.size()) + " parameters, worst rel " + fmt(worst) + " (" +
                    worst_leaf + "), " + fmt(secs) + " s"};
}

Outcome pointer_oracle() {
  std::mt19937_64 rng(300);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::size_t vocab = testing::uniform_size(rng, 2, 50);
    std::size_t len = testing::uniform_size(rng, 1, 40);
    std::vector<double> w;
    std::vector<int> ids;
    if (trial == 0) {
      vocab = 10;
      w = {0.1, 0.6, 0.3};
      ids = {7, 2, 7};
    } else {
      w = testing::random_simplex(rng, len);
      ids.resize(len);
      // Few distinct ids so duplicates are common.
      const auto distinct = testing::uniform_size(rng, 1, std::min<std::size_t>(vocab, 6));
      for (auto& id : ids) id = static_cast<int>(testing::uniform_size(rng, 0, distinct - 1));
    }
    std::vector<double> oracle(vocab, 0.0);
    for (std::size_t v = 0; v < vocab; ++v) {
      for (std::size_t t = 0; t < ids.size(); ++t) {
        if (ids[t] == static_cast<int>(v)) oracle[v] += w[t];
      }
    }
    const auto fast = model::trans(w, ids, vocab);
    for (std::size_t v = 0; v < vocab; ++v) worst = std::max(worst, std::abs(fast[v] - oracle[v]));
  }
  const auto dup = model::trans(std::vector<double>{0.1, 0.6, 0.3}, std::vector<int>{7, 2, 7}, 10);
  const bool pass = worst <= 1e-12 && std::abs(dup[7] - 0.4) <= 1e-12;
  return {pass, "max deviation " + fmt(worst) + ", duplicate case " + fmt(dup[7], 17)};
}

Outcome distribution_invariants() {
  std::mt19937_64 rng(400);
  double worst = 0.0;
  std::size_t support_violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto vocab = testing::uniform_size(rng, 5, 60);
    const auto dim = testing::uniform_size(rng, 2, 12);
    const auto k = testing::uniform_size(rng, 1, 8);
    auto p = testing::check_instance(VariantKind::hmn, 500 + trial, vocab, dim);
    const auto d = testing::random_dialogue(rng, vocab, testing::uniform_size(rng, 1, 16), 8);
    const auto b = train::forward_example(p, d, k, VariantKind::hmn);
    for (const auto* dist : {&b.p_sent, &b.p_word, &b.p_joint}) {
      worst = std::max(worst, std::abs(testing::sum(*dist) - 1.0));
    }
    const std::set<int> selected(b.selection.word_ids.begin(), b.selection.word_ids.end());
    for (std::size_t v = 0; v < b.p_word.size(); ++v) {
      if (b.p_word[v] != 0.0 && !selected.count(static_cast<int>(v))) ++support_violations;
    }
  }
  return {worst <= 1e-9 && support_violations == 0,
          "max |sum - 1| " + fmt(worst) + ", support violations " +
              std::to_string(support_violations)};
}

Outcome memnn_reduction() {
  double worst = 0.0;
  std::size_t disagreements = 0;
  auto hmn_params = testing::check_instance(VariantKind::hmn, 600, 40, 10);
  auto memnn_params = testing::check_instance(VariantKind::memnn, 601, 40, 10);
  for (auto& prm : memnn_params.store()) prm.value = hmn_params.store().get(prm.name).value;
  for (const auto& ex : random_examples(602, 100, 40, 16)) {
    const auto a = train::forward_example(hmn_params, ex, 4, VariantKind::hmn);
    const auto b = train::forward_example(memnn_params, ex, 4, VariantKind::memnn);
    for (std::size_t v = 0; v < a.p_sent.size(); ++v) {
      worst = std::max(worst, std::abs(a.p_sent[v] - b.p_sent[v]));
    }
    if (train::argmax(a.p_sent) != train::argmax(b.p_sent)) ++disagreements;
  }
  return {worst <= 1e-12 && disagreements == 0, "max deviation " + fmt(worst)};
}

/// The corpus shared by criteria 5-7.
data::CorpusConfig experiment_corpus_config() {
  data::CorpusConfig cfg;
  cfg.domain = data::DomainChoice::air_ticket;
  cfg.train = 1000;
  cfg.dev = 200;
  cfg.test = 1000;
  cfg.unseen_answer_target = 0.57;
  cfg.seed = 7;
  return cfg;
}

train::GradReduction g_reduction = train::GradReduction::mean;

train::HyperParams experiment_hp() {
  train::HyperParams hp;
  hp.grad_reduction = g_reduction;
  hp.dim = 50;
  hp.hops = 3;
  hp.k = 4;
  hp.epochs = 30;
  return hp;
}

double rate(double errors, std::size_t total) {
  return total == 0 ? 0.0 : errors / static_cast<double>(total);
}

struct Experiments {
  harness::PreparedCorpus corpus;
  std::optional<harness::ExperimentReport> table;
};

harness::ProgressFn progress_to_stderr(const std::string& tag) {
  return [tag](const std::string& msg) { std::cerr << "[" << tag << "] " << msg << std::endl; };
}

Outcome table_ordering(Experiments& ex, std::size_t runs) {
  harness::ExperimentConfig cfg;
  cfg.hp = experiment_hp();
  cfg.variants = {VariantKind::memnn_h1, VariantKind::memnn_nt, VariantKind::memnn,
                  VariantKind::hmn};
  cfg.runs = runs;
  ex.table = harness::run_experiment(ex.corpus, cfg, progress_to_stderr("table"));
  const auto& r = *ex.table;
  std::cerr << harness::format_table(r);
  for (const auto& row : r.rows) {
    if (!row.valid()) return {false, row.name + " failed: " + row.failures.front()};
  }
  const auto mean = [&](const char* name) { return r.row(name).errors.mean; };
  const bool ordered = mean("HMN-Joint") <= mean("HMN-Word") &&
                       mean("HMN-Word") < mean("MemNN") && mean("MemNN") < mean("MemNN-NT") &&
                       mean("MemNN-NT") < mean("MemNN-H1");
  const double joint_rate = rate(mean("HMN-Joint"), r.split_size);
  std::string detail = "mean errors";
  for (const char* name : {"HMN-Joint", "HMN-Word", "MemNN", "MemNN-NT", "MemNN-H1"}) {
    detail += std::string(" ") + name + "=" + fmt(mean(name), 4);
  }
  detail += ", HMN-Joint error rate " + fmt(100.0 * joint_rate) + "%";
  return {ordered && joint_rate <= 0.05, detail};
}

Outcome unseen_capability(Experiments& ex, std::size_t runs) {
  if (!ex.table) table_ordering(ex, runs);
  const auto& r = *ex.table;
  if (r.unseen_size == 0) return {false, "no unseen answers in the test split"};
  std::string detail;
  bool pass = true;
  for (const char* name : {"HMN-Word", "HMN-Joint"}) {
    const auto& row = r.row(name);
    if (!row.valid()) return {false, std::string(name) + " failed"};
    const double acc = 1.0 - rate(row.unseen_errors.mean, r.unseen_size);
    pass = pass && acc >= 0.90;
    detail += std::string(detail.empty() ? "" : ", ") + name + " unseen accuracy " +
              fmt(100.0 * acc) + "%";
  }
  return {pass, detail + " over " + std::to_string(r.unseen_size) + " unseen examples"};
}

Outcome k_robustness(Experiments& ex, std::size_t runs) {
  if (!ex.table) table_ordering(ex, runs);
  const auto hp = experiment_hp();
  auto bigru = harness::k_sweep(ex.corpus, hp, {2, 8}, {model::EncoderKind::bigru}, runs, 1,
                                progress_to_stderr("sweep"));
  auto embedding = harness::k_sweep(ex.corpus, hp, {8}, {model::EncoderKind::embedding}, runs, 1,
                                    progress_to_stderr("sweep"));
  std::cerr << harness::format_table(bigru) << harness::format_table(embedding);

  const auto find = [](const harness::ExperimentReport& r, std::size_t k, const char* name)
      -> const harness::ReportRow& {
    for (const auto& row : r.rows) {
      if (row.k == k && row.name == name) return row;
    }
    throw std::out_of_range("missing sweep row");
  };
  const auto n = ex.table->split_size;
  std::vector<double> joint_rates = {rate(find(bigru, 2, "HMN-Joint").errors.mean, n),
                                     rate(ex.table->row("HMN-Joint").errors.mean, n),
                                     rate(find(bigru, 8, "HMN-Joint").errors.mean, n)};
  for (const auto* row : {&find(bigru, 2, "HMN-Joint"), &find(bigru, 8, "HMN-Joint"),
                          &find(bigru, 8, "HMN-Word"), &find(embedding, 8, "HMN-Word")}) {
    if (!row->valid()) return {false, "sweep run failed: " + row->failures.front()};
  }
  const auto [lo, hi] = std::minmax_element(joint_rates.begin(), joint_rates.end());
  const double spread = 100.0 * (*hi - *lo);
  const double emb_word = find(embedding, 8, "HMN-Word").errors.mean;
  const double gru_word = find(bigru, 8, "HMN-Word").errors.mean;
  const bool pass = spread < 2.0 && emb_word > gru_word;
  return {pass, "HMN-Joint error rates k=2/4/8 " + fmt(100 * joint_rates[0]) + "/" +
                    fmt(100 * joint_rates[1]) + "/" + fmt(100 * joint_rates[2]) +
                    "% (spread " + fmt(spread) + " points); HMN-Word k=8 errors embedding " +
                    fmt(emb_word, 4) + " vs BiGRU " + fmt(gru_word, 4)};
}

Outcome generator_checks(const std::filesystem::path& work) {
  auto cfg = data::config_for_total(10000);
  cfg.seed = 11;
  const auto generated = data::generate_corpus(cfg);
  const auto& c = generated.corpus;
  std::size_t count = 0, violations = 0;
  std::string first_violation;
  for (auto name : data::kSplitNames) {
    for (const auto& d : c.split(name)) {
      ++count;
      if (auto err = data::validate(d)) {
        if (violations++ == 0) first_violation = *err;
      }
    }
  }
  const auto answers = data::train_answers(c);
  const double dev = data::unseen_fraction(c.dev, answers);
  const double test = data::unseen_fraction(c.test, answers);
  const auto within = [&](double x) { return std::abs(x - cfg.unseen_answer_target) <= 0.03; };

  const auto a = work / "gen_a", b = work / "gen_b";
  data::save_corpus(a, c, generated.meta);
  const auto again = data::generate_corpus(cfg);
  data::save_corpus(b, again.corpus, again.meta);
  bool identical = true;
  for (const char* f : {"train.jsonl", "dev.jsonl", "test.jsonl", "meta.json"}) {
    identical = identical && read_bytes(a / f) == read_bytes(b / f) && !read_bytes(a / f).empty();
  }
  const bool pass = count >= 10000 && violations == 0 && within(dev) && within(test) && identical;
  std::string detail = std::to_string(count) + " dialogues, " + std::to_string(violations) +
                       " invariant violations" +
                       (violations ? " (" + first_violation + ")" : "") + ", unseen dev " +
                       fmt(100 * dev) + "% test " + fmt(100 * test) + "%, regeneration " +
                       (identical ? "byte identical" : "differs");
  return {pass, detail};
}

Outcome determinism(const std::filesystem::path& work) {
  const auto raw = data::generate_corpus(testing::small_corpus_config(12, 60, 10, 40)).corpus;
  const auto corpus = harness::prepare(raw);
  train::HyperParams hp;
  hp.dim = 8;
  hp.k = 2;
  hp.epochs = 2;
  hp.batch_size = 10;

  const auto trained = train::train(corpus.train, corpus.vocab.size(), hp, VariantKind::hmn);
  const auto path = work / "model.ckpt";
  const train::SavedModel info{VariantKind::hmn, hp, corpus.vocab.size(),
                               corpus.vocab.fingerprint()};
  train::save_model(path, trained.params, info);
  auto loaded = train::load_model(path);
  const auto resaved = work / "model_again.ckpt";
  train::save_model(resaved, loaded.params, loaded.info);
  const bool round_trip = loaded.params.store().same_values(trained.params.store()) &&
                          read_bytes(path) == read_bytes(resaved) &&
                          read_bytes(train::model_info_path(path)) ==
                              read_bytes(train::model_info_path(resaved));

  harness::ExperimentConfig cfg;
  cfg.hp = hp;
  cfg.variants = {VariantKind::memnn_h1, VariantKind::memnn_nt, VariantKind::memnn,
                  VariantKind::hmn};
  cfg.runs = 2;
  const auto first = harness::to_json(harness::run_experiment(corpus, cfg)).dump();
  const auto second = harness::to_json(harness::run_experiment(corpus, cfg)).dump();
  const bool reports_match = first == second;
  return {round_trip && reports_match,
          std::string("checkpoint round trip ") + (round_trip ? "bitwise" : "differs") +
              ", repeated reports " + (reports_match ? "identical" : "differ")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance suite"};
  std::vector<int> only;
  std::size_t runs = 3;
  std::string work_dir = (std::filesystem::temp_directory_path() / "hmn_acceptance").string();
  std::string report_path;
  app.add_option("--only", only, "criteria to run (default: all)")
      ->delimiter(',')
      ->check(CLI::Range(1, 9));
  app.add_option("--runs", runs, "seeds per trained configuration")->capture_default_str();
  app.add_option("--work-dir", work_dir, "scratch directory")->capture_default_str();
  app.add_option("--report", report_path, "write the criterion 5 report JSON here");
  std::string reduction = train::to_string(g_reduction);
  app.add_option("--grad-reduction", reduction, "batch gradient reduction for trained criteria")
      ->check(CLI::IsMember({"mean", "sum"}))
      ->capture_default_str();
  CLI11_PARSE(app, argc, argv);
  g_reduction = train::parse_grad_reduction(reduction);

  const std::filesystem::path work(work_dir);
  std::filesystem::create_directories(work);
  const auto wanted = [&](int n) {
    return only.empty() || std::find(only.begin(), only.end(), n) != only.end();
  };

  Experiments ex;
  if (wanted(5) || wanted(6) || wanted(7)) {
    const auto generated = data::generate_corpus(experiment_corpus_config());
    std::cerr << "corpus: unseen test share " << generated.meta.unseen_test << std::endl;
    ex.corpus = harness::prepare(generated.corpus);
  }

  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, gradient_check},
      {2, pointer_oracle},
      {3, distribution_invariants},
      {4, memnn_reduction},
      {5, [&] { return table_ordering(ex, runs); }},
      {6, [&] { return unseen_capability(ex, runs); }},
      {7, [&] { return k_robustness(ex, runs); }},
      {8, [&] { return generator_checks(work); }},
      {9, [&] { return determinism(work); }},
  };

  int failures = 0;
  for (const auto& [n, run] : criteria) {
    if (!wanted(n)) continue;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << n << ": " << o.detail
              << std::endl;
    if (n == 5 && ex.table && !report_path.empty()) {
      std::ofstream(report_path) << harness::to_json(*ex.table).dump(2) << "\n";
    }
  }
  std::filesystem::remove_all(work);
  return failures == 0 ? 0 : 1;
}
