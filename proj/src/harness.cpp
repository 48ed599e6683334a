#include "hmn/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace hmn::harness {
namespace {

using nlohmann::json;

PreparedSplit prepare_split(const std::vector<data::Dialogue>& dialogues,
                            const data::Vocabulary& vocab,
                            const std::unordered_set<std::string>& seen) {
  PreparedSplit s;
  s.examples.reserve(dialogues.size());
  for (const auto& d : dialogues) {
    s.examples.push_back(data::encode(d, vocab));
    s.unseen.push_back(seen.count(d.answer) == 0);
  }
  return s;
}

void check_vocabulary(const train::SavedModel& info, const data::Vocabulary& vocab) {
  if (info.vocab_size != vocab.size() || info.vocab_fingerprint != vocab.fingerprint()) {
    throw VocabularyMismatch("checkpoint vocabulary (" + std::to_string(info.vocab_size) +
                             " tokens) does not match the corpus vocabulary (" +
                             std::to_string(vocab.size()) + " tokens)");
  }
}

void record(EvalResult& r, std::size_t index, int predicted, int gold, bool unseen) {
  ++r.total;
  const bool wrong = predicted != gold;
  if (wrong) ++r.errors;
  if (unseen) {
    ++r.unseen_total;
    if (wrong) ++r.unseen_errors;
  }
  r.records.push_back({index, predicted, gold, unseen});
}

constexpr train::Readout kReadouts[] = {train::Readout::sent, train::Readout::word,
                                        train::Readout::joint};

json to_json(const CellStats& c) {
  return json{{"raw", c.raw}, {"mean", c.mean}, {"std", c.stddev}};
}

CellStats cell_from_json(const json& j) {
  CellStats c;
  c.raw = j.at("raw").get<std::vector<double>>();
  c.mean = j.at("mean").get<double>();
  c.stddev = j.at("std").get<double>();
  return c;
}

struct RowAccumulator {
  ReportRow row;
  std::vector<double> errors;
  std::vector<double> unseen;
};

}  // namespace

const PreparedSplit& PreparedCorpus::split(std::string_view name) const {
  if (name == "dev") return dev;
  if (name == "test") return test;
  throw std::invalid_argument("evaluation split must be dev or test, got '" + std::string(name) +
                              "'");
}

PreparedCorpus prepare(const data::Corpus& corpus) {
  PreparedCorpus p;
  p.vocab = data::build_vocabulary(corpus);
  const auto seen = data::train_answers(corpus);
  p.train.reserve(corpus.train.size());
  for (const auto& d : corpus.train) p.train.push_back(data::encode(d, p.vocab));
  p.dev = prepare_split(corpus.dev, p.vocab, seen);
  p.test = prepare_split(corpus.test, p.vocab, seen);
  return p;
}

double EvalResult::error_rate() const {
  return total == 0 ? 0.0 : static_cast<double>(errors) / static_cast<double>(total);
}

double EvalResult::unseen_accuracy() const {
  return unseen_total == 0
             ? 1.0
             : 1.0 - static_cast<double>(unseen_errors) / static_cast<double>(unseen_total);
}

EvalResult evaluate(const PreparedSplit& split, const Predictor& predict) {
  EvalResult r;
  for (std::size_t i = 0; i < split.examples.size(); ++i) {
    const auto& ex = split.examples[i];
    record(r, i, predict(ex), ex.answer, split.unseen[i]);
  }
  return r;
}

std::map<train::Readout, EvalResult> evaluate_model(model::ModelParams& params,
                                                    const train::SavedModel& info,
                                                    const data::Vocabulary& vocab,
                                                    const PreparedSplit& split) {
  check_vocabulary(info, vocab);
  std::map<train::Readout, EvalResult> out;
  for (auto r : kReadouts) out[r];
  for (std::size_t i = 0; i < split.examples.size(); ++i) {
    const auto& ex = split.examples[i];
    const auto bundle = train::forward_example(params, ex, info.hp.k, info.variant, info.hp.pooling);
    for (auto r : kReadouts) {
      record(out[r], i, train::predict_answer(bundle, r), ex.answer, split.unseen[i]);
    }
  }
  return out;
}

EvalResult evaluate_model(model::ModelParams& params, const train::SavedModel& info,
                          const data::Vocabulary& vocab, const PreparedSplit& split,
                          train::Readout readout) {
  check_vocabulary(info, vocab);
  return evaluate(split, [&](const data::EncodedDialogue& ex) {
    return train::predict_answer(train::forward_example(params, ex, info.hp.k, info.variant, info.hp.pooling),
                                 readout);
  });
}

CellStats aggregate(std::vector<double> raw) {
  CellStats c;
  c.raw = std::move(raw);
  if (c.raw.empty()) return c;
  const double n = static_cast<double>(c.raw.size());
  c.mean = std::accumulate(c.raw.begin(), c.raw.end(), 0.0) / n;
  if (c.raw.size() > 1) {
    double ss = 0.0;
    for (double x : c.raw) ss += (x - c.mean) * (x - c.mean);
    c.stddev = std::sqrt(ss / (n - 1.0));
  }
  return c;
}

std::string row_name(train::VariantKind variant, train::Readout readout) {
  switch (variant) {
    case train::VariantKind::memnn_h1: return "MemNN-H1";
    case train::VariantKind::memnn_nt: return "MemNN-NT";
    case train::VariantKind::memnn: return "MemNN";
    case train::VariantKind::hmn: break;
  }
  switch (readout) {
    case train::Readout::sent: return "HMN-Sent";
    case train::Readout::word: return "HMN-Word";
    case train::Readout::joint: return "HMN-Joint";
  }
  return "?";
}

const ReportRow& ExperimentReport::row(std::string_view name) const {
  for (const auto& r : rows) {
    if (r.name == name) return r;
  }
  throw std::out_of_range("report has no row '" + std::string(name) + "'");
}

ExperimentReport run_experiment(const PreparedCorpus& corpus, const ExperimentConfig& cfg,
                                const ProgressFn& progress) {
  if (cfg.runs < 1) throw std::invalid_argument("run_experiment: runs must be >= 1");
  cfg.hp.validate();
  const auto& split = corpus.split(cfg.split);
  const TrainFn train_fn = cfg.train_fn ? cfg.train_fn
                                        : TrainFn([](auto examples, auto vocab, const auto& hp,
                                                     auto variant) {
                                            return train::train(examples, vocab, hp, variant);
                                          });

  ExperimentReport report;
  report.split = cfg.split;
  report.split_size = split.examples.size();
  report.unseen_size =
      static_cast<std::size_t>(std::count(split.unseen.begin(), split.unseen.end(), true));
  report.runs = cfg.runs;
  report.base_seed = cfg.base_seed;
  report.hp = cfg.hp;

  std::vector<RowAccumulator> acc;
  for (auto v : cfg.variants) {
    std::vector<train::Readout> readouts{train::Readout::joint};
    if (v == train::VariantKind::hmn) readouts.assign(std::begin(kReadouts), std::end(kReadouts));
    for (auto r : readouts) {
      RowAccumulator a;
      a.row.name = row_name(v, r);
      a.row.variant = v;
      a.row.readout = r;
      a.row.k = cfg.hp.k;
      a.row.encoder = cfg.hp.encoder;
      acc.push_back(std::move(a));
    }
  }

  for (auto v : cfg.variants) {
    for (std::size_t run = 0; run < cfg.runs; ++run) {
      auto hp = cfg.hp;
      hp.seed = cfg.base_seed + run;
      const auto label = train::to_string(v) + " seed " + std::to_string(hp.seed);
      try {
        auto trained = train_fn(corpus.train, corpus.vocab.size(), hp, v);
        const train::SavedModel info{v, hp, corpus.vocab.size(), corpus.vocab.fingerprint()};
        const auto results = evaluate_model(trained.params, info, corpus.vocab, split);
        for (auto& a : acc) {
          if (a.row.variant != v) continue;
          const auto& r = results.at(a.row.readout);
          a.errors.push_back(static_cast<double>(r.errors));
          a.unseen.push_back(static_cast<double>(r.unseen_errors));
        }
        if (progress) {
          progress(label + ": " + std::to_string(results.at(train::Readout::joint).errors) +
                   " errors");
        }
      } catch (const std::exception& e) {
        for (auto& a : acc) {
          if (a.row.variant == v) a.row.failures.push_back(label + ": " + e.what());
        }
        if (progress) progress(label + " failed: " + e.what());
      }
    }
  }

  for (auto& a : acc) {
    a.row.errors = aggregate(std::move(a.errors));
    a.row.unseen_errors = aggregate(std::move(a.unseen));
    report.rows.push_back(std::move(a.row));
  }
  return report;
}

json to_json(const ExperimentReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back(json{{"name", row.name},
                        {"variant", train::to_string(row.variant)},
                        {"readout", train::to_string(row.readout)},
                        {"k", row.k},
                        {"encoder", model::to_string(row.encoder)},
                        {"valid", row.valid()},
                        {"errors", to_json(row.errors)},
                        {"unseen_errors", to_json(row.unseen_errors)},
                        {"failures", row.failures}});
  }
  return json{{"schema", "hmn-report"},
              {"version", r.version},
              {"split", r.split},
              {"split_size", r.split_size},
              {"unseen_size", r.unseen_size},
              {"runs", r.runs},
              {"base_seed", r.base_seed},
              {"hyperparameters", train::to_json(r.hp)},
              {"rows", rows}};
}

ExperimentReport report_from_json(const json& j) {
  ExperimentReport r;
  r.version = j.at("version").get<int>();
  if (r.version != kReportVersion) {
    throw std::invalid_argument("unsupported report version " + std::to_string(r.version));
  }
  r.split = j.at("split").get<std::string>();
  r.split_size = j.at("split_size").get<std::size_t>();
  r.unseen_size = j.at("unseen_size").get<std::size_t>();
  r.runs = j.at("runs").get<std::size_t>();
  r.base_seed = j.at("base_seed").get<std::uint64_t>();
  r.hp = train::hyperparams_from_json(j.at("hyperparameters"));
  for (const auto& jr : j.at("rows")) {
    ReportRow row;
    row.name = jr.at("name").get<std::string>();
    row.variant = train::parse_variant(jr.at("variant").get<std::string>());
    row.readout = train::parse_readout(jr.at("readout").get<std::string>());
    row.k = jr.at("k").get<std::size_t>();
    row.encoder = model::parse_encoder(jr.at("encoder").get<std::string>());
    row.errors = cell_from_json(jr.at("errors"));
    row.unseen_errors = cell_from_json(jr.at("unseen_errors"));
    row.failures = jr.at("failures").get<std::vector<std::string>>();
    r.rows.push_back(std::move(row));
  }
  return r;
}

std::string format_table(const ExperimentReport& r) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-10s %-9s %3s %18s %18s  %s\n", "model", "encoder", "k",
                "errors", "unseen errors", "raw");
  os << line;
  for (const auto& row : r.rows) {
    std::string raw;
    for (double x : row.errors.raw) raw += (raw.empty() ? "" : ",") + std::to_string(long(x));
    char err[64], uns[64];
    std::snprintf(err, sizeof err, "%.1f +- %.1f", row.errors.mean, row.errors.stddev);
    std::snprintf(uns, sizeof uns, "%.1f +- %.1f", row.unseen_errors.mean,
                  row.unseen_errors.stddev);
    std::snprintf(line, sizeof line, "%-10s %-9s %3zu %18s %18s  [%s]%s\n", row.name.c_str(),
                  row.variant == train::VariantKind::hmn ? model::to_string(row.encoder).c_str()
                                                         : "-",
                  row.k, err, uns, raw.c_str(), row.valid() ? "" : " INVALID");
    os << line;
  }
  return os.str();
}

ExperimentReport k_sweep(const PreparedCorpus& corpus, const train::HyperParams& hp,
                         const std::vector<std::size_t>& k_values,
                         const std::vector<model::EncoderKind>& encoders, std::size_t runs,
                         std::uint64_t base_seed, const ProgressFn& progress) {
  for (auto k : k_values) {
    if (k < 1) throw std::invalid_argument("k_sweep: every k must be >= 1");
  }
  ExperimentReport out;
  out.hp = hp;
  out.runs = runs;
  out.base_seed = base_seed;
  for (auto encoder : encoders) {
    for (auto k : k_values) {
      ExperimentConfig cfg;
      cfg.hp = hp;
      cfg.hp.k = k;
      cfg.hp.encoder = encoder;
      cfg.variants = {train::VariantKind::hmn};
      cfg.runs = runs;
      cfg.base_seed = base_seed;
      auto part = run_experiment(corpus, cfg, [&](const std::string& msg) {
        if (progress) progress(model::to_string(encoder) + " k=" + std::to_string(k) + " " + msg);
      });
      out.split = part.split;
      out.split_size = part.split_size;
      out.unseen_size = part.unseen_size;
      for (auto& row : part.rows) out.rows.push_back(std::move(row));
    }
  }
  return out;
}

AttentionTrace trace(const data::Dialogue& dialogue, const data::Vocabulary& vocab,
                     model::ModelParams& params, const train::HyperParams& hp) {
  if (!params.config().word_branch) {
    throw std::invalid_argument("trace needs an HMN checkpoint");
  }
  const auto ex = data::encode(dialogue, vocab);
  const auto bundle = train::forward_example(params, ex, hp.k, train::VariantKind::hmn, hp.pooling);
  const auto n = dialogue.sentences.size();
  const auto reverse_index = [n](std::size_t i) { return n - i; };

  AttentionTrace t;
  t.sentences = dialogue.sentences;
  for (std::size_t i = 0; i < n; ++i) t.sentence_index.push_back(reverse_index(i));
  t.query = dialogue.query;
  t.gold = dialogue.answer;
  t.hop_attention = bundle.hop_attention;
  std::size_t w = 0;
  for (int s : bundle.selection.indices) {
    const auto i = static_cast<std::size_t>(s);
    t.selected.push_back(reverse_index(i));
    for (const auto& token : dialogue.sentences[i]) {
      t.words.push_back({reverse_index(i), token, bundle.word_attention.at(w++)});
    }
  }
  t.predicted_sent = vocab.token(train::predict_answer(bundle, train::Readout::sent));
  t.predicted_word = vocab.token(train::predict_answer(bundle, train::Readout::word));
  t.predicted_joint = vocab.token(train::predict_answer(bundle, train::Readout::joint));
  return t;
}

json to_json(const AttentionTrace& t) {
  json words = json::array();
  for (const auto& w : t.words) {
    words.push_back(json{{"sentence", w.sentence}, {"token", w.token}, {"weight", w.weight}});
  }
  return json{{"schema", "hmn-trace"},
              {"version", t.version},
              {"sentences", t.sentences},
              {"sentence_index", t.sentence_index},
              {"query", t.query},
              {"gold", t.gold},
              {"hop_attention", t.hop_attention},
              {"selected", t.selected},
              {"words", words},
              {"predicted", json{{"sent", t.predicted_sent},
                                 {"word", t.predicted_word},
                                 {"joint", t.predicted_joint}}}};
}

AttentionTrace trace_from_json(const json& j) {
  AttentionTrace t;
  t.version = j.at("version").get<int>();
  if (t.version != kTraceVersion) {
    throw std::invalid_argument("unsupported trace version " + std::to_string(t.version));
  }
  t.sentences = j.at("sentences").get<std::vector<std::vector<std::string>>>();
  t.sentence_index = j.at("sentence_index").get<std::vector<std::size_t>>();
  t.query = j.at("query").get<std::vector<std::string>>();
  t.gold = j.at("gold").get<std::string>();
  t.hop_attention = j.at("hop_attention").get<std::vector<std::vector<double>>>();
  t.selected = j.at("selected").get<std::vector<std::size_t>>();
  for (const auto& w : j.at("words")) {
    t.words.push_back({w.at("sentence").get<std::size_t>(), w.at("token").get<std::string>(),
                       w.at("weight").get<double>()});
  }
  const auto& p = j.at("predicted");
  t.predicted_sent = p.at("sent").get<std::string>();
  t.predicted_word = p.at("word").get<std::string>();
  t.predicted_joint = p.at("joint").get<std::string>();
  return t;
}

}  // namespace hmn::harness
