#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "hmn/trainer.hpp"

namespace hmn::harness {

inline constexpr int kReportVersion = 1;
inline constexpr int kTraceVersion = 1;

class VocabularyMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A split encoded against the corpus vocabulary, with unseen-answer flags.
struct PreparedSplit {
  std::vector<data::EncodedDialogue> examples;
  std::vector<bool> unseen;
};

struct PreparedCorpus {
  data::Vocabulary vocab;
  std::vector<data::EncodedDialogue> train;
  PreparedSplit dev;
  PreparedSplit test;

  const PreparedSplit& split(std::string_view name) const;
};

PreparedCorpus prepare(const data::Corpus& corpus);

struct ExampleRecord {
  std::size_t index = 0;
  int predicted = 0;
  int gold = 0;
  bool unseen = false;
};

struct EvalResult {
  std::size_t total = 0;
  std::size_t errors = 0;
  std::size_t unseen_total = 0;
  std::size_t unseen_errors = 0;
  std::vector<ExampleRecord> records;

  double error_rate() const;
  double unseen_accuracy() const;
};

using Predictor = std::function<int(const data::EncodedDialogue&)>;

/// Counts examples whose prediction differs from the gold answer.
EvalResult evaluate(const PreparedSplit& split, const Predictor& predict);

/// All three readouts from one forward pass per example. Sentence-only
/// variants report p_sent under every readout. Throws VocabularyMismatch when
/// the model was trained against a different vocabulary.
std::map<train::Readout, EvalResult> evaluate_model(model::ModelParams& params,
                                                    const train::SavedModel& info,
                                                    const data::Vocabulary& vocab,
                                                    const PreparedSplit& split);

EvalResult evaluate_model(model::ModelParams& params, const train::SavedModel& info,
                          const data::Vocabulary& vocab, const PreparedSplit& split,
                          train::Readout readout);

/// Mean and sample standard deviation (n - 1) of raw per-run values.
struct CellStats {
  std::vector<double> raw;
  double mean = 0.0;
  double stddev = 0.0;
};

CellStats aggregate(std::vector<double> raw);

/// One Table-2 style row.
struct ReportRow {
  std::string name;  // e.g. "MemNN-NT", "HMN-Joint"
  train::VariantKind variant = train::VariantKind::hmn;
  train::Readout readout = train::Readout::joint;
  std::size_t k = 0;
  model::EncoderKind encoder = model::EncoderKind::bigru;
  CellStats errors;
  CellStats unseen_errors;
  std::vector<std::string> failures;  // one message per failed run

  bool valid() const { return failures.empty(); }
};

struct ExperimentReport {
  int version = kReportVersion;
  std::string split = "test";
  std::size_t split_size = 0;
  std::size_t unseen_size = 0;
  std::size_t runs = 0;
  std::uint64_t base_seed = 0;
  train::HyperParams hp;
  std::vector<ReportRow> rows;

  const ReportRow& row(std::string_view name) const;
};

std::string row_name(train::VariantKind variant, train::Readout readout);

/// Training function used by experiments; replaceable for testing.
using TrainFn = std::function<train::TrainResult(std::span<const data::EncodedDialogue>,
                                                 std::size_t, const train::HyperParams&,
                                                 train::VariantKind)>;

struct ExperimentConfig {
  train::HyperParams hp;
  std::vector<train::VariantKind> variants;
  std::size_t runs = 5;
  std::uint64_t base_seed = 1;
  std::string split = "test";
  TrainFn train_fn;  // defaults to train::train
};

using ProgressFn = std::function<void(const std::string&)>;

/// Trains each variant once per seed base_seed..base_seed+runs-1 and reports
/// error counts on the split. HMN is trained once per seed and contributes
/// its three readouts. A failing run is recorded in its rows' failures; the
/// other runs continue.
ExperimentReport run_experiment(const PreparedCorpus& corpus, const ExperimentConfig& cfg,
                                const ProgressFn& progress = {});

nlohmann::json to_json(const ExperimentReport& r);
ExperimentReport report_from_json(const nlohmann::json& j);
/// Fixed-width text table, one line per row: name, mean +- std, raw counts.
std::string format_table(const ExperimentReport& r);

/// HMN rows for every (k, encoder) pair, three readouts each.
ExperimentReport k_sweep(const PreparedCorpus& corpus, const train::HyperParams& hp,
                         const std::vector<std::size_t>& k_values,
                         const std::vector<model::EncoderKind>& encoders, std::size_t runs,
                         std::uint64_t base_seed, const ProgressFn& progress = {});

/// Everything needed to draw one prediction: sentences are listed in temporal
/// order and each carries its reverse index (most recent sentence = 1).
struct TraceWord {
  std::size_t sentence = 0;  // reverse index
  std::string token;
  double weight = 0.0;
  friend bool operator==(const TraceWord&, const TraceWord&) = default;
};

struct AttentionTrace {
  int version = kTraceVersion;
  std::vector<std::vector<std::string>> sentences;
  std::vector<std::size_t> sentence_index;  // reverse index per sentence
  std::vector<std::string> query;
  std::string gold;
  std::vector<std::vector<double>> hop_attention;  // hops x sentences
  std::vector<std::size_t> selected;               // reverse indices
  std::vector<TraceWord> words;
  std::string predicted_sent;
  std::string predicted_word;
  std::string predicted_joint;
  friend bool operator==(const AttentionTrace&, const AttentionTrace&) = default;
};

AttentionTrace trace(const data::Dialogue& dialogue, const data::Vocabulary& vocab,
                     model::ModelParams& params, const train::HyperParams& hp);

nlohmann::json to_json(const AttentionTrace& t);
AttentionTrace trace_from_json(const nlohmann::json& j);

}  // namespace hmn::harness
