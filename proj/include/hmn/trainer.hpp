#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hmn/dialogue.hpp"
#include "hmn/word_memory.hpp"

namespace hmn::train {

enum class VariantKind { memnn_h1, memnn_nt, memnn, hmn };
enum class Readout { sent, word, joint };
/// How per-example gradients of one batch are combined before the update.
enum class GradReduction { mean, sum };
/// Sentence weights that k-max pooling ranks: the final hop's attention or
/// the mean over all hops.
enum class Pooling { final_hop, hop_mean };

std::string to_string(VariantKind v);
std::string to_string(Readout r);
std::string to_string(GradReduction g);
std::string to_string(Pooling p);
/// Accepts both "memnn-h1" and "memnn_h1" spellings.
VariantKind parse_variant(std::string_view s);
Readout parse_readout(std::string_view s);
GradReduction parse_grad_reduction(std::string_view s);
Pooling parse_pooling(std::string_view s);

struct HyperParams {
  std::size_t dim = 100;
  std::size_t hops = 3;
  std::size_t k = 4;
  double learning_rate = 0.01;
  std::size_t batch_size = 30;
  int epochs = 60;
  int anneal_interval = 15;
  double clip_norm = 40.0;
  std::uint64_t seed = 1;
  model::EncoderKind encoder = model::EncoderKind::bigru;
  GradReduction grad_reduction = GradReduction::mean;
  Pooling pooling = Pooling::final_hop;

  void validate() const;
  friend bool operator==(const HyperParams&, const HyperParams&) = default;
};

nlohmann::json to_json(const HyperParams& hp);
HyperParams hyperparams_from_json(const nlohmann::json& j);

/// Model layout of a variant: memnn_h1 uses one hop, memnn_nt drops temporal
/// encoding, hmn adds the word branch.
model::ModelConfig model_config(VariantKind variant, const HyperParams& hp,
                                std::size_t vocab_size);

/// (p_sent + p_word) / 2. Throws std::invalid_argument when an input is off
/// the simplex by more than 1e-9 or the lengths differ.
std::vector<double> joint_predict(std::span<const double> p_sent, std::span<const double> p_word);

/// -log(max(p[y], 1e-12)).
double loss(std::span<const double> p, int y);

/// Argmax with ties going to the smaller id.
int argmax(std::span<const double> p);

/// Graph nodes of one forward pass. For sentence-only variants p_word is
/// unset and p_joint aliases p_sent.
struct ForwardNodes {
  model::ReasoningState reasoning;
  model::NodeId p_sent;
  std::optional<model::NodeId> word_attention;
  std::optional<model::NodeId> p_word;
  model::NodeId p_joint;
  model::Selection selection;
};

/// Weights ranked by k-max pooling, one per sentence.
std::vector<double> pooling_weights(const model::Graph& g, const model::ReasoningState& state,
                                    Pooling pooling);

ForwardNodes build_forward(model::Graph& g, model::ModelParams& params,
                           const data::EncodedDialogue& dialogue, std::size_t k,
                           VariantKind variant, Pooling pooling = Pooling::final_hop);

struct PredictionBundle {
  std::vector<double> p_sent;
  std::vector<double> p_word;  // empty for sentence-only variants
  std::vector<double> p_joint;
  std::vector<std::vector<double>> hop_attention;
  model::Selection selection;
  std::vector<double> word_attention;

  const std::vector<double>& readout(Readout r) const;
};

PredictionBundle forward_example(model::ModelParams& params, const data::EncodedDialogue& dialogue,
                                 std::size_t k, VariantKind variant,
                                 Pooling pooling = Pooling::final_hop);

/// Readout `word` and `joint` need an HMN; sentence-only variants answer
/// every readout from p_sent.
int predict_answer(const PredictionBundle& bundle, Readout readout);

struct EpochRecord {
  int epoch = 0;  // 0-based
  double mean_loss = 0.0;
  double train_accuracy = 0.0;  // joint prediction before each update
  double sent_accuracy = 0.0;
  double word_accuracy = 0.0;  // equals sent_accuracy without a word branch
  double selection_recall = 0.0;  // answer among the words of the k most attended sentences
  double learning_rate = 0.0;
  double max_grad_norm = 0.0;
};

std::string to_json_line(const EpochRecord& r);

class NonFiniteLoss : public std::runtime_error {
 public:
  NonFiniteLoss(int epoch, std::size_t batch, std::size_t example);
  int epoch;
  std::size_t batch;
  std::size_t example;
};

struct TrainResult {
  model::ModelParams params;
  std::vector<EpochRecord> curve;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Seeded SGD over `examples`: every epoch reshuffles, splits into batches,
/// accumulates per-example gradients and applies one clipped, annealed step
/// per batch. HMN optimizes the joint loss only; sentence variants optimize
/// the loss on p_sent.
TrainResult train(std::span<const data::EncodedDialogue> examples, std::size_t vocab_size,
                  const HyperParams& hp, VariantKind variant, const EpochCallback& on_epoch = {});

/// A checkpoint together with what is needed to rebuild its model.
struct SavedModel {
  VariantKind variant = VariantKind::hmn;
  HyperParams hp;
  std::size_t vocab_size = 0;
  std::uint64_t vocab_fingerprint = 0;
};

class ModelFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Writes the parameters to `path` and the description to `path` + ".json".
void save_model(const std::filesystem::path& path, const model::ModelParams& params,
                const SavedModel& info);

struct LoadedModel {
  SavedModel info;
  model::ModelParams params;
};

LoadedModel load_model(const std::filesystem::path& path);

std::filesystem::path model_info_path(const std::filesystem::path& checkpoint);

}  // namespace hmn::train
