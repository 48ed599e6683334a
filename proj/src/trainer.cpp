#include "hmn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

#include "hmn/checkpoint.hpp"
#include "hmn/sgd.hpp"

namespace hmn::train {
namespace {

using nlohmann::json;

constexpr double kSimplexTolerance = 1e-9;
constexpr std::uint64_t kShuffleStream = 0x73687566666c65ULL;

void check_simplex(std::span<const double> p, const char* what) {
  double total = 0.0;
  for (double x : p) {
    if (!(x >= -kSimplexTolerance)) {
      throw std::invalid_argument(std::string("joint_predict: ") + what +
                                  " has a negative or non-finite entry");
    }
    total += x;
  }
  if (std::abs(total - 1.0) > kSimplexTolerance) {
    throw std::invalid_argument(std::string("joint_predict: ") + what + " sums to " +
                                std::to_string(total) + ", not 1");
  }
}

std::vector<double> values(const model::Graph& g, model::NodeId id) {
  const auto v = g.value(id).data();
  return {v.begin(), v.end()};
}

void shuffle(std::vector<std::size_t>& order, std::mt19937_64& rng) {
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng() % i]);
  }
}

}  // namespace

std::string to_string(VariantKind v) {
  switch (v) {
    case VariantKind::memnn_h1: return "memnn-h1";
    case VariantKind::memnn_nt: return "memnn-nt";
    case VariantKind::memnn: return "memnn";
    case VariantKind::hmn: return "hmn";
  }
  return "?";
}

std::string to_string(Readout r) {
  switch (r) {
    case Readout::sent: return "sent";
    case Readout::word: return "word";
    case Readout::joint: return "joint";
  }
  return "?";
}

std::string to_string(GradReduction g) { return g == GradReduction::mean ? "mean" : "sum"; }

std::string to_string(Pooling p) { return p == Pooling::final_hop ? "final_hop" : "hop_mean"; }

VariantKind parse_variant(std::string_view s) {
  if (s == "memnn-h1" || s == "memnn_h1") return VariantKind::memnn_h1;
  if (s == "memnn-nt" || s == "memnn_nt") return VariantKind::memnn_nt;
  if (s == "memnn") return VariantKind::memnn;
  if (s == "hmn") return VariantKind::hmn;
  throw std::invalid_argument("unknown variant '" + std::string(s) + "'");
}

Readout parse_readout(std::string_view s) {
  if (s == "sent") return Readout::sent;
  if (s == "word") return Readout::word;
  if (s == "joint") return Readout::joint;
  throw std::invalid_argument("unknown readout '" + std::string(s) + "'");
}

GradReduction parse_grad_reduction(std::string_view s) {
  if (s == "mean") return GradReduction::mean;
  if (s == "sum") return GradReduction::sum;
  throw std::invalid_argument("unknown gradient reduction '" + std::string(s) + "'");
}

Pooling parse_pooling(std::string_view s) {
  if (s == "final_hop") return Pooling::final_hop;
  if (s == "hop_mean") return Pooling::hop_mean;
  throw std::invalid_argument("unknown pooling '" + std::string(s) + "'");
}

json to_json(const HyperParams& hp) {
  return json{{"dim", hp.dim},
              {"hops", hp.hops},
              {"k", hp.k},
              {"learning_rate", hp.learning_rate},
              {"batch_size", hp.batch_size},
              {"epochs", hp.epochs},
              {"anneal_interval", hp.anneal_interval},
              {"clip_norm", hp.clip_norm},
              {"seed", hp.seed},
              {"encoder", model::to_string(hp.encoder)},
              {"grad_reduction", to_string(hp.grad_reduction)},
              {"pooling", to_string(hp.pooling)}};
}

HyperParams hyperparams_from_json(const json& j) {
  HyperParams hp;
  hp.dim = j.at("dim").get<std::size_t>();
  hp.hops = j.at("hops").get<std::size_t>();
  hp.k = j.at("k").get<std::size_t>();
  hp.learning_rate = j.at("learning_rate").get<double>();
  hp.batch_size = j.at("batch_size").get<std::size_t>();
  hp.epochs = j.at("epochs").get<int>();
  hp.anneal_interval = j.at("anneal_interval").get<int>();
  hp.clip_norm = j.at("clip_norm").get<double>();
  hp.seed = j.at("seed").get<std::uint64_t>();
  hp.encoder = model::parse_encoder(j.at("encoder").get<std::string>());
  hp.grad_reduction = parse_grad_reduction(j.at("grad_reduction").get<std::string>());
  hp.pooling = parse_pooling(j.value("pooling", std::string("final_hop")));
  return hp;
}

void HyperParams::validate() const {
  if (dim < 1) throw std::invalid_argument("dim must be >= 1");
  if (hops < 1) throw std::invalid_argument("hops must be >= 1");
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  diff::SgdConfig{learning_rate, clip_norm, anneal_interval, epochs}.validate();
}

model::ModelConfig model_config(VariantKind variant, const HyperParams& hp,
                                std::size_t vocab_size) {
  model::ModelConfig cfg;
  cfg.vocab_size = vocab_size;
  cfg.dim = hp.dim;
  cfg.hops = variant == VariantKind::memnn_h1 ? 1 : hp.hops;
  cfg.max_sentences = data::kMaxSentences;
  cfg.temporal =
      variant == VariantKind::memnn_nt ? model::TemporalMode::off : model::TemporalMode::reverse;
  cfg.word_branch = variant == VariantKind::hmn;
  cfg.encoder = hp.encoder;
  return cfg;
}

std::vector<double> joint_predict(std::span<const double> p_sent, std::span<const double> p_word) {
  if (p_sent.size() != p_word.size()) {
    throw std::invalid_argument("joint_predict: distributions have different lengths");
  }
  check_simplex(p_sent, "sentence distribution");
  check_simplex(p_word, "word distribution");
  std::vector<double> out(p_sent.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 0.5 * (p_sent[i] + p_word[i]);
  return out;
}

double loss(std::span<const double> p, int y) {
  if (y < 0 || static_cast<std::size_t>(y) >= p.size()) {
    throw std::out_of_range("loss: target id " + std::to_string(y) + " outside the vocabulary");
  }
  return -std::log(std::max(p[static_cast<std::size_t>(y)], 1e-12));
}

int argmax(std::span<const double> p) {
  if (p.empty()) throw std::invalid_argument("argmax: empty distribution");
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p[i] > p[best]) best = i;
  }
  return static_cast<int>(best);
}

std::vector<double> pooling_weights(const model::Graph& g, const model::ReasoningState& state,
                                    Pooling pooling) {
  if (pooling == Pooling::final_hop) {
    const auto last = g.value(state.attentions.back()).data();
    return {last.begin(), last.end()};
  }
  std::vector<double> mean(g.value(state.attentions.front()).data().size(), 0.0);
  for (auto a : state.attentions) {
    const auto& w = g.value(a).data();
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += w[i];
  }
  for (auto& x : mean) x /= static_cast<double>(state.attentions.size());
  return mean;
}

ForwardNodes build_forward(model::Graph& g, model::ModelParams& params,
                           const data::EncodedDialogue& dialogue, std::size_t k,
                           VariantKind variant, Pooling pooling) {
  ForwardNodes out;
  out.reasoning = model::reason(g, params, dialogue.sentences, dialogue.query);
  out.p_sent = out.reasoning.p_sent;
  out.p_joint = out.p_sent;
  if (variant != VariantKind::hmn) return out;

  out.selection =
      model::kmax_select(pooling_weights(g, out.reasoning, pooling), k, dialogue.sentences);
  const auto memory = model::encode_words(g, params, dialogue.sentences);
  out.word_attention =
      model::word_attention(g, params, out.reasoning.probes.back(), out.selection, memory);
  out.p_word = model::trans(g, *out.word_attention, out.selection.word_ids,
                            params.config().vocab_size);
  out.p_joint = g.scale(g.add(out.p_sent, *out.p_word), 0.5);
  return out;
}

const std::vector<double>& PredictionBundle::readout(Readout r) const {
  switch (r) {
    case Readout::sent: return p_sent;
    case Readout::word:
      if (p_word.empty()) throw std::logic_error("word readout needs an HMN model");
      return p_word;
    case Readout::joint: return p_joint;
  }
  return p_joint;
}

PredictionBundle forward_example(model::ModelParams& params, const data::EncodedDialogue& dialogue,
                                 std::size_t k, VariantKind variant, Pooling pooling) {
  model::Graph g;
  const auto nodes = build_forward(g, params, dialogue, k, variant, pooling);
  PredictionBundle b;
  b.p_sent = values(g, nodes.p_sent);
  b.p_joint = values(g, nodes.p_joint);
  if (nodes.p_word) b.p_word = values(g, *nodes.p_word);
  if (nodes.word_attention) b.word_attention = values(g, *nodes.word_attention);
  for (auto a : nodes.reasoning.attentions) b.hop_attention.push_back(values(g, a));
  b.selection = nodes.selection;
  return b;
}

int predict_answer(const PredictionBundle& bundle, Readout readout) {
  if (bundle.p_word.empty()) return argmax(bundle.p_sent);
  return argmax(bundle.readout(readout));
}

std::string to_json_line(const EpochRecord& r) {
  return json{{"epoch", r.epoch},
              {"loss", r.mean_loss},
              {"train_accuracy", r.train_accuracy},
              {"sent_accuracy", r.sent_accuracy},
              {"word_accuracy", r.word_accuracy},
              {"selection_recall", r.selection_recall},
              {"learning_rate", r.learning_rate},
              {"max_grad_norm", r.max_grad_norm}}
      .dump();
}

NonFiniteLoss::NonFiniteLoss(int e, std::size_t b, std::size_t x)
    : std::runtime_error("non-finite loss at epoch " + std::to_string(e) + ", batch " +
                         std::to_string(b) + ", example " + std::to_string(x)),
      epoch(e),
      batch(b),
      example(x) {}

TrainResult train(std::span<const data::EncodedDialogue> examples, std::size_t vocab_size,
                  const HyperParams& hp, VariantKind variant, const EpochCallback& on_epoch) {
  hp.validate();
  if (examples.empty()) throw std::invalid_argument("train: no training examples");
  TrainResult result{model::ModelParams(model_config(variant, hp, vocab_size), hp.seed), {}};
  auto& params = result.params;
  auto& store = params.store();
  const diff::SgdConfig sgd{hp.learning_rate, hp.clip_norm, hp.anneal_interval, hp.epochs};

  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  store.zero_grad();

  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    std::mt19937_64 rng(diff::mix_seed(diff::mix_seed(hp.seed, kShuffleStream),
                                       static_cast<std::uint64_t>(epoch)));
    shuffle(order, rng);
    EpochRecord rec;
    rec.epoch = epoch;
    double loss_sum = 0.0;
    std::size_t correct = 0, sent_correct = 0, word_correct = 0, recalled = 0;
    for (std::size_t start = 0, batch = 0; start < order.size(); start += hp.batch_size, ++batch) {
      const auto stop = std::min(order.size(), start + hp.batch_size);
      for (std::size_t i = start; i < stop; ++i) {
        const auto& ex = examples[order[i]];
        model::Graph g;
        const auto nodes = build_forward(g, params, ex, hp.k, variant, hp.pooling);
        const auto objective = g.cross_entropy(nodes.p_joint, ex.answer);
        const double value = g.value(objective).item();
        if (!std::isfinite(value)) throw NonFiniteLoss(epoch, batch, order[i]);
        loss_sum += value;
        if (argmax(g.value(nodes.p_joint).data()) == ex.answer) ++correct;
        const bool sent_ok = argmax(g.value(nodes.p_sent).data()) == ex.answer;
        if (sent_ok) ++sent_correct;
        if (nodes.p_word ? argmax(g.value(*nodes.p_word).data()) == ex.answer : sent_ok) {
          ++word_correct;
        }
        const auto pooled =
            nodes.p_word ? nodes.selection
                         : model::kmax_select(pooling_weights(g, nodes.reasoning, hp.pooling),
                                              hp.k, ex.sentences);
        const auto& ids = pooled.word_ids;
        if (std::find(ids.begin(), ids.end(), ex.answer) != ids.end()) ++recalled;
        g.backward(objective);
      }
      if (hp.grad_reduction == GradReduction::mean) {
        const double scale = 1.0 / static_cast<double>(stop - start);
        for (auto& p : store) p.grad.scale_(scale);
      }
      const auto info = diff::sgd_step(store, sgd, epoch);
      rec.learning_rate = info.learning_rate;
      rec.max_grad_norm = std::max(rec.max_grad_norm, info.grad_norm);
      store.zero_grad();
    }
    rec.mean_loss = loss_sum / static_cast<double>(order.size());
    const auto total = static_cast<double>(order.size());
    rec.train_accuracy = static_cast<double>(correct) / total;
    rec.sent_accuracy = static_cast<double>(sent_correct) / total;
    rec.word_accuracy = static_cast<double>(word_correct) / total;
    rec.selection_recall = static_cast<double>(recalled) / total;
    result.curve.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return result;
}

std::filesystem::path model_info_path(const std::filesystem::path& checkpoint) {
  auto p = checkpoint;
  p += ".json";
  return p;
}

void save_model(const std::filesystem::path& path, const model::ModelParams& params,
                const SavedModel& info) {
  diff::save_checkpoint(path, params.store());
  const json j{{"version", 1},
               {"variant", to_string(info.variant)},
               {"hyperparameters", to_json(info.hp)},
               {"vocab_size", info.vocab_size},
               {"vocab_fingerprint", info.vocab_fingerprint}};
  std::ofstream os(model_info_path(path), std::ios::binary);
  if (!os) throw ModelFileError("cannot write " + model_info_path(path).string());
  os << j.dump(2) << '\n';
}

LoadedModel load_model(const std::filesystem::path& path) {
  std::ifstream is(model_info_path(path), std::ios::binary);
  if (!is) throw ModelFileError("missing model description " + model_info_path(path).string());
  SavedModel info;
  try {
    const auto j = json::parse(is);
    if (j.at("version").get<int>() != 1) {
      throw ModelFileError("unsupported model description version");
    }
    info.variant = parse_variant(j.at("variant").get<std::string>());
    info.hp = hyperparams_from_json(j.at("hyperparameters"));
    info.vocab_size = j.at("vocab_size").get<std::size_t>();
    info.vocab_fingerprint = j.at("vocab_fingerprint").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw ModelFileError("malformed model description " + model_info_path(path).string() + ": " +
                         e.what());
  }
  LoadedModel m{info, model::ModelParams(model_config(info.variant, info.hp, info.vocab_size),
                                         info.hp.seed)};
  diff::assign_values(m.params.store(), diff::load_checkpoint(path));
  return m;
}

}  // namespace hmn::train
