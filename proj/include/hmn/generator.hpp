#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "hmn/dialogue.hpp"

namespace hmn::data {

enum class DomainChoice { air_ticket, hotel, all };

DomainChoice parse_domain_choice(std::string_view s);
std::string to_string(DomainChoice d);

/// How the client phrases an answer. `direct` repeats the slot keyword,
/// `echo` repeats a marker word the agent used in the question, `generic`
/// carries no cue and can only be linked to its question by position.
enum class AnswerStyle { direct, echo, generic };

struct StyleWeights {
  double direct = 0.20;
  double echo = 0.25;
  double generic = 0.55;
};

struct CorpusConfig {
  DomainChoice domain = DomainChoice::air_ticket;
  std::size_t train = 5400;
  std::size_t dev = 600;
  std::size_t test = 6000;
  /// Entity pool size per slot; slots not listed use default_pool_size.
  std::map<std::string, std::size_t> pool_sizes;
  std::size_t default_pool_size = 2000;
  /// Share of each pool never used in train; unseen answers come from here.
  double heldout_fraction = 0.5;
  /// Let held-out values fill non-queried slots of train dialogues, so unseen
  /// answers are words the model has read but never had to output.
  bool heldout_as_distractors = false;
  double unseen_answer_target = 0.57;
  StyleWeights styles;
  std::uint64_t seed = 1;

  std::size_t pool_size(const std::string& slot) const;
  void validate() const;
};

/// Split sizes following the 45% / 5% / 50% protocol.
CorpusConfig config_for_total(std::size_t total);

struct CorpusMeta {
  CorpusConfig config;
  double unseen_dev = 0.0;
  double unseen_test = 0.0;
  double unseen_dev_test = 0.0;
};

struct GeneratedCorpus {
  Corpus corpus;
  CorpusMeta meta;
};

class InfeasibleCorpus : public std::runtime_error {
 public:
  InfeasibleCorpus(const std::string& msg, std::size_t required)
      : std::runtime_error(msg), required_pool_size(required) {}
  std::size_t required_pool_size;
};

class TemplateOverflow : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Entity value for every slot of the domain plus the slot the query asks about.
struct SlotAssignment {
  std::map<std::string, std::string> values;
  std::string queried;
};

/// Slot names of a domain in canonical order.
const std::vector<std::string>& domain_slots(Domain d);

/// Greeting round, six slot rounds in random order, closing round:
/// sixteen sentences, agent and client alternating.
Dialogue generate_dialogue(Domain domain, const SlotAssignment& slots, std::mt19937_64& rng,
                           const StyleWeights& styles = {});

GeneratedCorpus generate_corpus(const CorpusConfig& cfg);

/// Stream for dialogue `index` of split `split` (0 train, 1 dev, 2 test).
std::mt19937_64 dialogue_rng(std::uint64_t seed, int split, std::size_t index);

}  // namespace hmn::data
