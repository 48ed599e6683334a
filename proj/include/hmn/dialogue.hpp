#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace hmn::data {

inline constexpr std::size_t kMaxSentences = 16;
inline constexpr std::size_t kMaxSentenceLength = 18;

enum class Domain { air_ticket, hotel };

std::string to_string(Domain d);
Domain parse_domain(std::string_view s);

using Sentence = std::vector<std::string>;

/// One QA instance: a dialogue history, a query about one slot and the
/// single-token answer taken from the history.
struct Dialogue {
  std::vector<Sentence> sentences;
  Sentence query;
  std::string answer;
  int answer_sentence = 0;  // 0-based, temporal order
  Domain domain = Domain::air_ticket;
  std::string slot;  // queried slot, e.g. "passport"

  friend bool operator==(const Dialogue&, const Dialogue&) = default;
};

/// Empty when every structural invariant holds, otherwise the first violation.
std::optional<std::string> validate(const Dialogue& d);

struct Corpus {
  std::vector<Dialogue> train;
  std::vector<Dialogue> dev;
  std::vector<Dialogue> test;

  const std::vector<Dialogue>& split(std::string_view name) const;
  std::vector<Dialogue>& split(std::string_view name);
};

inline constexpr std::string_view kSplitNames[] = {"train", "dev", "test"};

/// Set of answer tokens occurring in the train split.
std::unordered_set<std::string> train_answers(const Corpus& c);

/// Fraction of `split` whose answer never occurs as a train answer.
double unseen_fraction(const std::vector<Dialogue>& split,
                       const std::unordered_set<std::string>& train_answer_set);

/// Token <-> id map. Id 0 is reserved for unknown/padding.
class Vocabulary {
 public:
  static constexpr int kUnk = 0;
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocabulary();

  int add(const std::string& token);
  int id(const std::string& token) const;  // kUnk if absent
  bool contains(const std::string& token) const { return index_.count(token) > 0; }
  const std::string& token(int id) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  /// FNV-1a over the ordered token list; used to match checkpoints to corpora.
  std::uint64_t fingerprint() const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

/// First occurrence over train, then dev, then test; within a dialogue the
/// sentences come first, then the query, then the answer.
Vocabulary build_vocabulary(const Corpus& corpus);

/// Dialogue in vocabulary ids, as consumed by the model.
struct EncodedDialogue {
  std::vector<std::vector<int>> sentences;
  std::vector<int> query;
  int answer = 0;
  int answer_sentence = 0;
};

EncodedDialogue encode(const Dialogue& d, const Vocabulary& vocab);

}  // namespace hmn::data
