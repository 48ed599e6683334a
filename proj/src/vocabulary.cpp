#include <algorithm>
#include <stdexcept>

#include "hmn/dialogue.hpp"

namespace hmn::data {

std::string to_string(Domain d) {
  switch (d) {
    case Domain::air_ticket: return "air_ticket";
    case Domain::hotel: return "hotel";
  }
  return "?";
}

Domain parse_domain(std::string_view s) {
  if (s == "air_ticket") return Domain::air_ticket;
  if (s == "hotel") return Domain::hotel;
  throw std::invalid_argument("unknown domain '" + std::string(s) + "'");
}

std::optional<std::string> validate(const Dialogue& d) {
  const auto n = d.sentences.size();
  if (n < 1 || n > kMaxSentences) {
    return "dialogue has " + std::to_string(n) + " sentences";
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto len = d.sentences[i].size();
    if (len < 1 || len > kMaxSentenceLength) {
      return "sentence " + std::to_string(i) + " has " + std::to_string(len) + " tokens";
    }
  }
  if (d.query.empty()) return "empty query";
  if (d.answer.empty()) return "empty answer";
  if (d.answer_sentence < 0 || static_cast<std::size_t>(d.answer_sentence) >= n) {
    return "answer_sentence " + std::to_string(d.answer_sentence) + " out of range";
  }
  const auto& src = d.sentences[static_cast<std::size_t>(d.answer_sentence)];
  if (std::find(src.begin(), src.end(), d.answer) == src.end()) {
    return "answer '" + d.answer + "' missing from its source sentence";
  }
  std::size_t holders = 0;
  for (const auto& s : d.sentences) {
    if (std::find(s.begin(), s.end(), d.answer) != s.end()) ++holders;
  }
  if (holders != 1) {
    return "answer '" + d.answer + "' occurs in " + std::to_string(holders) + " sentences";
  }
  return std::nullopt;
}

const std::vector<Dialogue>& Corpus::split(std::string_view name) const {
  if (name == "train") return train;
  if (name == "dev") return dev;
  if (name == "test") return test;
  throw std::invalid_argument("unknown split '" + std::string(name) + "'");
}

std::vector<Dialogue>& Corpus::split(std::string_view name) {
  return const_cast<std::vector<Dialogue>&>(std::as_const(*this).split(name));
}

std::unordered_set<std::string> train_answers(const Corpus& c) {
  std::unordered_set<std::string> s;
  for (const auto& d : c.train) s.insert(d.answer);
  return s;
}

double unseen_fraction(const std::vector<Dialogue>& split,
                       const std::unordered_set<std::string>& train_answer_set) {
  if (split.empty()) return 0.0;
  std::size_t unseen = 0;
  for (const auto& d : split) unseen += train_answer_set.count(d.answer) == 0;
  return static_cast<double>(unseen) / static_cast<double>(split.size());
}

Vocabulary::Vocabulary() {
  tokens_.emplace_back(kUnkToken);
  index_.emplace(std::string(kUnkToken), kUnk);
}

int Vocabulary::add(const std::string& token) {
  if (auto it = index_.find(token); it != index_.end()) return it->second;
  const int id = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
  index_.emplace(token, id);
  return id;
}

int Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw std::out_of_range("token id " + std::to_string(id) + " outside vocabulary");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::uint64_t Vocabulary::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& t : tokens_) {
    for (unsigned char c : t) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= 0xff;  // separator
    h *= 0x100000001b3ULL;
  }
  return h;
}

Vocabulary build_vocabulary(const Corpus& corpus) {
  Vocabulary v;
  for (auto name : kSplitNames) {
    for (const auto& d : corpus.split(name)) {
      for (const auto& s : d.sentences) {
        for (const auto& t : s) v.add(t);
      }
      for (const auto& t : d.query) v.add(t);
      v.add(d.answer);
    }
  }
  return v;
}

EncodedDialogue encode(const Dialogue& d, const Vocabulary& vocab) {
  EncodedDialogue e;
  e.sentences.reserve(d.sentences.size());
  for (const auto& s : d.sentences) {
    auto& ids = e.sentences.emplace_back();
    for (const auto& t : s) ids.push_back(vocab.id(t));
  }
  for (const auto& t : d.query) e.query.push_back(vocab.id(t));
  e.answer = vocab.id(d.answer);
  e.answer_sentence = d.answer_sentence;
  return e;
}

}  // namespace hmn::data
