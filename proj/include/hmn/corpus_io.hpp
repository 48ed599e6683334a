#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hmn/dialogue.hpp"
#include "hmn/generator.hpp"

namespace hmn::data {

inline constexpr int kCorpusSchemaVersion = 1;

class CorpusFormatError : public std::runtime_error {
 public:
  CorpusFormatError(const std::string& msg, std::size_t line)
      : std::runtime_error(msg), line_number(line) {}
  std::size_t line_number;  // 1-based; 0 when not tied to a line
};

// Split file layout: a header line
//   {"schema":"hmn-corpus","version":1,"split":"train","count":N}
// followed by N records, one per line:
//   {"sentences":[[tok,...],...],"query":[tok,...],"answer":tok,
//    "answer_sentence":int,"domain":str,"slot":str}
void write_split(std::ostream& os, std::string_view split, const std::vector<Dialogue>& dialogues);
std::vector<Dialogue> read_split(std::istream& is, std::string_view split);

/// Writes train.jsonl, dev.jsonl, test.jsonl and, when given, meta.json
/// (config, seed, realized unseen proportions, vocabulary).
void save_corpus(const std::filesystem::path& dir, const Corpus& corpus,
                 const std::optional<CorpusMeta>& meta = std::nullopt);
Corpus load_corpus(const std::filesystem::path& dir);

std::string dialogue_to_json(const Dialogue& d);
Dialogue dialogue_from_json(const std::string& line);

}  // namespace hmn::data
