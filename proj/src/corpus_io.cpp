#include "hmn/corpus_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "json.hpp"

namespace hmn::data {
namespace {

using nlohmann::json;

json header_json(std::string_view split, std::size_t count) {
  return json{{"schema", "hmn-corpus"},
              {"version", kCorpusSchemaVersion},
              {"split", std::string(split)},
              {"count", count}};
}

json config_json(const CorpusConfig& c) {
  json pools = json::object();
  for (const auto& [k, v] : c.pool_sizes) pools[k] = v;
  return json{{"domain", to_string(c.domain)},
              {"train", c.train},
              {"dev", c.dev},
              {"test", c.test},
              {"pool_sizes", pools},
              {"default_pool_size", c.default_pool_size},
              {"heldout_fraction", c.heldout_fraction},
              {"heldout_as_distractors", c.heldout_as_distractors},
              {"unseen_answer_target", c.unseen_answer_target},
              {"styles",
               {{"direct", c.styles.direct},
                {"echo", c.styles.echo},
                {"generic", c.styles.generic}}},
              {"seed", c.seed}};
}

}  // namespace

std::string dialogue_to_json(const Dialogue& d) {
  json j;
  j["sentences"] = d.sentences;
  j["query"] = d.query;
  j["answer"] = d.answer;
  j["answer_sentence"] = d.answer_sentence;
  j["domain"] = to_string(d.domain);
  j["slot"] = d.slot;
  return j.dump();
}

Dialogue dialogue_from_json(const std::string& line) {
  const auto j = json::parse(line);
  Dialogue d;
  d.sentences = j.at("sentences").get<std::vector<Sentence>>();
  d.query = j.at("query").get<Sentence>();
  d.answer = j.at("answer").get<std::string>();
  d.answer_sentence = j.at("answer_sentence").get<int>();
  d.domain = parse_domain(j.at("domain").get<std::string>());
  d.slot = j.value("slot", std::string{});
  return d;
}

void write_split(std::ostream& os, std::string_view split, const std::vector<Dialogue>& dialogues) {
  os << header_json(split, dialogues.size()).dump() << '\n';
  for (const auto& d : dialogues) os << dialogue_to_json(d) << '\n';
}

std::vector<Dialogue> read_split(std::istream& is, std::string_view split) {
  std::string line;
  if (!std::getline(is, line)) throw CorpusFormatError("missing header line", 1);
  std::size_t expected = 0;
  try {
    const auto h = json::parse(line);
    if (h.at("schema") != "hmn-corpus") throw CorpusFormatError("not a corpus file", 1);
    const int version = h.at("version").get<int>();
    if (version != kCorpusSchemaVersion) {
      throw CorpusFormatError("unsupported corpus schema version " + std::to_string(version), 1);
    }
    if (h.at("split").get<std::string>() != split) {
      throw CorpusFormatError("header names split '" + h.at("split").get<std::string>() +
                                  "', expected '" + std::string(split) + "'",
                              1);
    }
    expected = h.at("count").get<std::size_t>();
  } catch (const json::exception& e) {
    throw CorpusFormatError(std::string("malformed header: ") + e.what(), 1);
  }

  std::vector<Dialogue> out;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(dialogue_from_json(line));
    } catch (const std::exception& e) {
      throw CorpusFormatError("malformed record at line " + std::to_string(line_no) +
                                  " (last good line " + std::to_string(line_no - 1) +
                                  "): " + e.what(),
                              line_no);
    }
    if (auto why = validate(out.back())) {
      throw CorpusFormatError("invalid dialogue at line " + std::to_string(line_no) + ": " + *why,
                              line_no);
    }
  }
  if (out.size() != expected) {
    throw CorpusFormatError("split '" + std::string(split) + "' truncated: header declares " +
                                std::to_string(expected) + " records, found " +
                                std::to_string(out.size()) + "; last good line " +
                                std::to_string(line_no),
                            line_no);
  }
  return out;
}

void save_corpus(const std::filesystem::path& dir, const Corpus& corpus,
                 const std::optional<CorpusMeta>& meta) {
  std::filesystem::create_directories(dir);
  for (auto name : kSplitNames) {
    std::ofstream os(dir / (std::string(name) + ".jsonl"), std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write split file in " + dir.string());
    write_split(os, name, corpus.split(name));
  }
  if (meta) {
    const auto vocab = build_vocabulary(corpus);
    json m{{"schema", "hmn-corpus-meta"},
           {"version", kCorpusSchemaVersion},
           {"config", config_json(meta->config)},
           {"seed", meta->config.seed},
           {"counts",
            {{"train", corpus.train.size()},
             {"dev", corpus.dev.size()},
             {"test", corpus.test.size()}}},
           {"realized_unseen",
            {{"dev", meta->unseen_dev},
             {"test", meta->unseen_test},
             {"dev_test", meta->unseen_dev_test}}},
           {"vocabulary_size", vocab.size()},
           {"vocabulary", vocab.tokens()}};
    std::ofstream os(dir / "meta.json", std::ios::binary | std::ios::trunc);
    os << m.dump(1) << '\n';
  }
}

Corpus load_corpus(const std::filesystem::path& dir) {
  Corpus c;
  for (auto name : kSplitNames) {
    const auto path = dir / (std::string(name) + ".jsonl");
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    try {
      c.split(name) = read_split(is, name);
    } catch (const CorpusFormatError& e) {
      throw CorpusFormatError(path.filename().string() + ": " + e.what(), e.line_number);
    }
  }
  return c;
}

}  // namespace hmn::data
