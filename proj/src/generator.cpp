#include "hmn/generator.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <unordered_set>

#include "hmn/params.hpp"

namespace hmn::data {
namespace {

enum class EntityKind { person, phone, passport, idcard, date, place, flight, email, member };

struct SlotSpec {
  const char* name;
  const char* keyword;
  EntityKind kind;
};

const std::vector<SlotSpec>& air_slots() {
  static const std::vector<SlotSpec> s = {
      {"name", "name", EntityKind::person},
      {"phone", "phone number", EntityKind::phone},
      {"passport", "passport number", EntityKind::passport},
      {"departure", "departure date", EntityKind::date},
      {"destination", "destination city", EntityKind::place},
      {"flight", "flight number", EntityKind::flight},
  };
  return s;
}

const std::vector<SlotSpec>& hotel_slots() {
  static const std::vector<SlotSpec> s = {
      {"name", "name", EntityKind::person},
      {"phone", "phone number", EntityKind::phone},
      {"id_card", "id card number", EntityKind::idcard},
      {"checkin", "checkin date", EntityKind::date},
      {"email", "email address", EntityKind::email},
      {"membership", "membership number", EntityKind::member},
  };
  return s;
}

const std::vector<SlotSpec>& specs(Domain d) {
  return d == Domain::air_ticket ? air_slots() : hotel_slots();
}

const SlotSpec& spec_for(Domain d, const std::string& slot) {
  for (const auto& s : specs(d)) {
    if (slot == s.name) return s;
  }
  throw std::invalid_argument("slot '" + slot + "' not defined for domain " + to_string(d));
}

// Canonical order of every slot across both domains; fixes pool seeding.
const std::vector<SlotSpec>& all_slot_specs() {
  static const std::vector<SlotSpec> all = [] {
    std::vector<SlotSpec> v;
    std::set<std::string> seen;
    for (const auto* list : {&air_slots(), &hotel_slots()}) {
      for (const auto& s : *list) {
        if (seen.insert(s.name).second) v.push_back(s);
      }
    }
    return v;
  }();
  return all;
}

const std::vector<std::string> kMarkers = {"sir",   "madam", "friend",  "mate",
                                           "dear",  "boss",  "pal",     "chief",
                                           "buddy", "partner", "neighbor", "colleague"};

const std::vector<std::string> kQuestion = {
    "what is your {k} ?",
    "could you tell me your {k} please ?",
    "may i have your {k} ?",
    "please give me your {k} .",
    "i will need your {k} next .",
};
const std::vector<std::string> kDirect = {
    "my {k} is {v} .",
    "{v} is my {k} .",
    "sure , my {k} is {v} .",
    "the {k} is {v} .",
};
const std::vector<std::string> kEcho = {
    "{m} , it is {v} .",
    "yes {m} , {v} .",
    "ok {m} , it 's {v} .",
    "well {m} , that is {v} .",
};
const std::vector<std::string> kGeneric = {
    "it is {v} .",
    "{v} .",
    "ok , {v} .",
    "sure , it 's {v} .",
    "that would be {v} .",
};
const std::vector<std::string> kQuery = {
    "what is the client 's {k} ?",
    "tell me the {k} of the client .",
    "which {k} did the client give ?",
    "what {k} does the client have ?",
};

struct Bookends {
  std::vector<std::string> greet_agent, greet_client, close_agent, close_client;
};

const Bookends& bookends(Domain d) {
  static const Bookends air{
      {"hello , welcome to the air ticket service , how can i help you ?",
       "good morning , this is flight booking , what can i do for you ?"},
      {"hi , i would like to book a flight .", "hello , i want to buy a plane ticket ."},
      {"thank you , your ticket is booked .", "all done , is there anything else ?"},
      {"no , thanks , bye .", "that is all , goodbye ."}};
  static const Bookends hotel{
      {"hello , welcome to the hotel front desk , how can i help you ?",
       "good evening , this is room reservation , what can i do for you ?"},
      {"hi , i would like to reserve a room .", "hello , i need a room for a few nights ."},
      {"thank you , your room is reserved .", "all set , is there anything else ?"},
      {"no , thanks , bye .", "that is all , goodbye ."}};
  return d == Domain::air_ticket ? air : hotel;
}

std::size_t pick(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>(rng() % n);
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[pick(rng, i)]);
}

Sentence tokenize(const std::string& s) {
  Sentence out;
  std::istringstream is(s);
  for (std::string t; is >> t;) out.push_back(t);
  return out;
}

Sentence render(const std::string& tmpl, const std::string& keyword, const std::string& value,
                const std::string& marker) {
  Sentence out;
  for (auto& t : tokenize(tmpl)) {
    if (t == "{k}") {
      for (auto& k : tokenize(keyword)) out.push_back(k);
    } else if (t == "{v}") {
      out.push_back(value);
    } else if (t == "{m}") {
      out.push_back(marker);
    } else {
      out.push_back(t);
    }
  }
  return out;
}

// Random template from `options` whose rendering fits the sentence cap;
// remaining candidates are tried in random order before giving up.
Sentence render_fitting(const std::vector<std::string>& options, std::mt19937_64& rng,
                        const std::string& keyword, const std::string& value,
                        const std::string& marker, const std::string& prefix = {}) {
  std::vector<std::size_t> order(options.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  shuffle(order, rng);
  for (auto i : order) {
    auto s = render(prefix + options[i], keyword, value, marker);
    if (s.size() <= kMaxSentenceLength) return s;
  }
  throw TemplateOverflow("no template renders within " + std::to_string(kMaxSentenceLength) +
                         " tokens for value '" + value + "'");
}

AnswerStyle sample_style(const StyleWeights& w, std::mt19937_64& rng) {
  const double total = w.direct + w.echo + w.generic;
  const double u = uniform01(rng) * total;
  if (u < w.direct) return AnswerStyle::direct;
  if (u < w.direct + w.echo) return AnswerStyle::echo;
  return AnswerStyle::generic;
}

// ---- entity pools ----------------------------------------------------------

const char* kOnsets[] = {"b", "c", "d", "f", "g", "h", "j", "k", "l", "m", "n", "p",
                         "r", "s", "t", "v", "w", "z", "br", "ch", "st", "tr", "sh"};
const char* kVowels[] = {"a", "e", "i", "o", "u", "ai", "ou"};
const char* kCodas[] = {"", "n", "r", "s", "l", "th", "ck"};
const char* kPlaceSuffix[] = {"ton", "burg", "ville", "port", "field", "stad"};

std::string syllables(std::mt19937_64& rng, std::size_t count) {
  std::string s;
  for (std::size_t i = 0; i < count; ++i) {
    s += kOnsets[pick(rng, std::size(kOnsets))];
    s += kVowels[pick(rng, std::size(kVowels))];
    s += kCodas[pick(rng, std::size(kCodas))];
  }
  return s;
}

std::string capitalized(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

std::string digits(std::mt19937_64& rng, std::size_t n, bool leading_nonzero = true) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    const bool first = i == 0 && leading_nonzero;
    s += static_cast<char>('0' + (first ? 1 + pick(rng, 9) : pick(rng, 10)));
  }
  return s;
}

std::string two_digits(std::size_t v) {
  return (v < 10 ? "0" : "") + std::to_string(v);
}

std::string make_entity(EntityKind kind, std::mt19937_64& rng) {
  switch (kind) {
    case EntityKind::person:
      return capitalized(syllables(rng, 2 + pick(rng, 2)));
    case EntityKind::place:
      return capitalized(syllables(rng, 1 + pick(rng, 2)) +
                         kPlaceSuffix[pick(rng, std::size(kPlaceSuffix))]);
    case EntityKind::phone:
      return "1" + std::to_string(3 + pick(rng, 7)) + digits(rng, 9, false);
    case EntityKind::passport:
      return digits(rng, 9);
    case EntityKind::idcard:
      return digits(rng, 18);
    case EntityKind::date:
      return std::to_string(2010 + pick(rng, 20)) + "-" + two_digits(1 + pick(rng, 12)) + "-" +
             two_digits(1 + pick(rng, 28));
    case EntityKind::flight: {
      std::string s;
      s += static_cast<char>('A' + pick(rng, 26));
      s += static_cast<char>('A' + pick(rng, 26));
      return s + digits(rng, 3 + pick(rng, 2));
    }
    case EntityKind::email:
      return syllables(rng, 2) + two_digits(pick(rng, 100)) + "@mail.com";
    case EntityKind::member:
      return "VIP" + digits(rng, 6, false);
  }
  return {};
}

struct Pool {
  std::vector<std::string> train_side;
  std::vector<std::string> heldout;
};

std::map<std::string, Pool> build_pools(const CorpusConfig& cfg) {
  std::map<std::string, Pool> pools;
  std::unordered_set<std::string> taken;
  const auto& all = all_slot_specs();
  for (std::size_t s = 0; s < all.size(); ++s) {
    std::mt19937_64 rng(diff::mix_seed(cfg.seed, 0x5100 + s));
    const auto size = cfg.pool_size(all[s].name);
    std::vector<std::string> values;
    std::size_t attempts = 0;
    while (values.size() < size) {
      auto v = make_entity(all[s].kind, rng);
      if (taken.insert(v).second) values.push_back(std::move(v));
      if (++attempts > 50 * size + 1000) {
        throw InfeasibleCorpus(std::string("cannot draw ") + std::to_string(size) +
                                   " distinct values for slot '" + all[s].name + "'",
                               values.size());
      }
    }
    const auto held = static_cast<std::size_t>(std::floor(static_cast<double>(size) *
                                                           cfg.heldout_fraction));
    Pool p;
    p.train_side.assign(values.begin(), values.end() - static_cast<std::ptrdiff_t>(held));
    p.heldout.assign(values.end() - static_cast<std::ptrdiff_t>(held), values.end());
    pools.emplace(all[s].name, std::move(p));
  }
  return pools;
}

Domain pick_domain(DomainChoice c, std::mt19937_64& rng) {
  switch (c) {
    case DomainChoice::air_ticket: return Domain::air_ticket;
    case DomainChoice::hotel: return Domain::hotel;
    case DomainChoice::all: return pick(rng, 2) == 0 ? Domain::air_ticket : Domain::hotel;
  }
  return Domain::air_ticket;
}

const std::string& draw(const std::vector<std::string>& v, std::mt19937_64& rng) {
  return v[pick(rng, v.size())];
}

const std::string& draw_full(const Pool& p, std::mt19937_64& rng) {
  const auto i = pick(rng, p.train_side.size() + p.heldout.size());
  return i < p.train_side.size() ? p.train_side[i] : p.heldout[i - p.train_side.size()];
}

}  // namespace

DomainChoice parse_domain_choice(std::string_view s) {
  if (s == "air_ticket") return DomainChoice::air_ticket;
  if (s == "hotel") return DomainChoice::hotel;
  if (s == "all") return DomainChoice::all;
  throw std::invalid_argument("unknown domain '" + std::string(s) + "'");
}

std::string to_string(DomainChoice d) {
  switch (d) {
    case DomainChoice::air_ticket: return "air_ticket";
    case DomainChoice::hotel: return "hotel";
    case DomainChoice::all: return "all";
  }
  return "?";
}

std::size_t CorpusConfig::pool_size(const std::string& slot) const {
  auto it = pool_sizes.find(slot);
  return it == pool_sizes.end() ? default_pool_size : it->second;
}

void CorpusConfig::validate() const {
  if (unseen_answer_target < 0.0 || unseen_answer_target > 1.0) {
    throw std::invalid_argument("unseen_answer_target must lie in [0,1]");
  }
  if (heldout_fraction < 0.0 || heldout_fraction >= 1.0) {
    throw std::invalid_argument("heldout_fraction must lie in [0,1)");
  }
  if (styles.direct < 0 || styles.echo < 0 || styles.generic < 0 ||
      styles.direct + styles.echo + styles.generic <= 0) {
    throw std::invalid_argument("answer style weights must be nonnegative and not all zero");
  }
}

CorpusConfig config_for_total(std::size_t total) {
  CorpusConfig c;
  c.train = total * 45 / 100;
  c.dev = total * 5 / 100;
  c.test = total - c.train - c.dev;
  return c;
}

const std::vector<std::string>& domain_slots(Domain d) {
  static const auto names = [](const std::vector<SlotSpec>& v) {
    std::vector<std::string> out;
    for (const auto& s : v) out.emplace_back(s.name);
    return out;
  };
  static const std::vector<std::string> air = names(air_slots());
  static const std::vector<std::string> hotel = names(hotel_slots());
  return d == Domain::air_ticket ? air : hotel;
}

std::mt19937_64 dialogue_rng(std::uint64_t seed, int split, std::size_t index) {
  return std::mt19937_64(
      diff::mix_seed(seed, (static_cast<std::uint64_t>(split) << 40) + index));
}

Dialogue generate_dialogue(Domain domain, const SlotAssignment& slots, std::mt19937_64& rng,
                           const StyleWeights& styles) {
  auto order = domain_slots(domain);
  for (const auto& s : order) {
    if (!slots.values.count(s)) {
      throw std::invalid_argument("slot assignment lacks a value for '" + s + "'");
    }
  }
  const auto& queried_spec = spec_for(domain, slots.queried);
  shuffle(order, rng);

  auto markers = kMarkers;
  shuffle(markers, rng);
  std::size_t next_marker = 0;

  const auto& be = bookends(domain);
  Dialogue d;
  d.domain = domain;
  d.slot = slots.queried;
  d.sentences.push_back(tokenize(draw(be.greet_agent, rng)));
  d.sentences.push_back(tokenize(draw(be.greet_client, rng)));
  for (const auto& slot : order) {
    const auto& spec = spec_for(domain, slot);
    const auto& value = slots.values.at(slot);
    const auto style = sample_style(styles, rng);
    std::string marker;
    std::string prefix;
    if (style == AnswerStyle::echo) {
      marker = markers[next_marker++];
      prefix = "{m} , ";
    }
    d.sentences.push_back(render_fitting(kQuestion, rng, spec.keyword, value, marker, prefix));
    const auto& answers = style == AnswerStyle::direct ? kDirect
                          : style == AnswerStyle::echo ? kEcho
                                                       : kGeneric;
    if (slot == slots.queried) d.answer_sentence = static_cast<int>(d.sentences.size());
    d.sentences.push_back(render_fitting(answers, rng, spec.keyword, value, marker));
  }
  d.sentences.push_back(tokenize(draw(be.close_agent, rng)));
  d.sentences.push_back(tokenize(draw(be.close_client, rng)));
  d.query = render_fitting(kQuery, rng, queried_spec.keyword, {}, {});
  d.answer = slots.values.at(slots.queried);
  return d;
}

GeneratedCorpus generate_corpus(const CorpusConfig& cfg) {
  cfg.validate();
  const auto pools = build_pools(cfg);
  GeneratedCorpus out;
  out.meta.config = cfg;

  // train: every entity from the train side of its pool
  std::map<std::string, std::vector<std::string>> answers_by_slot;
  std::unordered_set<std::string> train_answer_set;
  for (std::size_t i = 0; i < cfg.train; ++i) {
    auto plan_rng = dialogue_rng(cfg.seed, 0, i);
    auto render_rng = dialogue_rng(cfg.seed, 3, i);
    const auto domain = pick_domain(cfg.domain, plan_rng);
    SlotAssignment a;
    a.queried = draw(domain_slots(domain), plan_rng);
    for (const auto& s : domain_slots(domain)) {
      const auto& side = pools.at(s).train_side;
      if (side.empty()) {
        throw InfeasibleCorpus("slot '" + s + "' has no train-side entities",
                               static_cast<std::size_t>(std::ceil(
                                   1.0 / std::max(1e-9, 1.0 - cfg.heldout_fraction))));
      }
      a.values[s] = s != a.queried && cfg.heldout_as_distractors ? draw_full(pools.at(s), render_rng)
                                                                 : draw(side, render_rng);
    }
    const auto& ans = a.values[a.queried];
    if (train_answer_set.insert(ans).second) answers_by_slot[a.queried].push_back(ans);
    out.corpus.train.push_back(generate_dialogue(domain, a, render_rng, cfg.styles));
  }

  // dev/test: plan which examples get unseen answers, check capacity, render
  struct Plan {
    Domain domain;
    std::string queried;
    bool unseen;
  };
  std::vector<std::vector<Plan>> plans(2);
  std::map<std::string, std::size_t> unseen_need;
  for (int s = 1; s <= 2; ++s) {
    const auto n = s == 1 ? cfg.dev : cfg.test;
    const auto n_unseen = static_cast<std::size_t>(
        std::llround(cfg.unseen_answer_target * static_cast<double>(n)));
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::mt19937_64 sel_rng(diff::mix_seed(cfg.seed, 0x7700 + static_cast<std::uint64_t>(s)));
    shuffle(idx, sel_rng);
    std::vector<bool> unseen(n, false);
    for (std::size_t i = 0; i < n_unseen; ++i) unseen[idx[i]] = true;

    for (std::size_t i = 0; i < n; ++i) {
      auto plan_rng = dialogue_rng(cfg.seed, s, i);
      Plan p{pick_domain(cfg.domain, plan_rng), {}, unseen[i]};
      if (p.unseen) {
        p.queried = draw(domain_slots(p.domain), plan_rng);
        ++unseen_need[p.queried];
      } else {
        std::vector<std::string> answerable;
        for (const auto& slot : domain_slots(p.domain)) {
          if (answers_by_slot.count(slot)) answerable.push_back(slot);
        }
        if (answerable.empty()) {
          throw InfeasibleCorpus(
              "seen answers requested but the train split has no answers for domain " +
                  to_string(p.domain),
              0);
        }
        p.queried = draw(answerable, plan_rng);
      }
      plans[static_cast<std::size_t>(s - 1)].push_back(std::move(p));
    }
  }
  // Report the pool size that satisfies every slot, not just the first short one.
  std::string short_slot;
  std::size_t short_need = 0, short_have = 0, required = 0;
  for (const auto& [slot, need] : unseen_need) {
    const auto have = pools.at(slot).heldout.size();
    if (need <= have) continue;
    const auto slot_required =
        cfg.heldout_fraction > 0.0
            ? static_cast<std::size_t>(std::ceil(static_cast<double>(need) /
                                                 cfg.heldout_fraction)) + 1
            : static_cast<std::size_t>(-1);
    if (short_slot.empty() || slot_required > required) {
      short_slot = slot;
      short_need = need;
      short_have = have;
      required = slot_required;
    }
  }
  if (!short_slot.empty()) {
    throw InfeasibleCorpus("unseen-answer target needs " + std::to_string(short_need) +
                               " held-out values for slot '" + short_slot + "' but only " +
                               std::to_string(short_have) + " exist; pool size of about " +
                               std::to_string(required) + " required",
                           required);
  }

  std::map<std::string, std::size_t> heldout_cursor;
  for (int s = 1; s <= 2; ++s) {
    auto& split = s == 1 ? out.corpus.dev : out.corpus.test;
    const auto& ps = plans[static_cast<std::size_t>(s - 1)];
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const auto& p = ps[i];
      auto render_rng = dialogue_rng(cfg.seed, s + 3, i);
      SlotAssignment a;
      a.queried = p.queried;
      for (const auto& slot : domain_slots(p.domain)) {
        const auto& pool = pools.at(slot);
        if (slot == p.queried) {
          a.values[slot] = p.unseen ? pool.heldout[heldout_cursor[slot]++]
                                    : draw(answers_by_slot.at(slot), render_rng);
        } else {
          a.values[slot] = draw_full(pool, render_rng);
        }
      }
      split.push_back(generate_dialogue(p.domain, a, render_rng, cfg.styles));
    }
  }

  out.meta.unseen_dev = unseen_fraction(out.corpus.dev, train_answer_set);
  out.meta.unseen_test = unseen_fraction(out.corpus.test, train_answer_set);
  std::vector<Dialogue> both = out.corpus.dev;
  both.insert(both.end(), out.corpus.test.begin(), out.corpus.test.end());
  out.meta.unseen_dev_test = unseen_fraction(both, train_answer_set);
  return out;
}

}  // namespace hmn::data
