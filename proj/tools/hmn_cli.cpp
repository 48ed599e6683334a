#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>

#include "hmn/corpus_io.hpp"
#include "hmn/generator.hpp"
#include "hmn/harness.hpp"

namespace {

using namespace hmn;
using nlohmann::json;

struct HyperOptions {
  train::HyperParams hp;
  std::string encoder = "bigru";
  std::string reduction = "mean";
  std::string pooling = "final_hop";

  void attach(CLI::App* app, bool with_k = true) {
    app->add_option("--d", hp.dim, "embedding and hidden size")->capture_default_str();
    app->add_option("--hops", hp.hops, "reasoning hops")->capture_default_str();
    if (with_k) {
      app->add_option("--k", hp.k, "sentences kept by k-max pooling")->capture_default_str();
    }
    app->add_option("--lr", hp.learning_rate, "initial learning rate")->capture_default_str();
    app->add_option("--batch", hp.batch_size, "batch size")->capture_default_str();
    app->add_option("--epochs", hp.epochs, "training epochs")->capture_default_str();
    app->add_option("--anneal", hp.anneal_interval, "epochs between learning-rate halvings")
        ->capture_default_str();
    app->add_option("--clip", hp.clip_norm, "global gradient norm limit")->capture_default_str();
    app->add_option("--seed", hp.seed, "random seed")->capture_default_str();
    app->add_option("--encoder", encoder, "word encoder")
        ->check(CLI::IsMember({"bigru", "gru", "embedding"}))
        ->capture_default_str();
    app->add_option("--grad-reduction", reduction, "combine batch gradients by mean or sum")
        ->check(CLI::IsMember({"mean", "sum"}))
        ->capture_default_str();
    app->add_option("--pooling", pooling, "attention ranked by k-max pooling")
        ->check(CLI::IsMember({"final_hop", "hop_mean"}))
        ->capture_default_str();
  }

  train::HyperParams resolve() const {
    auto out = hp;
    out.encoder = model::parse_encoder(encoder);
    out.grad_reduction = train::parse_grad_reduction(reduction);
    out.pooling = train::parse_pooling(pooling);
    out.validate();
    return out;
  }
};

void write_json(const std::string& path, const json& j) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << j.dump(2) << '\n';
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s + ",") {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical memory networks for answer selection in dialogues"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "generate a synthetic dialogue corpus");
  std::string gen_domain = "air_ticket", gen_out;
  data::CorpusConfig gen_cfg;
  gen->add_option("--domain", gen_domain)
      ->check(CLI::IsMember({"air_ticket", "hotel", "all"}))
      ->capture_default_str();
  gen->add_option("--train", gen_cfg.train)->capture_default_str();
  gen->add_option("--dev", gen_cfg.dev)->capture_default_str();
  gen->add_option("--test", gen_cfg.test)->capture_default_str();
  gen->add_option("--unseen-target", gen_cfg.unseen_answer_target)->capture_default_str();
  gen->add_option("--pool-size", gen_cfg.default_pool_size, "entity values per slot")
      ->capture_default_str();
  gen->add_option("--heldout-fraction", gen_cfg.heldout_fraction,
                  "share of each pool kept out of train")
      ->capture_default_str();
  gen->add_flag("--heldout-distractors", gen_cfg.heldout_as_distractors,
                "allow held-out values as non-answer slots in train");
  gen->add_option("--seed", gen_cfg.seed)->capture_default_str();
  gen->add_option("--out", gen_out, "output directory")->required();

  // train
  auto* tr = app.add_subcommand("train", "train one model variant");
  HyperOptions tr_hp;
  std::string tr_corpus, tr_variant = "hmn", tr_out, tr_log;
  tr->add_option("--corpus", tr_corpus)->required();
  tr->add_option("--variant", tr_variant)
      ->check(CLI::IsMember({"memnn-h1", "memnn-nt", "memnn", "hmn"}))
      ->capture_default_str();
  tr_hp.attach(tr);
  tr->add_option("--out", tr_out, "checkpoint path")->required();
  tr->add_option("--log", tr_log, "write the per-epoch log here instead of stdout");

  // eval
  auto* ev = app.add_subcommand("eval", "count prediction errors of a checkpoint");
  std::string ev_ckpt, ev_corpus, ev_split = "test", ev_readout = "joint";
  ev->add_option("--ckpt", ev_ckpt)->required();
  ev->add_option("--corpus", ev_corpus)->required();
  ev->add_option("--split", ev_split)->check(CLI::IsMember({"dev", "test"}))->capture_default_str();
  ev->add_option("--readout", ev_readout)
      ->check(CLI::IsMember({"sent", "word", "joint"}))
      ->capture_default_str();

  // report
  auto* rep = app.add_subcommand("report", "train variants over several seeds and tabulate errors");
  HyperOptions rep_hp;
  std::string rep_corpus, rep_variants = "memnn-h1,memnn-nt,memnn,hmn", rep_out,
                          rep_split = "test";
  std::size_t rep_runs = 5;
  rep->add_option("--corpus", rep_corpus)->required();
  rep->add_option("--runs", rep_runs)->capture_default_str();
  rep->add_option("--variants", rep_variants, "comma separated")->capture_default_str();
  rep->add_option("--split", rep_split)->check(CLI::IsMember({"dev", "test"}))->capture_default_str();
  rep_hp.attach(rep);
  rep->add_option("--out", rep_out, "report file")->required();

  // trace
  auto* trc = app.add_subcommand("trace", "export attention weights for one example");
  std::string trc_ckpt, trc_corpus, trc_split = "test", trc_out;
  std::size_t trc_index = 0;
  trc->add_option("--ckpt", trc_ckpt)->required();
  trc->add_option("--corpus", trc_corpus)->required();
  trc->add_option("--split", trc_split)
      ->check(CLI::IsMember({"train", "dev", "test"}))
      ->capture_default_str();
  trc->add_option("--example", trc_index)->required();
  trc->add_option("--out", trc_out, "trace file")->required();

  // sweep
  auto* sw = app.add_subcommand("sweep", "HMN errors across k and word encoders");
  HyperOptions sw_hp;
  std::string sw_corpus, sw_k = "1,2,4,8", sw_encoders = "bigru,gru,embedding", sw_out;
  std::size_t sw_runs = 5;
  sw->add_option("--corpus", sw_corpus)->required();
  sw->add_option("--k", sw_k, "comma separated k values")->capture_default_str();
  sw->add_option("--encoders", sw_encoders, "comma separated")->capture_default_str();
  sw->add_option("--runs", sw_runs)->capture_default_str();
  sw_hp.attach(sw, false);
  sw->add_option("--out", sw_out, "table file")->required();

  CLI11_PARSE(app, argc, argv);

  const auto progress = [](const std::string& msg) { std::cerr << msg << '\n'; };
  try {
    if (*gen) {
      gen_cfg.domain = data::parse_domain_choice(gen_domain);
      const auto g = data::generate_corpus(gen_cfg);
      data::save_corpus(gen_out, g.corpus, g.meta);
      std::cout << json{{"train", g.corpus.train.size()},
                        {"dev", g.corpus.dev.size()},
                        {"test", g.corpus.test.size()},
                        {"unseen_dev", g.meta.unseen_dev},
                        {"unseen_test", g.meta.unseen_test}}
                       .dump()
                << '\n';
    } else if (*tr) {
      const auto hp = tr_hp.resolve();
      const auto variant = train::parse_variant(tr_variant);
      const auto prepared = harness::prepare(data::load_corpus(tr_corpus));
      std::ofstream log_file;
      if (!tr_log.empty()) log_file.open(tr_log, std::ios::binary);
      std::ostream& log = tr_log.empty() ? std::cout : log_file;
      auto result = train::train(prepared.train, prepared.vocab.size(), hp, variant,
                                 [&](const train::EpochRecord& r) {
                                   log << train::to_json_line(r) << '\n';
                                   log.flush();
                                 });
      train::save_model(tr_out, result.params,
                        {variant, hp, prepared.vocab.size(), prepared.vocab.fingerprint()});
    } else if (*ev) {
      auto m = train::load_model(ev_ckpt);
      const auto prepared = harness::prepare(data::load_corpus(ev_corpus));
      const auto r = harness::evaluate_model(m.params, m.info, prepared.vocab,
                                             prepared.split(ev_split),
                                             train::parse_readout(ev_readout));
      std::cout << json{{"split", ev_split},
                        {"readout", ev_readout},
                        {"total", r.total},
                        {"errors", r.errors},
                        {"error_rate", r.error_rate()},
                        {"unseen_total", r.unseen_total},
                        {"unseen_errors", r.unseen_errors}}
                       .dump()
                << '\n';
    } else if (*rep) {
      harness::ExperimentConfig cfg;
      cfg.hp = rep_hp.resolve();
      for (const auto& v : split_list(rep_variants)) cfg.variants.push_back(train::parse_variant(v));
      cfg.runs = rep_runs;
      cfg.base_seed = cfg.hp.seed;
      cfg.split = rep_split;
      const auto prepared = harness::prepare(data::load_corpus(rep_corpus));
      const auto report = harness::run_experiment(prepared, cfg, progress);
      write_json(rep_out, harness::to_json(report));
      std::cout << harness::format_table(report);
    } else if (*trc) {
      auto m = train::load_model(trc_ckpt);
      const auto corpus = data::load_corpus(trc_corpus);
      const auto& dialogues = corpus.split(trc_split);
      if (trc_index >= dialogues.size()) {
        throw std::out_of_range("example " + std::to_string(trc_index) + " outside the " +
                                trc_split + " split (" + std::to_string(dialogues.size()) +
                                " dialogues)");
      }
      const auto vocab = data::build_vocabulary(corpus);
      if (vocab.fingerprint() != m.info.vocab_fingerprint) {
        throw harness::VocabularyMismatch("checkpoint was trained on a different vocabulary");
      }
      write_json(trc_out, harness::to_json(harness::trace(dialogues[trc_index], vocab, m.params,
                                                          m.info.hp)));
    } else if (*sw) {
      const auto hp = sw_hp.resolve();
      std::vector<std::size_t> ks;
      for (const auto& k : split_list(sw_k)) ks.push_back(std::stoul(k));
      std::vector<model::EncoderKind> encoders;
      for (const auto& e : split_list(sw_encoders)) encoders.push_back(model::parse_encoder(e));
      const auto prepared = harness::prepare(data::load_corpus(sw_corpus));
      const auto table = harness::k_sweep(prepared, hp, ks, encoders, sw_runs, hp.seed, progress);
      write_json(sw_out, harness::to_json(table));
      std::cout << harness::format_table(table);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
