// Command-line front end: prepare data, train, evaluate, classify, predict.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "connecte/checkpoint.hpp"
#include "connecte/evaluator.hpp"
#include "connecte/kg.hpp"
#include "connecte/manifest.hpp"
#include "connecte/model.hpp"
#include "connecte/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace connecte;

namespace {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

struct PreparedData {
  Vocab entities;
  Vocab relations;
  Vocab types;
  std::vector<Triple> triples;
  std::vector<TypeAssertion> assertions;
  std::vector<TypeTriple> type_triples;
};

PreparedData load_prepared(const std::string& data_dir) {
  const fs::path base(data_dir);
  PreparedData d;
  d.entities = load_vocab((base / "vocab_entity.tsv").string());
  d.relations = load_vocab((base / "vocab_relation.tsv").string());
  d.types = load_vocab((base / "vocab_type.tsv").string());
  d.triples =
      load_triples((base / "triples.tsv").string(), d.entities, d.relations, MissingSymbol::Error);
  d.assertions = load_type_assertions((base / "type_assertions.tsv").string(), d.entities,
                                      d.types, MissingSymbol::Error);
  d.type_triples = load_type_triples((base / "type_triples.tsv").string(), d.types, d.relations,
                                     MissingSymbol::Error);
  return d;
}

std::vector<std::string> prefix_suggestions(const Vocab& vocab, const std::string& query,
                                            std::size_t max_n) {
  for (std::size_t len = query.size(); len > 0; --len) {
    const std::string prefix = query.substr(0, len);
    std::vector<std::string> matches;
    for (const std::string& name : vocab.names()) {
      if (name.size() >= prefix.size() && name.compare(0, prefix.size(), prefix) == 0) {
        matches.push_back(name);
        if (matches.size() >= max_n) break;
      }
    }
    if (!matches.empty()) return matches;
  }
  return {};
}

json config_echo(const TrainConfig& c) {
  return json{{"alpha", c.alpha},         {"gamma1", c.gamma1},
              {"gamma2", c.gamma2},       {"gamma3", c.gamma3},
              {"kappa", c.kappa},         {"ell", c.ell},
              {"lambda", c.lambda_weight}, {"epochs", c.epochs},
              {"batch_size", c.batch_size}, {"seed", c.seed},
              {"neg_per_pos", c.neg_per_pos}, {"threads", c.threads}};
}

int cmd_prepare(const std::string& triples_path, const std::string& types_path,
                const std::string& out_dir, int min_count) {
  Stopwatch watch;
  // Everything is parsed before any output file is created, so input errors
  // leave no partial outputs behind.
  Vocab entities, relations, types;
  std::vector<Triple> triples =
      load_triples(triples_path, entities, relations, MissingSymbol::Grow);
  std::vector<TypeAssertion> assertions =
      load_type_assertions(types_path, entities, types, MissingSymbol::Grow);

  TypeTripleGenStats stats;
  std::vector<TypeTriple> type_triples = generate_type_triples(
      triples, types_of_entities(assertions, entities.size()), min_count, &stats);

  fs::create_directories(out_dir);
  const fs::path base(out_dir);
  write_vocab((base / "vocab_entity.tsv").string(), entities);
  write_vocab((base / "vocab_relation.tsv").string(), relations);
  write_vocab((base / "vocab_type.tsv").string(), types);
  write_triples((base / "triples.tsv").string(), triples, entities, relations);
  write_type_assertions((base / "type_assertions.tsv").string(), assertions, entities, types);
  write_type_triples((base / "type_triples.tsv").string(), type_triples, types, relations);

  std::cout << "entities: " << entities.size() << "\n"
            << "relations: " << relations.size() << "\n"
            << "types: " << types.size() << "\n"
            << "triples: " << triples.size() << "\n"
            << "type assertions: " << assertions.size() << "\n"
            << "type-triple expansions: " << stats.expansions << "\n"
            << "type triples (unique): " << stats.unique << "\n"
            << "type triples (surviving, min_count=" << min_count << "): " << stats.surviving
            << "\n";

  RunManifest manifest;
  manifest.command = "prepare";
  manifest.config = json{{"min_count", min_count}};
  manifest.inputs = {{triples_path, to_hex(fnv1a_file(triples_path))},
                     {types_path, to_hex(fnv1a_file(types_path))}};
  manifest.extra = json{{"expansions", stats.expansions},
                        {"unique", stats.unique},
                        {"surviving", stats.surviving},
                        {"entities", entities.size()},
                        {"relations", relations.size()},
                        {"types", types.size()}};
  manifest.wall_clock_seconds = watch.seconds();
  manifest.write((base / "run_manifest.json").string());
  return 0;
}

int cmd_train(const std::string& data_dir, const std::string& out_dir, const TrainConfig& cfg) {
  Stopwatch watch;
  cfg.validate();  // reject bad configs before touching any data
  PreparedData data = load_prepared(data_dir);
  KnowledgeBase kb = build_kb(std::move(data.triples), std::move(data.assertions), {}, {},
                              std::move(data.type_triples), data.entities.size(),
                              data.relations.size(), data.types.size());

  TrainResult result = train(kb, cfg, [](const EpochLosses& l, const ModelParams&) {
    std::cout << "epoch " << l.epoch << " J1=" << l.j1 << " J2=" << l.j2 << " J3=" << l.j3
              << std::endl;
  });

  save_checkpoint(result.params, cfg, data.entities, data.relations, data.types, out_dir);

  const fs::path base(out_dir);
  {
    std::ofstream csv(base / "loss_history.csv", std::ios::binary);
    if (!csv.is_open()) throw DataError("cannot write loss_history.csv");
    csv << "epoch,j1,j2,j3\n";
    csv.precision(17);
    for (const EpochLosses& l : result.history) {
      csv << l.epoch << ',' << l.j1 << ',' << l.j2 << ',' << l.j3 << '\n';
    }
  }

  RunManifest manifest;
  manifest.command = "train";
  manifest.config = config_echo(cfg);
  manifest.seed = cfg.seed;
  for (const char* name :
       {"triples.tsv", "type_assertions.tsv", "type_triples.tsv", "vocab_entity.tsv",
        "vocab_relation.tsv", "vocab_type.tsv"}) {
    const std::string path = (fs::path(data_dir) / name).string();
    manifest.inputs.emplace_back(path, to_hex(fnv1a_file(path)));
  }
  json history = json::array();
  for (const EpochLosses& l : result.history) {
    history.push_back({{"epoch", l.epoch}, {"j1", l.j1}, {"j2", l.j2}, {"j3", l.j3}});
  }
  manifest.extra = json{{"loss_history", history}};
  manifest.wall_clock_seconds = watch.seconds();
  manifest.write((base / "run_manifest.json").string());

  std::cout << "checkpoint written to " << out_dir << "\n";
  return 0;
}

struct EvalInputs {
  Checkpoint ckpt;
  KnowledgeBase kb;
  std::vector<TypeAssertion> test;
  LoadStats test_stats;
  std::vector<std::pair<std::string, std::string>> input_hashes;
};

EvalInputs load_eval_inputs(const std::string& ckpt_dir, const std::string& data_dir,
                            const std::string& test_path, const std::string& valid_path) {
  EvalInputs in;
  in.ckpt = load_checkpoint(ckpt_dir);

  const fs::path base(data_dir);
  std::vector<Triple> triples = load_triples((base / "triples.tsv").string(), in.ckpt.entities,
                                             in.ckpt.relations, MissingSymbol::Error);
  std::vector<TypeAssertion> train_assertions =
      load_type_assertions((base / "type_assertions.tsv").string(), in.ckpt.entities,
                           in.ckpt.types, MissingSymbol::Error);

  std::vector<TypeAssertion> valid;
  if (!valid_path.empty()) {
    valid = load_type_assertions(valid_path, in.ckpt.entities, in.ckpt.types,
                                 MissingSymbol::Skip);
  }
  in.test = load_type_assertions(test_path, in.ckpt.entities, in.ckpt.types, MissingSymbol::Skip,
                                 &in.test_stats);

  in.kb = build_kb(std::move(triples), std::move(train_assertions), valid, in.test, {},
                   in.ckpt.entities.size(), in.ckpt.relations.size(), in.ckpt.types.size());

  in.input_hashes = {{(fs::path(ckpt_dir) / "manifest.json").string(),
                      to_hex(fnv1a_file((fs::path(ckpt_dir) / "manifest.json").string()))},
                     {(base / "triples.tsv").string(),
                      to_hex(fnv1a_file((base / "triples.tsv").string()))},
                     {(base / "type_assertions.tsv").string(),
                      to_hex(fnv1a_file((base / "type_assertions.tsv").string()))},
                     {test_path, to_hex(fnv1a_file(test_path))}};
  if (!valid_path.empty()) {
    in.input_hashes.emplace_back(valid_path, to_hex(fnv1a_file(valid_path)));
  }
  return in;
}

int cmd_eval(const std::string& ckpt_dir, const std::string& data_dir,
             const std::string& test_path, const std::string& valid_path,
             const std::string& mode_str, double lambda, int threads,
             const std::string& out_dir) {
  Stopwatch watch;
  EvalInputs in = load_eval_inputs(ckpt_dir, data_dir, test_path, valid_path);
  const ScoreMode mode = parse_score_mode(mode_str);
  if (lambda < 0) lambda = in.ckpt.config.lambda_weight;

  std::vector<RankedPair> per_pair;
  RankReport report = evaluate_typing(in.ckpt.params, in.kb, in.test, lambda, mode,
                                      /*filtered=*/true, threads, &per_pair);
  report.skipped += in.test_stats.skipped;  // out-of-vocabulary test lines

  RunManifest manifest;
  manifest.command = "eval";
  manifest.config = json{{"mode", mode_str},   {"lambda", lambda},
                         {"filtered", true},   {"threads", threads},
                         {"checkpoint", ckpt_dir}, {"test", test_path},
                         {"valid", valid_path}};
  manifest.seed = in.ckpt.config.seed;
  manifest.inputs = in.input_hashes;

  fs::create_directories(out_dir);
  const fs::path base(out_dir);
  write_typing_report((base / "typing_report.json").string(), report, mode, lambda, true,
                      manifest.stable_hash(), config_echo(in.ckpt.config));
  write_ranks_tsv((base / "ranks.tsv").string(), per_pair, in.ckpt.entities, in.ckpt.types);
  manifest.wall_clock_seconds = watch.seconds();
  manifest.write((base / "run_manifest.json").string());

  std::cout << "MRR: " << report.mrr << "\n";
  for (const auto& [k, pct] : report.hits_at) {
    std::cout << "HITS@" << k << ": " << pct << "%\n";
  }
  std::cout << "evaluated: " << report.evaluated << "  skipped: " << report.skipped << "\n";
  return 0;
}

int cmd_classify(const std::string& ckpt_dir, const std::string& data_dir,
                 const std::string& valid_path, const std::string& test_path,
                 const std::string& mode_str, double lambda, std::uint64_t seed,
                 const std::string& out_dir) {
  Stopwatch watch;
  EvalInputs in = load_eval_inputs(ckpt_dir, data_dir, test_path, valid_path);
  const ScoreMode mode = parse_score_mode(mode_str);
  if (lambda < 0) lambda = in.ckpt.config.lambda_weight;

  std::vector<TypeAssertion> valid = load_type_assertions(valid_path, in.ckpt.entities,
                                                          in.ckpt.types, MissingSymbol::Skip);

  Rng rng(seed);
  Rng valid_rng = rng.fork(1);
  Rng test_rng = rng.fork(2);
  std::vector<LabeledPair> valid_pairs = make_classification_split(valid, in.kb, valid_rng);
  std::vector<LabeledPair> test_pairs = make_classification_split(in.test, in.kb, test_rng);

  ClassifyReport report =
      classify(in.ckpt.params, in.kb, valid_pairs, test_pairs, lambda, mode);

  RunManifest manifest;
  manifest.command = "classify";
  manifest.config = json{{"mode", mode_str}, {"lambda", lambda},     {"seed", seed},
                         {"checkpoint", ckpt_dir}, {"valid", valid_path}, {"test", test_path}};
  manifest.seed = seed;
  manifest.inputs = in.input_hashes;

  fs::create_directories(out_dir);
  const fs::path base(out_dir);
  write_classify_report((base / "classify_report.json").string(), report, mode, lambda,
                        manifest.stable_hash());
  write_pr_curve((base / "pr_curve.tsv").string(), report.pr_points);
  manifest.wall_clock_seconds = watch.seconds();
  manifest.write((base / "run_manifest.json").string());

  std::cout << "threshold: " << report.threshold << "\n"
            << "accuracy: " << report.accuracy << "\n"
            << "best F1: " << report.f1_best << " (precision " << report.precision_at_f1
            << ", recall " << report.recall_at_f1 << ")\n";
  return 0;
}

int cmd_predict(const std::string& ckpt_dir, const std::string& data_dir,
                const std::string& entity_surface, int topk, const std::string& mode_str,
                double lambda, const std::string& out_dir) {
  Stopwatch watch;
  Checkpoint ckpt = load_checkpoint(ckpt_dir);
  const ScoreMode mode = parse_score_mode(mode_str);
  if (lambda < 0) lambda = ckpt.config.lambda_weight;

  auto entity = ckpt.entities.find(entity_surface);
  if (!entity) {
    std::ostringstream msg;
    msg << "unknown entity '" << entity_surface << "'";
    auto suggestions = prefix_suggestions(ckpt.entities, entity_surface, 5);
    if (!suggestions.empty()) {
      msg << "; nearest by prefix:";
      for (const std::string& s : suggestions) msg << ' ' << s;
    }
    throw DataError(msg.str());
  }

  const fs::path base(data_dir);
  std::vector<Triple> triples = load_triples((base / "triples.tsv").string(), ckpt.entities,
                                             ckpt.relations, MissingSymbol::Error);
  std::vector<TypeAssertion> assertions = load_type_assertions(
      (base / "type_assertions.tsv").string(), ckpt.entities, ckpt.types, MissingSymbol::Error);
  KnowledgeBase kb = build_kb(std::move(triples), std::move(assertions), {}, {}, {},
                              ckpt.entities.size(), ckpt.relations.size(), ckpt.types.size());

  auto top = predict_topk(ckpt.params, kb, *entity, topk, lambda, mode);
  for (std::size_t i = 0; i < top.size(); ++i) {
    std::cout << (i + 1) << '\t' << ckpt.types.name(top[i].first) << '\t' << top[i].second
              << '\n';
  }

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    const fs::path out(out_dir);
    {
      std::ofstream tsv(out / "predictions.tsv", std::ios::binary);
      if (!tsv.is_open()) throw DataError("cannot write predictions.tsv");
      tsv << "rank\ttype\tscore\n";
      tsv.precision(17);
      for (std::size_t i = 0; i < top.size(); ++i) {
        tsv << (i + 1) << '\t' << ckpt.types.name(top[i].first) << '\t' << top[i].second << '\n';
      }
    }
    RunManifest manifest;
    manifest.command = "predict";
    manifest.config = json{{"entity", entity_surface}, {"topk", topk},
                           {"mode", mode_str},         {"lambda", lambda},
                           {"checkpoint", ckpt_dir}};
    manifest.seed = ckpt.config.seed;
    manifest.inputs = {{(fs::path(ckpt_dir) / "manifest.json").string(),
                        to_hex(fnv1a_file((fs::path(ckpt_dir) / "manifest.json").string()))}};
    manifest.wall_clock_seconds = watch.seconds();
    manifest.write((out / "run_manifest.json").string());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint entity/type/relation embeddings for knowledge-graph entity typing"};
  app.require_subcommand(1);

  // prepare
  std::string triples_path, types_path, prep_out;
  int min_count = 1;
  auto* prepare = app.add_subcommand("prepare", "Build vocabularies and the type-triple set");
  prepare->add_option("--triples", triples_path, "training triples TSV")->required();
  prepare->add_option("--types", types_path, "training type assertions TSV")->required();
  prepare->add_option("--out-dir", prep_out, "output directory")->required();
  prepare->add_option("--min-count", min_count, "minimum expansion frequency to keep")
      ->check(CLI::PositiveNumber);

  // train
  std::string train_data, train_out;
  TrainConfig cfg;
  auto* train_cmd = app.add_subcommand("train", "Train embeddings on prepared data");
  train_cmd->add_option("--data-dir", train_data, "prepared data directory")->required();
  train_cmd->add_option("--out", train_out, "checkpoint output directory")->required();
  train_cmd->add_option("--kappa", cfg.kappa, "entity-space dimension");
  train_cmd->add_option("--ell", cfg.ell, "type-space dimension");
  train_cmd->add_option("--alpha", cfg.alpha, "Adagrad learning rate");
  train_cmd->add_option("--gamma1", cfg.gamma1, "triple margin");
  train_cmd->add_option("--gamma2", cfg.gamma2, "assertion margin");
  train_cmd->add_option("--gamma3", cfg.gamma3, "type-triple margin");
  train_cmd->add_option("--lambda", cfg.lambda_weight, "composite trade-off weight");
  train_cmd->add_option("--epochs", cfg.epochs, "training epochs");
  train_cmd->add_option("--batch", cfg.batch_size, "batch size");
  train_cmd->add_option("--seed", cfg.seed, "RNG seed");
  train_cmd->add_option("--neg-per-pos", cfg.neg_per_pos, "negatives per positive");
  train_cmd->add_option("--threads", cfg.threads,
                        "worker threads (>1 forfeits bitwise determinism)");
  train_cmd->add_option("--init-bound", cfg.init_bound, "override uniform init bound");
  train_cmd->add_option("--adagrad-eps", cfg.adagrad_eps, "Adagrad stabilizer");
  train_cmd->set_config("--config", "", "key=value file; command line takes precedence");

  // eval
  std::string eval_ckpt, eval_data, eval_test, eval_valid, eval_mode = "composite", eval_out;
  double eval_lambda = -1;
  int eval_threads = 1;
  auto* eval_cmd = app.add_subcommand("eval", "Filtered type-prediction ranking");
  eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint directory")->required();
  eval_cmd->add_option("--data-dir", eval_data, "prepared data directory")->required();
  eval_cmd->add_option("--test", eval_test, "test assertions TSV")->required();
  eval_cmd->add_option("--valid", eval_valid, "validation assertions TSV (for filtering)");
  eval_cmd->add_option("--mode", eval_mode, "e2t or composite");
  eval_cmd->add_option("--lambda", eval_lambda, "composite weight (default: checkpoint config)");
  eval_cmd->add_option("--threads", eval_threads, "evaluation worker threads");
  eval_cmd->add_option("--out-dir", eval_out, "report output directory")->required();

  // classify
  std::string cls_ckpt, cls_data, cls_valid, cls_test, cls_mode = "composite", cls_out;
  double cls_lambda = -1;
  std::uint64_t cls_seed = 1;
  auto* cls_cmd = app.add_subcommand("classify", "Entity-type classification with threshold");
  cls_cmd->add_option("--checkpoint", cls_ckpt, "checkpoint directory")->required();
  cls_cmd->add_option("--data-dir", cls_data, "prepared data directory")->required();
  cls_cmd->add_option("--valid", cls_valid, "validation assertions TSV")->required();
  cls_cmd->add_option("--test", cls_test, "test assertions TSV")->required();
  cls_cmd->add_option("--mode", cls_mode, "e2t or composite");
  cls_cmd->add_option("--lambda", cls_lambda, "composite weight (default: checkpoint config)");
  cls_cmd->add_option("--seed", cls_seed, "seed for negative sampling");
  cls_cmd->add_option("--out-dir", cls_out, "report output directory")->required();

  // predict
  std::string pred_ckpt, pred_data, pred_entity, pred_mode = "composite", pred_out;
  int pred_topk = 10;
  double pred_lambda = -1;
  auto* pred_cmd = app.add_subcommand("predict", "Top-k type prediction for one entity");
  pred_cmd->add_option("--checkpoint", pred_ckpt, "checkpoint directory")->required();
  pred_cmd->add_option("--data-dir", pred_data, "prepared data directory")->required();
  pred_cmd->add_option("--entity", pred_entity, "entity surface form")->required();
  pred_cmd->add_option("--topk", pred_topk, "number of predictions");
  pred_cmd->add_option("--mode", pred_mode, "e2t or composite");
  pred_cmd->add_option("--lambda", pred_lambda, "composite weight (default: checkpoint config)");
  pred_cmd->add_option("--out-dir", pred_out, "optional output directory for predictions");

  try {
    app.parse(argc, argv);
    if (prepare->parsed()) return cmd_prepare(triples_path, types_path, prep_out, min_count);
    if (train_cmd->parsed()) return cmd_train(train_data, train_out, cfg);
    if (eval_cmd->parsed()) {
      return cmd_eval(eval_ckpt, eval_data, eval_test, eval_valid, eval_mode, eval_lambda,
                      eval_threads, eval_out);
    }
    if (cls_cmd->parsed()) {
      return cmd_classify(cls_ckpt, cls_data, cls_valid, cls_test, cls_mode, cls_lambda, cls_seed,
                          cls_out);
    }
    if (pred_cmd->parsed()) {
      return cmd_predict(pred_ckpt, pred_data, pred_entity, pred_topk, pred_mode, pred_lambda,
                         pred_out);
    }
    return 0;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
