#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "CLI11.hpp"
#include "kgelab/attack.hpp"
#include "kgelab/dataset.hpp"
#include "kgelab/evaluator.hpp"
#include "kgelab/model.hpp"
#include "kgelab/pipeline.hpp"
#include "kgelab/trainer.hpp"

namespace fs = std::filesystem;
using namespace kgelab;

namespace {

struct SharedFlags {
  std::string dataset_dir;
  std::string model = "distmult";
  std::string out;
  TrainConfig tc;
  std::string optimizer = "adam";
};

void add_config_file(CLI::App* cmd) {
  // Parsed by expand_config_args before CLI11 runs; registered here for --help.
  static std::string sink;
  cmd->add_option("--config", sink,
                  "key=value config file (keys are long option names); flags override it");
}

// Splices the lines of a --config file into the argument list as --key=value
// tokens right after the subcommand, dropping keys the command line already
// sets, so explicit flags always win.
std::vector<std::string> expand_config_args(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::size_t pos = args.size(), drop = 0;
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      pos = i;
      drop = 2;
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      pos = i;
      drop = 1;
      break;
    }
  }
  if (drop == 0) return args;

  std::unordered_set<std::string> given;
  for (const std::string& a : args) {
    if (a.rfind("--", 0) == 0) given.insert(a.substr(0, a.find('=')));
  }

  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::vector<std::string> injected;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq <= first) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    const auto key_end = line.find_last_not_of(" \t", eq - 1);
    const std::string key = "--" + line.substr(first, key_end - first + 1);
    auto val_begin = line.find_first_not_of(" \t", eq + 1);
    const auto val_end = line.find_last_not_of(" \t\r");
    const std::string val =
        val_begin == std::string::npos || val_begin > val_end
            ? ""
            : line.substr(val_begin, val_end - val_begin + 1);
    if (given.count(key)) continue;
    injected.push_back(val.empty() ? key : key + "=" + val);
  }

  args.erase(args.begin() + static_cast<std::ptrdiff_t>(pos),
             args.begin() + static_cast<std::ptrdiff_t>(pos + drop));
  args.insert(args.begin() + 1, injected.begin(), injected.end());
  return args;
}

void add_dataset_out(CLI::App* cmd, SharedFlags& f, bool out_required = true) {
  cmd->add_option("--dataset-dir", f.dataset_dir, "directory with train.txt/valid.txt/test.txt")
      ->required();
  auto* out = cmd->add_option("--out", f.out, "output directory");
  if (out_required) out->required();
}

void add_train_options(CLI::App* cmd, SharedFlags& f) {
  cmd->add_option("--model", f.model, "embedding model")
      ->check(CLI::IsMember({"distmult", "complex", "transe"}));
  cmd->add_option("--dim", f.tc.dim, "embedding dimension");
  cmd->add_option("--epochs", f.tc.epochs, "training epochs");
  cmd->add_option("--batch-size", f.tc.batch_size, "queries per batch");
  cmd->add_option("--lr", f.tc.lr, "learning rate");
  cmd->add_option("--label-smoothing", f.tc.label_smoothing, "label smoothing in [0,1)");
  cmd->add_option("--l2", f.tc.l2, "L2 coefficient on mean squared embedding norm");
  cmd->add_option("--input-dropout", f.tc.input_dropout, "dropout on key-side embeddings");
  cmd->add_option("--optimizer", f.optimizer, "optimizer")
      ->check(CLI::IsMember({"adam", "sgd"}));
  cmd->add_option("--margin", f.tc.margin, "margin constant of the additive scorer");
  cmd->add_option("--seed", f.tc.seed, "RNG seed");
}

ModelKind resolve_kind(const SharedFlags& f) {
  auto kind = parse_kind(f.model);
  if (!kind) throw std::runtime_error("unknown model: " + f.model);
  return *kind;
}

TrainConfig resolve_train_config(SharedFlags& f) {
  f.tc.optimizer = f.optimizer == "sgd" ? OptimizerKind::Sgd : OptimizerKind::Adam;
  return f.tc;
}

Side parse_side(const std::string& s) {
  if (s == "subject") return Side::Subject;
  if (s == "object") return Side::Object;
  return Side::Both;
}

Dataset load_with_log(const std::string& dir) {
  LoadStats stats;
  Dataset ds = load_dataset_dir(dir, &stats);
  std::cerr << "loaded " << dir << ": " << ds.train.size() << " train / " << ds.valid.size()
            << " valid / " << ds.test.size() << " test, " << ds.vocab.n_entities()
            << " entities, " << ds.vocab.n_relations() << " relations";
  if (stats.train_duplicates || stats.valid_dropped || stats.test_dropped) {
    std::cerr << " (dropped " << stats.train_duplicates << " dup train, " << stats.valid_dropped
              << " valid, " << stats.test_dropped << " test)";
  }
  std::cerr << "\n";
  return ds;
}

void write_manifest(const std::string& out_dir,
                    const std::vector<std::pair<std::string, std::string>>& kv) {
  fs::create_directories(out_dir);
  std::ofstream out((fs::path(out_dir) / "manifest.txt").string());
  out << "version=" << kVersion << '\n';
  for (const auto& [k, v] : kv) out << k << '=' << v << '\n';
}

void write_targets_tsv(const std::string& path, const std::vector<TargetRecord>& targets,
                       const Vocabulary& vocab) {
  std::ofstream out(path);
  out << "subject\trelation\tobject\tsubject_rank\tobject_rank\n";
  for (const TargetRecord& t : targets) {
    out << vocab.entity_name(t.triple.s) << '\t' << vocab.relation_name(t.triple.r) << '\t'
        << vocab.entity_name(t.triple.o) << '\t' << t.subject_rank << '\t' << t.object_rank
        << '\n';
  }
}

void write_decoys_tsv(const std::string& path, const std::vector<DecoyChoice>& decoys,
                      const Vocabulary& vocab) {
  std::ofstream out(path);
  out << std::setprecision(17);
  out << "side\tsubject\trelation\tobject\tdecoy_entity\theuristic_score\n";
  for (const DecoyChoice& d : decoys) {
    out << side_name(d.side) << '\t' << vocab.entity_name(d.target.s) << '\t'
        << vocab.relation_name(d.target.r) << '\t' << vocab.entity_name(d.target.o) << '\t'
        << vocab.entity_name(d.decoy_entity) << '\t' << d.heuristic_score << '\n';
  }
}

std::vector<DecoyChoice> read_decoys_tsv(const std::string& path, const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<DecoyChoice> decoys;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 || line.empty()) continue;
    std::istringstream row(line);
    std::string side, s, r, o, decoy, score;
    if (!std::getline(row, side, '\t') || !std::getline(row, s, '\t') ||
        !std::getline(row, r, '\t') || !std::getline(row, o, '\t') ||
        !std::getline(row, decoy, '\t')) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected 6 columns");
    }
    std::getline(row, score, '\t');
    DecoyChoice d;
    d.side = side == "subject" ? Side::Subject : Side::Object;
    auto sid = vocab.entity_id(s), oid = vocab.entity_id(o), did = vocab.entity_id(decoy);
    auto rid = vocab.relation_id(r);
    if (!sid || !oid || !did || !rid) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": name not in vocabulary");
    }
    d.target = Triple{*sid, *rid, *oid};
    d.decoy_entity = *did;
    d.heuristic_score = score.empty() ? 0.0 : std::stod(score);
    decoys.push_back(d);
  }
  return decoys;
}

int cmd_train(SharedFlags& f) {
  const Dataset ds = load_with_log(f.dataset_dir);
  const ModelKind kind = resolve_kind(f);
  const TrainConfig tc = resolve_train_config(f);
  const std::string ckpt = (fs::path(f.out) / "checkpoint").string();
  fs::create_directories(f.out);
  auto [model, report] = train(ds, kind, tc, ckpt);
  {
    std::ofstream loss((fs::path(f.out) / "train_loss.tsv").string());
    loss << std::setprecision(10) << "epoch\tmean_loss\n";
    for (std::size_t i = 0; i < report.epoch_loss.size(); ++i) {
      loss << i + 1 << '\t' << report.epoch_loss[i] << '\n';
    }
  }
  write_manifest(f.out, {{"command", "train"},
                         {"model", kind_name(kind)},
                         {"dataset_dir", f.dataset_dir},
                         {"checkpoint", ckpt},
                         {"train_config_hash", config_hash(tc)}});
  std::cout << "trained " << kind_name(kind) << " for " << tc.epochs << " epochs in "
            << std::setprecision(3) << report.seconds << " s, final mean loss "
            << std::setprecision(8)
            << (report.epoch_loss.empty() ? 0.0 : report.epoch_loss.back()) << "\n"
            << "checkpoint: " << ckpt << "\n";
  return 0;
}

int cmd_evaluate(SharedFlags& f, const std::string& checkpoint, const std::string& split,
                 const std::string& side_str) {
  const Dataset ds = load_with_log(f.dataset_dir);
  CheckpointMeta meta;
  const Model model = load_checkpoint(checkpoint, &meta);
  const FilterIndex fidx(ds);
  const std::vector<Triple>& triples =
      split == "train" ? ds.train : (split == "valid" ? ds.valid : ds.test);
  const Side side = parse_side(side_str);
  const std::vector<RankOutcome> outcomes = rank_all(model, triples, fidx);
  const MetricsReport report = metrics_from_outcomes(outcomes, side);
  fs::create_directories(f.out);
  write_metrics_tsv((fs::path(f.out) / "metrics.tsv").string(), report);
  write_ranks_tsv((fs::path(f.out) / "ranks.tsv").string(), outcomes, ds.vocab);
  write_manifest(f.out, {{"command", "evaluate"},
                         {"model", kind_name(model.kind)},
                         {"dataset_dir", f.dataset_dir},
                         {"checkpoint", checkpoint},
                         {"split", split},
                         {"side", side_name(side)},
                         {"train_config_hash", meta.train_config_hash}});
  std::cout << format_summary(report) << "\n";
  return 0;
}

int cmd_select_targets(SharedFlags& f, const std::string& checkpoint, int cutoff,
                       bool either_side) {
  const Dataset ds = load_with_log(f.dataset_dir);
  CheckpointMeta meta;
  const Model model = load_checkpoint(checkpoint, &meta);
  const FilterIndex fidx(ds);
  const std::vector<TargetRecord> targets = select_targets(model, ds, fidx, cutoff, !either_side);
  fs::create_directories(f.out);
  write_targets_tsv((fs::path(f.out) / "targets.tsv").string(), targets, ds.vocab);
  write_manifest(f.out, {{"command", "select-targets"},
                         {"model", kind_name(model.kind)},
                         {"dataset_dir", f.dataset_dir},
                         {"checkpoint", checkpoint},
                         {"cutoff", std::to_string(cutoff)},
                         {"rule", either_side ? "either" : "both"},
                         {"train_config_hash", meta.train_config_hash}});
  std::cout << targets.size() << " of " << ds.test.size() << " test triples ranked within "
            << cutoff << " on " << (either_side ? "either side" : "both sides") << "\n";
  return 0;
}

int cmd_attack(SharedFlags& f, const std::string& checkpoint, const std::string& pattern,
               const std::string& heuristic, const std::string& baseline, int clusters,
               const std::string& step3, bool exclude_r, int cutoff, bool either_side) {
  const Dataset ds = load_with_log(f.dataset_dir);
  CheckpointMeta meta;
  const Model model = load_checkpoint(checkpoint, &meta);
  const FilterIndex fidx(ds);
  const std::vector<TargetRecord> targets = select_targets(model, ds, fidx, cutoff, !either_side);
  std::cerr << targets.size() << " targets at cutoff " << cutoff << "\n";

  AttackResult result;
  if (!baseline.empty()) {
    result = generate_random_baseline(ds, targets, *parse_baseline(baseline), f.tc.seed);
  } else {
    if (pattern.empty() || heuristic.empty()) {
      throw std::runtime_error("attack requires --pattern and --heuristic, or --baseline");
    }
    AttackConfig ac;
    ac.pattern = *parse_pattern(pattern);
    ac.heuristic = *parse_heuristic(heuristic);
    ac.clusters_k = clusters;
    ac.seed = f.tc.seed;
    ac.step3 = step3 == "body" ? Step3Mode::BodyArgmax : Step3Mode::LiteralArgmax;
    ac.exclude_target_relation = exclude_r;
    result = generate_attack(model, ds, fidx, targets, ac);
  }

  fs::create_directories(f.out);
  write_edits_tsv((fs::path(f.out) / "edits.tsv").string(), result, ds.vocab);
  write_decoys_tsv((fs::path(f.out) / "decoys.tsv").string(), result.decoys, ds.vocab);
  write_targets_tsv((fs::path(f.out) / "targets.tsv").string(), targets, ds.vocab);
  write_manifest(f.out, {{"command", "attack"},
                         {"attack", result.name},
                         {"model", kind_name(model.kind)},
                         {"dataset_dir", f.dataset_dir},
                         {"checkpoint", checkpoint},
                         {"cutoff", std::to_string(cutoff)},
                         {"clusters", std::to_string(clusters)},
                         {"step3", step3},
                         {"seed", std::to_string(f.tc.seed)},
                         {"train_config_hash", meta.train_config_hash}});
  for (const SkipRecord& skip : result.skips) {
    std::cerr << "skipped " << side_name(skip.side) << " side of ("
              << ds.vocab.entity_name(skip.target.s) << ", "
              << ds.vocab.relation_name(skip.target.r) << ", "
              << ds.vocab.entity_name(skip.target.o) << "): " << skip.reason << "\n";
  }
  std::cout << result.name << ": " << result.unique_triples.size() << " edit triples for "
            << targets.size() << " targets (" << result.skips.size() << " skips) in "
            << std::setprecision(3) << result.generation_seconds << " s\n";
  return 0;
}

int cmd_poison(SharedFlags& f, const std::string& edits_path) {
  const Dataset ds = load_with_log(f.dataset_dir);
  const std::vector<Triple> edits = read_edits_tsv(edits_path, ds.vocab);
  std::size_t added = 0;
  const Dataset merged = merge_poison(ds, edits, &added);
  write_dataset_dir(f.out, merged);
  write_summary(f.out, {{"edits_read", edits.size()},
                        {"edits_added", added},
                        {"train_size", merged.train.size()}});
  write_manifest(f.out, {{"command", "poison"},
                         {"dataset_dir", f.dataset_dir},
                         {"edits", edits_path},
                         {"edits_added", std::to_string(added)}});
  std::cout << "added " << added << " of " << edits.size() << " edit triples; poisoned train has "
            << merged.train.size() << " triples\n";
  return 0;
}

int cmd_pipeline(SharedFlags& f, const std::vector<std::string>& attack_tokens,
                 std::vector<std::uint64_t> seeds, int cutoff, bool either_side, int clusters,
                 const std::string& step3, const std::string& reuse_clean, bool allow_mismatch) {
  PipelineConfig pc;
  pc.dataset_dir = f.dataset_dir;
  pc.kind = resolve_kind(f);
  pc.train = resolve_train_config(f);
  pc.out_dir = f.out;
  pc.seeds = std::move(seeds);
  pc.target_cutoff = cutoff;
  pc.either_side = either_side;
  pc.clusters_k = clusters;
  pc.step3 = step3 == "body" ? Step3Mode::BodyArgmax : Step3Mode::LiteralArgmax;
  pc.reuse_clean_dir = reuse_clean;
  pc.allow_config_mismatch = allow_mismatch;
  for (const std::string& token : attack_tokens) {
    auto spec = AttackSpec::parse(token);
    if (!spec) throw std::runtime_error("unknown attack token: " + token);
    pc.attacks.push_back(*spec);
  }

  const ExperimentReport report = run_pipeline(pc);
  std::cout << std::setprecision(4);
  std::cout << "seed\tattack\tclean_mrr\tpoisoned_mrr\trelative_change\n";
  for (const AttackRow& r : report.rows) {
    std::cout << r.seed_label << '\t' << r.attack << '\t' << r.clean_mrr << '\t' << r.poisoned_mrr
              << '\t' << r.relative_change << '\n';
  }
  if (!f.out.empty()) std::cout << "report written under " << f.out << "\n";
  return 0;
}

int cmd_decoy_report(SharedFlags& f, const std::string& clean_ckpt,
                     const std::string& poisoned_ckpt, const std::string& decoys_path) {
  const Dataset ds = load_with_log(f.dataset_dir);
  const Model clean = load_checkpoint(clean_ckpt);
  const Model poisoned = load_checkpoint(poisoned_ckpt);
  const FilterIndex fidx(ds);
  const std::vector<DecoyChoice> decoys = read_decoys_tsv(decoys_path, ds.vocab);
  const std::vector<DecoyRow> rows = decoy_report(clean, poisoned, decoys, fidx);

  fs::create_directories(f.out);
  {
    std::ofstream out((fs::path(f.out) / "decoy_report.tsv").string());
    out << std::setprecision(10) << "side\tn\tclean_mrr\tpoisoned_mrr\trelative_change\n";
    for (const DecoyRow& r : rows) {
      out << side_name(r.side) << '\t' << r.n << '\t' << r.clean_mrr << '\t' << r.poisoned_mrr
          << '\t' << r.relative_change << '\n';
    }
  }
  write_manifest(f.out, {{"command", "decoy-report"},
                         {"dataset_dir", f.dataset_dir},
                         {"clean", clean_ckpt},
                         {"poisoned", poisoned_ckpt},
                         {"decoys", decoys_path}});
  for (const DecoyRow& r : rows) {
    std::cout << side_name(r.side) << " side: " << r.n << " decoys, MRR " << std::setprecision(4)
              << r.clean_mrr << " -> " << r.poisoned_mrr << " (" << r.relative_change * 100.0
              << "%)\n";
  }
  if (rows.empty()) std::cout << "no decoys on either side\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"knowledge-graph embedding lab: train, attack, and evaluate link predictors"};
  app.require_subcommand(1);

  SharedFlags f;
  std::string checkpoint, split = "test", side = "both";
  std::string pattern, heuristic, baseline, step3 = "literal";
  std::string edits_path, decoys_path, clean_ckpt, poisoned_ckpt, reuse_clean;
  std::vector<std::string> attack_tokens;
  std::vector<std::uint64_t> seeds;
  int cutoff = 10, clusters = 100;
  bool either_side = false, exclude_r = false, allow_mismatch = false;

  auto* train_cmd = app.add_subcommand("train", "train a model and save a checkpoint");
  add_config_file(train_cmd);
  add_dataset_out(train_cmd, f);
  add_train_options(train_cmd, f);

  auto* eval_cmd = app.add_subcommand("evaluate", "filtered ranking metrics for a checkpoint");
  add_config_file(eval_cmd);
  add_dataset_out(eval_cmd, f);
  eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint directory")->required();
  eval_cmd->add_option("--split", split, "split to rank")
      ->check(CLI::IsMember({"train", "valid", "test"}));
  eval_cmd->add_option("--side", side, "ranked side")
      ->check(CLI::IsMember({"subject", "object", "both"}));

  auto* targets_cmd = app.add_subcommand("select-targets", "test triples the model ranks well");
  add_config_file(targets_cmd);
  add_dataset_out(targets_cmd, f);
  targets_cmd->add_option("--checkpoint", checkpoint, "checkpoint directory")->required();
  targets_cmd->add_option("--cutoff", cutoff, "max rank to qualify");
  targets_cmd->add_flag("--either-side", either_side, "one qualifying side suffices");

  auto* attack_cmd = app.add_subcommand("attack", "generate adversarial edits for the targets");
  add_config_file(attack_cmd);
  add_dataset_out(attack_cmd, f);
  attack_cmd->add_option("--checkpoint", checkpoint, "checkpoint directory")->required();
  attack_cmd->add_option("--pattern", pattern, "inference pattern")
      ->check(CLI::IsMember({"sym", "inv", "com"}));
  attack_cmd->add_option("--heuristic", heuristic, "decoy heuristic")
      ->check(CLI::IsMember({"truth", "rank", "cos"}));
  attack_cmd->add_option("--baseline", baseline, "random baseline instead of a pattern attack")
      ->check(CLI::IsMember({"random_n", "random_g1", "random_g2"}));
  attack_cmd->add_option("--clusters", clusters, "k for the composition soft-truth clustering");
  attack_cmd->add_option("--step3-mode", step3, "composition third-entity rule")
      ->check(CLI::IsMember({"literal", "body"}));
  attack_cmd->add_flag("--exclude-target-relation", exclude_r,
                       "drop pairs containing the target relation from the composition search");
  attack_cmd->add_option("--cutoff", cutoff, "target selection cutoff");
  attack_cmd->add_flag("--either-side", either_side, "one qualifying side suffices");
  attack_cmd->add_option("--seed", f.tc.seed, "RNG seed");

  auto* poison_cmd = app.add_subcommand("poison", "merge edit triples into the train split");
  add_config_file(poison_cmd);
  add_dataset_out(poison_cmd, f);
  poison_cmd->add_option("--edits", edits_path, "edits TSV from the attack subcommand")
      ->required();

  auto* pipe_cmd = app.add_subcommand("pipeline", "clean train, attacks, retrains, full report");
  add_config_file(pipe_cmd);
  add_dataset_out(pipe_cmd, f);
  add_train_options(pipe_cmd, f);
  pipe_cmd->add_option("--attacks", attack_tokens,
                       "comma-separated list: pat:heur (sym:cos), baselines (random_n), none")
      ->required()
      ->delimiter(',');
  pipe_cmd->add_option("--seeds", seeds, "comma-separated seeds; default the --seed value")
      ->delimiter(',');
  pipe_cmd->add_option("--cutoff", cutoff, "target selection cutoff");
  pipe_cmd->add_flag("--either-side", either_side, "one qualifying side suffices");
  pipe_cmd->add_option("--clusters", clusters, "k for the composition soft-truth clustering");
  pipe_cmd->add_option("--step3-mode", step3, "composition third-entity rule")
      ->check(CLI::IsMember({"literal", "body"}));
  pipe_cmd->add_option("--reuse-clean", reuse_clean,
                       "checkpoint directory to reuse as the clean model (single seed)");
  pipe_cmd->add_flag("--allow-config-mismatch", allow_mismatch,
                     "accept a reused checkpoint trained under a different config");

  auto* decoy_cmd = app.add_subcommand("decoy-report", "decoy MRR shift between two checkpoints");
  add_config_file(decoy_cmd);
  add_dataset_out(decoy_cmd, f);
  decoy_cmd->add_option("--clean", clean_ckpt, "clean checkpoint directory")->required();
  decoy_cmd->add_option("--poisoned", poisoned_ckpt, "poisoned checkpoint directory")->required();
  decoy_cmd->add_option("--decoys", decoys_path, "decoys TSV from the attack subcommand")
      ->required();

  try {
    std::vector<std::string> args = expand_config_args(argc, argv);
    std::reverse(args.begin(), args.end());  // the vector overload pops from the back
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (app.got_subcommand(train_cmd)) return cmd_train(f);
    if (app.got_subcommand(eval_cmd)) return cmd_evaluate(f, checkpoint, split, side);
    if (app.got_subcommand(targets_cmd)) return cmd_select_targets(f, checkpoint, cutoff, either_side);
    if (app.got_subcommand(attack_cmd)) {
      return cmd_attack(f, checkpoint, pattern, heuristic, baseline, clusters, step3, exclude_r,
                        cutoff, either_side);
    }
    if (app.got_subcommand(poison_cmd)) return cmd_poison(f, edits_path);
    if (app.got_subcommand(pipe_cmd)) {
      return cmd_pipeline(f, attack_tokens, seeds, cutoff, either_side, clusters, step3,
                          reuse_clean, allow_mismatch);
    }
    if (app.got_subcommand(decoy_cmd)) {
      return cmd_decoy_report(f, clean_ckpt, poisoned_ckpt, decoys_path);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
