#include "kgelab/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace kgelab {

std::optional<AttackSpec> AttackSpec::parse(std::string_view token) {
  AttackSpec spec;
  if (token == "none") {
    spec.none = true;
    spec.label = "none";
    return spec;
  }
  if (auto baseline = parse_baseline(token)) {
    spec.is_baseline = true;
    spec.baseline = *baseline;
    spec.label = baseline_name(*baseline);
    spec.label[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(spec.label[0])));
    return spec;
  }
  const std::size_t colon = token.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  auto pattern = parse_pattern(token.substr(0, colon));
  auto heuristic = parse_heuristic(token.substr(colon + 1));
  if (!pattern || !heuristic) return std::nullopt;
  spec.pattern = *pattern;
  spec.heuristic = *heuristic;
  std::string name = pattern_name(*pattern);
  name[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
  spec.label = name + "_" + heuristic_name(*heuristic);
  return spec;
}

namespace {

Real side_mrr(const Model& m, const std::vector<Triple>& triples, const FilterIndex& fidx,
              Side side) {
  Real sum = 0.0;
  for (const Triple& t : triples) {
    sum += 1.0 / static_cast<Real>(rank_triple(m, t, fidx, side));
  }
  return sum / static_cast<Real>(triples.size());
}

}  // namespace

std::vector<DecoyRow> decoy_report(const Model& clean, const Model& poisoned,
                                   const std::vector<DecoyChoice>& decoys,
                                   const FilterIndex& fidx) {
  std::vector<DecoyRow> rows;
  for (Side side : {Side::Subject, Side::Object}) {
    std::vector<Triple> triples;
    for (const DecoyChoice& d : decoys) {
      if (d.side == side) triples.push_back(d.decoy_triple());
    }
    if (triples.empty()) continue;
    DecoyRow row;
    row.side = side;
    row.n = triples.size();
    row.clean_mrr = side_mrr(clean, triples, fidx, side);
    row.poisoned_mrr = side_mrr(poisoned, triples, fidx, side);
    row.relative_change = (row.poisoned_mrr - row.clean_mrr) / row.clean_mrr;
    rows.push_back(row);
  }
  return rows;
}

namespace {

std::string seed_to_label(std::uint64_t seed) { return std::to_string(seed); }

MetricsReport metrics_from_targets(const std::vector<TargetRecord>& targets) {
  std::vector<RankOutcome> outcomes;
  outcomes.reserve(targets.size());
  for (const TargetRecord& t : targets) {
    outcomes.push_back(RankOutcome{t.triple, t.subject_rank, t.object_rank});
  }
  return metrics_from_outcomes(outcomes, Side::Both);
}

// Mean rows per attack across seeds, appended in first-appearance order.
void append_mean_rows(ExperimentReport& report) {
  std::vector<std::string> order;
  auto remember = [&](const std::string& name) {
    if (std::find(order.begin(), order.end(), name) == order.end()) order.push_back(name);
  };
  for (const AttackRow& r : report.rows) remember(r.attack);

  for (const std::string& name : order) {
    AttackRow mean;
    std::size_t n = 0;
    for (const AttackRow& r : report.rows) {
      if (r.attack != name || r.seed_label == "mean") continue;
      mean.clean_mrr += r.clean_mrr;
      mean.clean_hits1 += r.clean_hits1;
      mean.poisoned_mrr += r.poisoned_mrr;
      mean.poisoned_hits1 += r.poisoned_hits1;
      mean.relative_change += r.relative_change;
      mean.edits_added += r.edits_added;
      mean.targets += r.targets;
      ++n;
    }
    if (n < 2) continue;
    const Real d = static_cast<Real>(n);
    mean.seed_label = "mean";
    mean.attack = name;
    mean.clean_mrr /= d;
    mean.clean_hits1 /= d;
    mean.poisoned_mrr /= d;
    mean.poisoned_hits1 /= d;
    mean.relative_change /= d;
    mean.edits_added /= n;
    mean.targets /= n;
    report.rows.push_back(mean);
  }

  std::map<std::pair<std::string, int>, std::pair<DecoyRow, std::size_t>> decoy_acc;
  std::vector<std::pair<std::string, int>> decoy_order;
  for (const DecoyRow& r : report.decoy_rows) {
    if (r.seed_label == "mean") continue;
    const auto key = std::make_pair(r.attack, static_cast<int>(r.side));
    auto it = decoy_acc.find(key);
    if (it == decoy_acc.end()) {
      decoy_acc.emplace(key, std::make_pair(r, std::size_t{1}));
      decoy_order.push_back(key);
    } else {
      it->second.first.n += r.n;
      it->second.first.clean_mrr += r.clean_mrr;
      it->second.first.poisoned_mrr += r.poisoned_mrr;
      it->second.first.relative_change += r.relative_change;
      ++it->second.second;
    }
  }
  for (const auto& key : decoy_order) {
    auto& [row, n] = decoy_acc.at(key);
    if (n < 2) continue;
    const Real d = static_cast<Real>(n);
    row.seed_label = "mean";
    row.n /= n;
    row.clean_mrr /= d;
    row.poisoned_mrr /= d;
    row.relative_change /= d;
    report.decoy_rows.push_back(row);
  }
}

}  // namespace

ExperimentReport run_pipeline(const PipelineConfig& pc) {
  if (pc.attacks.empty()) throw std::invalid_argument("run_pipeline: no attacks configured");
  std::vector<std::uint64_t> seeds = pc.seeds;
  if (seeds.empty()) seeds.push_back(pc.train.seed);
  if (!pc.reuse_clean_dir.empty() && seeds.size() > 1) {
    throw std::invalid_argument("run_pipeline: a reused clean checkpoint implies a single seed");
  }

  namespace fs = std::filesystem;
  const bool writing = !pc.out_dir.empty();
  if (writing) fs::create_directories(pc.out_dir);

  LoadStats stats;
  const Dataset ds = load_dataset_dir(pc.dataset_dir, &stats);
  const FilterIndex fidx(ds);

  ExperimentReport report;
  for (const std::uint64_t seed : seeds) {
    TrainConfig tc = pc.train;
    tc.seed = seed;
    const std::string expected_hash = config_hash(tc);
    const std::string seed_dir =
        writing ? (fs::path(pc.out_dir) / ("seed_" + seed_to_label(seed))).string() : "";
    if (writing) fs::create_directories(seed_dir);

    Model clean;
    if (!pc.reuse_clean_dir.empty()) {
      CheckpointMeta meta;
      clean = load_checkpoint(pc.reuse_clean_dir, &meta);
      if (meta.train_config_hash != expected_hash) {
        const std::string msg = "clean checkpoint was trained under config hash " +
                                meta.train_config_hash + ", pipeline expects " + expected_hash;
        if (!pc.allow_config_mismatch) {
          throw std::runtime_error("run_pipeline: " + msg +
                                   " (pass --allow-config-mismatch to override)");
        }
        std::cerr << "run_pipeline: WARNING: " << msg << "\n";
        report.notes.push_back("config mismatch accepted: " + msg);
      }
      if (clean.kind != pc.kind || clean.n_entities() != ds.vocab.n_entities() ||
          clean.n_relations() != ds.vocab.n_relations()) {
        throw std::runtime_error("run_pipeline: clean checkpoint does not fit the dataset");
      }
    } else {
      auto [trained, train_report] =
          train(ds, pc.kind, tc, writing ? (fs::path(seed_dir) / "clean").string() : "");
      clean = std::move(trained);
      std::cerr << "seed " << seed << ": clean model trained, final epoch loss "
                << (train_report.epoch_loss.empty() ? 0.0 : train_report.epoch_loss.back())
                << "\n";
    }

    const std::vector<TargetRecord> targets =
        select_targets(clean, ds, fidx, pc.target_cutoff, !pc.either_side);
    if (targets.empty()) {
      report.notes.push_back("seed " + seed_to_label(seed) +
                             ": no targets at cutoff, attacks skipped");
      continue;
    }
    std::vector<Triple> target_triples;
    target_triples.reserve(targets.size());
    for (const TargetRecord& t : targets) target_triples.push_back(t.triple);
    const MetricsReport clean_metrics = metrics_from_targets(targets);

    if (writing) {
      std::vector<RankOutcome> outcomes;
      for (const TargetRecord& t : targets) {
        outcomes.push_back(RankOutcome{t.triple, t.subject_rank, t.object_rank});
      }
      write_ranks_tsv((fs::path(seed_dir) / "targets.tsv").string(), outcomes, ds.vocab);
    }

    for (const AttackSpec& spec : pc.attacks) {
      try {
        AttackResult result;
        if (spec.none) {
          result.name = "none";
          result.pattern = "none";
          result.heuristic = "-";
        } else if (spec.is_baseline) {
          result = generate_random_baseline(ds, targets, spec.baseline, seed);
        } else {
          AttackConfig ac;
          ac.pattern = spec.pattern;
          ac.heuristic = spec.heuristic;
          ac.clusters_k = pc.clusters_k;
          ac.seed = seed;
          ac.step3 = pc.step3;
          result = generate_attack(clean, ds, fidx, targets, ac);
        }

        std::size_t added = 0;
        const Dataset poisoned_ds = merge_poison(ds, result.unique_triples, &added);
        const FilterIndex poisoned_fidx(poisoned_ds);

        auto [poisoned, retrain_report] = train(poisoned_ds, pc.kind, tc, "");
        (void)retrain_report;

        const MetricsReport poisoned_metrics =
            evaluate(poisoned, target_triples, poisoned_fidx, Side::Both);

        AttackRow row;
        row.seed_label = seed_to_label(seed);
        row.attack = result.name;
        row.clean_mrr = clean_metrics.mrr;
        row.clean_hits1 = clean_metrics.hits1;
        row.poisoned_mrr = poisoned_metrics.mrr;
        row.poisoned_hits1 = poisoned_metrics.hits1;
        row.relative_change = (clean_metrics.mrr - poisoned_metrics.mrr) / clean_metrics.mrr;
        row.edits_added = added;
        row.targets = targets.size();
        report.rows.push_back(row);

        for (DecoyRow decoy_row : decoy_report(clean, poisoned, result.decoys, fidx)) {
          decoy_row.seed_label = row.seed_label;
          decoy_row.attack = result.name;
          report.decoy_rows.push_back(decoy_row);
        }
        if (!spec.none && result.decoys.empty()) {
          report.notes.push_back(row.seed_label + "/" + result.name +
                                 ": no decoys chosen, decoy rows omitted");
        }

        RuntimeRow rt;
        rt.seed_label = row.seed_label;
        rt.attack = result.name;
        rt.generation_seconds = result.generation_seconds;
        rt.clustering_seconds = result.clustering_seconds;
        rt.edit_triples = result.unique_triples.size();
        report.runtime_rows.push_back(rt);

        if (writing && !spec.none) {
          write_edits_tsv((fs::path(seed_dir) / ("edits_" + result.name + ".tsv")).string(),
                          result, ds.vocab);
        }
        for (const SkipRecord& skip : result.skips) {
          std::cerr << result.name << " seed " << seed << ": skipped "
                    << side_name(skip.side) << " side of (" << ds.vocab.entity_name(skip.target.s)
                    << ", " << ds.vocab.relation_name(skip.target.r) << ", "
                    << ds.vocab.entity_name(skip.target.o) << "): " << skip.reason << "\n";
        }
      } catch (const std::exception& e) {
        const std::string note = "seed " + seed_to_label(seed) + "/" + spec.label +
                                 " failed: " + e.what();
        std::cerr << "run_pipeline: " << note << "\n";
        report.notes.push_back(note);
      }
    }
  }

  if (seeds.size() > 1) append_mean_rows(report);
  if (writing) {
    write_report_files(pc.out_dir, report);
    std::ofstream manifest((fs::path(pc.out_dir) / "manifest.txt").string());
    manifest << "version=" << kVersion << '\n'
             << "model=" << kind_name(pc.kind) << '\n'
             << "dataset_dir=" << pc.dataset_dir << '\n'
             << "target_cutoff=" << pc.target_cutoff << '\n'
             << "target_rule=" << (pc.either_side ? "either" : "both") << '\n'
             << "clusters_k=" << pc.clusters_k << '\n'
             << "step3=" << (pc.step3 == Step3Mode::LiteralArgmax ? "literal" : "body") << '\n';
    manifest << "seeds=";
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      manifest << (i ? "," : "") << seeds[i];
    }
    manifest << '\n' << "attacks=";
    for (std::size_t i = 0; i < pc.attacks.size(); ++i) {
      manifest << (i ? "," : "") << pc.attacks[i].label;
    }
    manifest << '\n' << "train_config_hash=" << config_hash(pc.train) << '\n';
    manifest << "train_config:\n" << config_canonical(pc.train);
  }
  return report;
}

void write_report_files(const std::string& out_dir, const ExperimentReport& report) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  {
    std::ofstream out((fs::path(out_dir) / "report.tsv").string());
    out << std::setprecision(10);
    out << "seed\tattack\ttargets\tclean_mrr\tclean_hits1\tpoisoned_mrr\tpoisoned_hits1\t"
           "relative_change\tedits_added\n";
    for (const AttackRow& r : report.rows) {
      out << r.seed_label << '\t' << r.attack << '\t' << r.targets << '\t' << r.clean_mrr << '\t'
          << r.clean_hits1 << '\t' << r.poisoned_mrr << '\t' << r.poisoned_hits1 << '\t'
          << r.relative_change << '\t' << r.edits_added << '\n';
    }
  }
  {
    std::ofstream out((fs::path(out_dir) / "decoy_report.tsv").string());
    out << std::setprecision(10);
    out << "seed\tattack\tside\tn\tclean_mrr\tpoisoned_mrr\trelative_change\n";
    for (const DecoyRow& r : report.decoy_rows) {
      out << r.seed_label << '\t' << r.attack << '\t' << side_name(r.side) << '\t' << r.n << '\t'
          << r.clean_mrr << '\t' << r.poisoned_mrr << '\t' << r.relative_change << '\n';
    }
  }
  {
    std::ofstream out((fs::path(out_dir) / "runtime.tsv").string());
    out << std::setprecision(6);
    out << "seed\tattack\tgeneration_seconds\tclustering_seconds\tedit_triples\n";
    for (const RuntimeRow& r : report.runtime_rows) {
      out << r.seed_label << '\t' << r.attack << '\t' << r.generation_seconds << '\t'
          << r.clustering_seconds << '\t' << r.edit_triples << '\n';
    }
  }
  if (!report.notes.empty()) {
    std::ofstream out((fs::path(out_dir) / "notes.txt").string());
    for (const std::string& n : report.notes) out << n << '\n';
  }
}

}  // namespace kgelab
