#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "kgelab/pipeline.hpp"
#include "kgelab/rng.hpp"
#include "support/test_support.hpp"

using namespace kgelab;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "kgelab_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// A small KG on disk, the shape run_pipeline expects.
std::string disk_dataset(const std::string& name, Rng& rng, int n_ent = 20, int n_rel = 2) {
  const fs::path dir = scratch_dir(name);
  const Dataset ds = ts::random_dataset(rng, n_ent, n_rel, 3 * n_ent, 8, 10);
  write_dataset_dir(dir.string(), ds);
  return dir.string();
}

TrainConfig quick_train(std::uint64_t seed) {
  TrainConfig tc;
  tc.dim = 8;
  tc.epochs = 6;
  tc.batch_size = 16;
  tc.seed = seed;
  return tc;
}

}  // namespace

TEST_CASE("AttackSpec::parse reads attack tokens") {
  const auto sym = AttackSpec::parse("sym:cos");
  REQUIRE(sym.has_value());
  CHECK(!sym->none);
  CHECK(!sym->is_baseline);
  CHECK(sym->pattern == AttackPattern::Sym);
  CHECK(sym->heuristic == DecoyHeuristic::Cos);
  CHECK(sym->label == "Sym_cos");

  const auto com = AttackSpec::parse("com:truth");
  REQUIRE(com.has_value());
  CHECK(com->pattern == AttackPattern::Com);
  CHECK(com->label == "Com_truth");

  const auto base = AttackSpec::parse("random_g1");
  REQUIRE(base.has_value());
  CHECK(base->is_baseline);
  CHECK(base->baseline == BaselineKind::RandomG1);
  CHECK(base->label == "Random_g1");

  const auto none = AttackSpec::parse("none");
  REQUIRE(none.has_value());
  CHECK(none->none);
  CHECK(none->label == "none");

  CHECK(!AttackSpec::parse("sym"));
  CHECK(!AttackSpec::parse("sym:"));
  CHECK(!AttackSpec::parse("sym:bogus"));
  CHECK(!AttackSpec::parse("bogus:cos"));
  CHECK(!AttackSpec::parse(""));
  CHECK(!AttackSpec::parse("Sym:cos"));
}

TEST_CASE("a zero-edit attack retrains to the identical metrics") {
  Rng rng(81);
  PipelineConfig pc;
  pc.dataset_dir = disk_dataset("pipe_none", rng);
  pc.train = quick_train(5);
  pc.target_cutoff = 20;  // every test triple qualifies
  pc.attacks = {*AttackSpec::parse("none")};

  const ExperimentReport report = run_pipeline(pc);
  REQUIRE(report.rows.size() == 1);
  const AttackRow& row = report.rows[0];
  CHECK(row.attack == "none");
  CHECK(row.seed_label == "5");
  CHECK(row.targets == 10);
  CHECK(row.edits_added == 0);
  CHECK(row.clean_mrr == row.poisoned_mrr);
  CHECK(row.clean_hits1 == row.poisoned_hits1);
  CHECK(row.relative_change == 0.0);
  CHECK(row.clean_mrr > 0.0);
  CHECK(report.decoy_rows.empty());
  REQUIRE(report.runtime_rows.size() == 1);
  CHECK(report.runtime_rows[0].edit_triples == 0);
  CHECK(report.notes.empty());
}

TEST_CASE("pipeline runs reproduce and mean rows average the seeds") {
  Rng rng(82);
  PipelineConfig pc;
  pc.dataset_dir = disk_dataset("pipe_repro", rng);
  pc.train = quick_train(0);
  pc.seeds = {1, 2};
  pc.target_cutoff = 20;
  pc.attacks = {*AttackSpec::parse("sym:cos"), *AttackSpec::parse("random_n")};
  const fs::path out = scratch_dir("pipe_repro_out");
  pc.out_dir = out.string();

  const ExperimentReport a = run_pipeline(pc);
  // 2 attacks x 2 seeds, plus one mean row per attack.
  REQUIRE(a.rows.size() == 6);
  CHECK(a.rows[4].seed_label == "mean");
  CHECK(a.rows[5].seed_label == "mean");
  for (const AttackRow& r : a.rows) {
    if (r.seed_label == "mean") continue;
    CHECK((r.attack == "Sym_cos" || r.attack == "Random_n"));
    CHECK(r.edits_added > 0);
    CHECK(r.targets == 10);
  }
  for (const AttackRow& mean : {a.rows[4], a.rows[5]}) {
    Real mrr_sum = 0.0;
    std::size_t n = 0;
    for (const AttackRow& r : a.rows) {
      if (r.attack == mean.attack && r.seed_label != "mean") {
        mrr_sum += r.poisoned_mrr;
        ++n;
      }
    }
    REQUIRE(n == 2);
    CHECK(mean.poisoned_mrr == doctest::Approx(mrr_sum / 2.0));
  }

  // Decoy rows exist for the pattern attack, labeled by seed and attack.
  bool saw_sym_decoys = false;
  for (const DecoyRow& r : a.decoy_rows) {
    if (r.attack == "Sym_cos" && r.seed_label != "mean") {
      saw_sym_decoys = true;
      CHECK(r.n > 0);
    }
  }
  CHECK(saw_sym_decoys);

  CHECK(fs::exists(out / "report.tsv"));
  CHECK(fs::exists(out / "decoy_report.tsv"));
  CHECK(fs::exists(out / "runtime.tsv"));
  CHECK(fs::exists(out / "manifest.txt"));
  CHECK(fs::exists(out / "seed_1" / "clean" / "meta.txt"));
  CHECK(fs::exists(out / "seed_1" / "targets.tsv"));
  CHECK(fs::exists(out / "seed_1" / "edits_Sym_cos.tsv"));
  CHECK(fs::exists(out / "seed_2" / "edits_Random_n.tsv"));

  pc.out_dir.clear();
  const ExperimentReport b = run_pipeline(pc);
  REQUIRE(b.rows.size() == a.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].seed_label == b.rows[i].seed_label);
    CHECK(a.rows[i].attack == b.rows[i].attack);
    CHECK(a.rows[i].clean_mrr == b.rows[i].clean_mrr);
    CHECK(a.rows[i].poisoned_mrr == b.rows[i].poisoned_mrr);
    CHECK(a.rows[i].relative_change == b.rows[i].relative_change);
    CHECK(a.rows[i].edits_added == b.rows[i].edits_added);
  }
  REQUIRE(b.decoy_rows.size() == a.decoy_rows.size());
  for (std::size_t i = 0; i < a.decoy_rows.size(); ++i) {
    CHECK(a.decoy_rows[i].clean_mrr == b.decoy_rows[i].clean_mrr);
    CHECK(a.decoy_rows[i].poisoned_mrr == b.decoy_rows[i].poisoned_mrr);
    CHECK(a.decoy_rows[i].n == b.decoy_rows[i].n);
  }
}

TEST_CASE("a reused clean checkpoint is guarded by the config hash") {
  Rng rng(83);
  const std::string data = disk_dataset("pipe_reuse", rng);

  PipelineConfig first;
  first.dataset_dir = data;
  first.train = quick_train(7);
  first.target_cutoff = 20;
  first.attacks = {*AttackSpec::parse("none")};
  const fs::path out = scratch_dir("pipe_reuse_out");
  first.out_dir = out.string();
  run_pipeline(first);
  const std::string clean_dir = (out / "seed_7" / "clean").string();
  REQUIRE(fs::exists(clean_dir));

  PipelineConfig reuse = first;
  reuse.out_dir.clear();
  reuse.seeds = {7};
  reuse.reuse_clean_dir = clean_dir;
  const ExperimentReport ok = run_pipeline(reuse);
  REQUIRE(ok.rows.size() == 1);
  CHECK(ok.notes.empty());
  CHECK(ok.rows[0].clean_mrr > 0.0);

  PipelineConfig drifted = reuse;
  drifted.train.lr = 5e-3;
  CHECK_THROWS_WITH_AS(run_pipeline(drifted), doctest::Contains("allow-config-mismatch"),
                       std::runtime_error);

  drifted.allow_config_mismatch = true;
  const ExperimentReport forced = run_pipeline(drifted);
  REQUIRE(!forced.notes.empty());
  CHECK(forced.notes[0].find("config mismatch accepted") != std::string::npos);

  PipelineConfig multi = reuse;
  multi.seeds = {7, 8};
  CHECK_THROWS_AS(run_pipeline(multi), std::invalid_argument);

  PipelineConfig unarmed = first;
  unarmed.attacks.clear();
  CHECK_THROWS_AS(run_pipeline(unarmed), std::invalid_argument);
}

TEST_CASE("decoy_report ranks decoys per side and omits empty sides") {
  Rng rng(84);
  const Dataset ds = ts::random_dataset(rng, 15, 2, 45, 5, 6);
  const FilterIndex fidx(ds);
  const Model m = ts::random_model(rng, ModelKind::DistMult, 15, 2, 4);

  auto decoy_for = [&](const Triple& t, Side side) {
    const auto cands = decoy_candidates(t, side, fidx, 15);
    REQUIRE(!cands.empty());
    return DecoyChoice{t, side, cands.front(), 0.0};
  };
  std::vector<DecoyChoice> decoys;
  decoys.push_back(decoy_for(ds.test[0], Side::Object));
  decoys.push_back(decoy_for(ds.test[1], Side::Object));

  const auto rows = decoy_report(m, m, decoys, fidx);
  REQUIRE(rows.size() == 1);  // no subject-side decoys, so no subject row
  CHECK(rows[0].side == Side::Object);
  CHECK(rows[0].n == 2);
  CHECK(rows[0].clean_mrr == rows[0].poisoned_mrr);
  CHECK(rows[0].relative_change == 0.0);

  // MRR of the decoy triples on their replaced side, by direct ranking.
  Real expect = 0.0;
  for (const DecoyChoice& d : decoys) {
    expect += 1.0 / rank_triple(m, d.decoy_triple(), fidx, Side::Object);
  }
  expect /= 2.0;
  CHECK(rows[0].clean_mrr == doctest::Approx(expect));

  decoys.push_back(decoy_for(ds.test[2], Side::Subject));
  const auto both = decoy_report(m, m, decoys, fidx);
  REQUIRE(both.size() == 2);
  CHECK(both[0].side != both[1].side);
}
