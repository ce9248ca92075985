#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kgelab/attack.hpp"
#include "kgelab/evaluator.hpp"
#include "kgelab/trainer.hpp"

namespace kgelab {

// One attack slot in a pipeline run: an inference-pattern attack ("sym:cos",
// "com:truth"), a random baseline ("random_n"), or the zero-edit control
// ("none") that retrains on untouched data.
struct AttackSpec {
  bool none = false;
  bool is_baseline = false;
  AttackPattern pattern = AttackPattern::Sym;
  DecoyHeuristic heuristic = DecoyHeuristic::Truth;
  BaselineKind baseline = BaselineKind::RandomN;
  std::string label;

  static std::optional<AttackSpec> parse(std::string_view token);
};

struct PipelineConfig {
  std::string dataset_dir;
  ModelKind kind = ModelKind::DistMult;
  TrainConfig train;
  std::vector<AttackSpec> attacks;
  std::string out_dir;                 // empty: nothing written, report returned only
  std::vector<std::uint64_t> seeds;    // empty: {train.seed}
  int target_cutoff = 10;
  bool either_side = false;            // target selection rule
  int clusters_k = 100;
  Step3Mode step3 = Step3Mode::LiteralArgmax;
  std::string reuse_clean_dir;         // optional clean checkpoint (single seed only)
  bool allow_config_mismatch = false;
};

struct AttackRow {
  std::string seed_label;  // seed value, or "mean"
  std::string attack;
  Real clean_mrr = 0.0;
  Real clean_hits1 = 0.0;
  Real poisoned_mrr = 0.0;
  Real poisoned_hits1 = 0.0;
  Real relative_change = 0.0;  // (clean - poisoned) / clean
  std::size_t edits_added = 0;
  std::size_t targets = 0;
};

struct DecoyRow {
  std::string seed_label;
  std::string attack;
  Side side = Side::Object;
  std::size_t n = 0;
  Real clean_mrr = 0.0;
  Real poisoned_mrr = 0.0;
  Real relative_change = 0.0;  // (poisoned - clean) / clean
};

struct RuntimeRow {
  std::string seed_label;
  std::string attack;
  double generation_seconds = 0.0;
  double clustering_seconds = 0.0;
  std::size_t edit_triples = 0;
};

struct ExperimentReport {
  std::vector<AttackRow> rows;
  std::vector<DecoyRow> decoy_rows;
  std::vector<RuntimeRow> runtime_rows;
  std::vector<std::string> notes;
};

// Per-side MRR of the chosen decoy triples under the clean and poisoned
// models, ranked on the side the decoy replaces, with the relative increase.
// A side with no decoys is omitted. seed/attack labels are left empty.
std::vector<DecoyRow> decoy_report(const Model& clean, const Model& poisoned,
                                   const std::vector<DecoyChoice>& decoys,
                                   const FilterIndex& fidx);

// Full experiment loop: load, train clean, select targets, then per attack
// generate edits, merge, retrain with the identical config, and evaluate the
// targets and decoys under the poisoned model. A failing attack aborts its own
// rows with a note; the others proceed. Multiple seeds append mean rows.
ExperimentReport run_pipeline(const PipelineConfig& pc);

void write_report_files(const std::string& out_dir, const ExperimentReport& report);

}  // namespace kgelab
