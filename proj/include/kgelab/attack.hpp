#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kgelab/dataset.hpp"
#include "kgelab/evaluator.hpp"
#include "kgelab/filter_index.hpp"
#include "kgelab/model.hpp"
#include "kgelab/types.hpp"

namespace kgelab {

enum class AttackPattern { Sym, Inv, Com };
enum class DecoyHeuristic { Truth, Rank, Cos };
enum class Step3Mode { LiteralArgmax, BodyArgmax };
enum class BaselineKind { RandomN, RandomG1, RandomG2 };

const char* pattern_name(AttackPattern p);
const char* heuristic_name(DecoyHeuristic h);
const char* baseline_name(BaselineKind b);
std::optional<AttackPattern> parse_pattern(std::string_view s);
std::optional<DecoyHeuristic> parse_heuristic(std::string_view s);
std::optional<BaselineKind> parse_baseline(std::string_view s);

struct AttackConfig {
  AttackPattern pattern = AttackPattern::Sym;
  DecoyHeuristic heuristic = DecoyHeuristic::Truth;
  int clusters_k = 100;  // composition + soft-truth only; clamped to n_entities
  std::uint64_t seed = 0;
  Step3Mode step3 = Step3Mode::LiteralArgmax;
  bool exclude_target_relation = false;  // drop pairs containing r from the pair search
  int kmeans_max_iters = 100;
};

// One chosen decoy: the synthetic negative whose rank the attack will boost.
struct DecoyChoice {
  Triple target;
  Side side = Side::Object;
  int decoy_entity = -1;
  Real heuristic_score = 0.0;

  Triple decoy_triple() const {
    return side == Side::Object ? Triple{target.s, target.r, decoy_entity}
                                : Triple{decoy_entity, target.r, target.o};
  }
};

// Poison triples for one target side: one triple for sym/inv, the two body
// atoms for com. Every triple shares an entity with the decoy construction.
struct AdversarialEdit {
  std::vector<Triple> triples;
  Triple target;
  Side side = Side::Object;
};

struct SkipRecord {
  Triple target;
  Side side = Side::Object;
  std::string reason;
};

struct AttackResult {
  std::string name;       // e.g. "Sym_truth", "Random_g1"
  std::string pattern;    // "sym"/"inv"/"com" or the baseline variant
  std::string heuristic;  // "truth"/"rank"/"cos" or "-" for baselines
  std::vector<AdversarialEdit> edits;
  std::vector<Triple> unique_triples;  // deduplicated, first-appearance order
  std::vector<DecoyChoice> decoys;
  std::vector<SkipRecord> skips;
  std::uint64_t max_side_score_evals = 0;  // worst per-target-side scoring cost
  double generation_seconds = 0.0;         // excludes cluster precomputation
  double clustering_seconds = 0.0;
};

// Relation whose embedding best inverts r: among r_i != r, the multiplicative
// family minimizes |<e_ri, e_r> - 1| (ComplEx: real part of the unconjugated
// complex dot product), the additive family minimizes ||e_ri + e_r||.
// Ties break toward the lowest relation id.
int find_inverse_relation(const Model& m, int r);

// Composition of two relation embeddings: Hadamard product (complex Hadamard
// for ComplEx) in the multiplicative family, sum in the additive family.
Vector compose_relation_embeddings(const Model& m, int r1, int r2);

// Ordered pair (r1, r2) minimizing the Euclidean distance between the composed
// embedding and e_r, over all pairs (self-pairs and pairs containing r
// allowed unless exclude_r). Ties break lexicographically.
std::pair<int, int> find_composition_pair(const Model& m, int r, bool exclude_r = false);

// Entities forming a valid synthetic negative on the given side: the decoy
// triple must be absent from every split and the entity must differ from the
// replaced one. Sorted ascending. Empty means the side is unattackable.
std::vector<int> decoy_candidates(const Triple& target, Side side, const FilterIndex& fidx,
                                  int n_entities);

// Precomputed per-target-relation inputs for the soft-truth search.
struct PatternContext {
  AttackPattern pattern = AttackPattern::Sym;
  int body_relation = -1;             // r for sym, the inverse for inv
  std::pair<int, int> pair{-1, -1};   // com
  const Matrix* centroids = nullptr;  // com: cluster representatives of o''
};

// extra_exclude removes one more entity from the candidate pool; the sym
// pattern passes the target's other-side entity so the emitted edit cannot
// coincide with the decoy triple.
std::optional<DecoyChoice> select_decoy_truth(const Model& m, const Triple& target, Side side,
                                              const FilterIndex& fidx, const PatternContext& ctx,
                                              int extra_exclude = -1);

// Highest-scored candidate at or below the target's own score on the queried
// side, i.e. the negative occupying the next rank position under the
// strictly-greater rule. No such candidate: returns nothing (skip).
std::optional<DecoyChoice> select_decoy_rank(const Model& m, const Triple& target, Side side,
                                             const FilterIndex& fidx, int extra_exclude = -1);

// Candidate maximizing cosine distance from the replaced entity, on stacked
// real vectors. A zero-norm embedding scores distance 1 with a logged warning.
std::optional<DecoyChoice> select_decoy_cos(const Model& m, const Triple& target, Side side,
                                            const FilterIndex& fidx, int extra_exclude = -1);

// Step 3 of the composition attack: the intermediate entity o'' placed between
// the target subject and the decoy. Literal mode maximizes the full grounding
// score, body mode maximizes the body conjunction. o'' is excluded from
// {s, o, decoy} and from entities whose body triple already exists in train.
std::optional<int> select_adversarial_entity_com(const Model& m, const Triple& target,
                                                 int decoy_entity, Side side,
                                                 std::pair<int, int> pair, Step3Mode mode,
                                                 const TripleSet& train_set);

AttackResult generate_attack(const Model& m, const Dataset& ds, const FilterIndex& fidx,
                             const std::vector<TargetRecord>& targets, const AttackConfig& cfg);

AttackResult generate_random_baseline(const Dataset& ds, const std::vector<TargetRecord>& targets,
                                      BaselineKind variant, std::uint64_t seed);

void write_edits_tsv(const std::string& path, const AttackResult& result, const Vocabulary& vocab);
std::vector<Triple> read_edits_tsv(const std::string& path, const Vocabulary& vocab);

}  // namespace kgelab
