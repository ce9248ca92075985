#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "kgelab/dataset.hpp"
#include "kgelab/model.hpp"
#include "kgelab/types.hpp"

namespace kgelab {

enum class OptimizerKind { Adam, Sgd };

struct TrainConfig {
  int dim = 32;
  int epochs = 200;
  int batch_size = 128;
  Real lr = 1e-3;
  Real label_smoothing = 0.0;
  Real l2 = 0.0;             // coefficient on the mean squared embedding norm
  Real input_dropout = 0.0;  // draws no random numbers when 0
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::Adam;
  Real adam_beta1 = 0.9;
  Real adam_beta2 = 0.999;
  Real adam_eps = 1e-8;
  Real margin = 9.0;
};

// Canonical key=value rendering, one line per field in a fixed order. Two
// configs hash equal iff every hyperparameter matches.
std::string config_canonical(const TrainConfig& cfg);
std::string config_hash(const TrainConfig& cfg);

// One 1-K training example: a (key entity, relation) query whose label vector
// is multi-hot over every completion entity seen in train.
struct KeyGroup {
  int key_entity = 0;
  int key_relation = 0;
  std::vector<int> completions;  // sorted ascending
};

// Train triples grouped both ways. Queries (s,r,?) live in by_subject_relation
// (completions are objects), queries (?,r,o) in by_object_relation (completions
// are subjects). Groups are sorted by (entity, relation) key.
struct GroupedTrain {
  std::vector<KeyGroup> by_subject_relation;
  std::vector<KeyGroup> by_object_relation;
};

GroupedTrain group_train_triples(const Dataset& ds);

// Smoothed multi-hot target: ls/n everywhere, 1-ls+ls/n on completions.
Vector label_vector(const KeyGroup& g, int n_entities, Real label_smoothing);

// Elementwise binary cross-entropy on logits, in the overflow-stable form
// max(x,0) - x*y + log1p(exp(-|x|)), and its derivative sigmoid(x) - y.
Real bce_with_logits(Real logit, Real label);
Real bce_grad(Real logit, Real label);

struct Gradients {
  Matrix d_entities, d_relations;
};

// Mean BCE over the groups' full label matrices plus the optional L2 term,
// with dense gradients for both tables. side selects which slot the key
// entity occupies: Subject scores (key, r, e) over all e, Object scores
// (e, r, key). Optional dropout masks (same shape as the gathered key rows)
// are applied to the key-side embeddings before scoring.
Real batch_loss_and_grads(const Model& m, Side side, const std::vector<const KeyGroup*>& groups,
                          const TrainConfig& cfg, Gradients& out,
                          const Matrix* entity_mask = nullptr,
                          const Matrix* relation_mask = nullptr);

struct TrainReport {
  std::vector<Real> epoch_loss;  // mean batch loss per epoch
  double seconds = 0.0;
  std::string checkpoint_path;
};

// Full training loop: fresh model from cfg.seed, then cfg.epochs passes that
// alternate one subject-keyed and one object-keyed batch. Throws on non-finite
// loss. If checkpoint_dir is non-empty the final model is saved there.
std::pair<Model, TrainReport> train(const Dataset& ds, ModelKind kind, const TrainConfig& cfg,
                                    const std::string& checkpoint_dir = "");

}  // namespace kgelab
