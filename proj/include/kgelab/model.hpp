#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "kgelab/types.hpp"

namespace kgelab {

enum class ModelKind { DistMult, ComplEx, TransE };

// Shared scoring structure: multiplicative kinds score by (generalized) trilinear
// products, the additive kind by translation distance.
enum class Family { Multiplicative, Additive };

inline Family family_of(ModelKind kind) {
  return kind == ModelKind::TransE ? Family::Additive : Family::Multiplicative;
}

inline const char* kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::DistMult: return "distmult";
    case ModelKind::ComplEx: return "complex";
    default: return "transe";
  }
}

std::optional<ModelKind> parse_kind(std::string_view name);

// Dense embedding tables. For ComplEx each row stores the real half in columns
// [0,dim) and the imaginary half in [dim,2*dim), so storage width is 2*dim;
// the other kinds use width dim.
struct Model {
  ModelKind kind = ModelKind::DistMult;
  int dim = 0;
  Real margin = 9.0;  // only read by the additive scorer
  Matrix entities;    // n_entities x storage_cols()
  Matrix relations;   // n_relations x storage_cols()

  int n_entities() const { return static_cast<int>(entities.rows()); }
  int n_relations() const { return static_cast<int>(relations.rows()); }
  int storage_cols() const { return kind == ModelKind::ComplEx ? 2 * dim : dim; }
};

// Uniform init in [-1/sqrt(dim), 1/sqrt(dim)], entity table first, row-major
// order, so a seed pins every weight.
Model init_model(ModelKind kind, int n_entities, int n_relations, int dim, std::uint64_t seed,
                 Real margin = 9.0);

struct CheckpointMeta {
  ModelKind kind = ModelKind::DistMult;
  int dim = 0;
  int n_entities = 0;
  int n_relations = 0;
  Real margin = 9.0;
  std::uint64_t seed = 0;
  std::string train_config_hash;
};

// Checkpoint directory layout: meta.txt (key=value) plus entities.bin and
// relations.bin. Each .bin is the 8-byte magic "KGEMBED1", rows and cols as
// u64 little-endian, then rows*cols float32 little-endian, row-major.
void save_checkpoint(const std::string& dir, const Model& model, std::uint64_t seed,
                     const std::string& train_config_hash);
Model load_checkpoint(const std::string& dir, CheckpointMeta* meta = nullptr);

}  // namespace kgelab
