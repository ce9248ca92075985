#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "kgelab/types.hpp"

namespace kgelab {

// Bidirectional name<->id maps. Ids are dense and assigned in first-seen order,
// so a reloaded dataset reproduces the same ids.
class Vocabulary {
 public:
  int add_entity(const std::string& name);
  int add_relation(const std::string& name);
  std::optional<int> entity_id(const std::string& name) const;
  std::optional<int> relation_id(const std::string& name) const;
  const std::string& entity_name(int id) const;
  const std::string& relation_name(int id) const;
  int n_entities() const { return static_cast<int>(ent_names_.size()); }
  int n_relations() const { return static_cast<int>(rel_names_.size()); }

 private:
  std::vector<std::string> ent_names_, rel_names_;
  std::unordered_map<std::string, int> ent_ids_, rel_ids_;
};

struct LoadStats {
  std::size_t train_duplicates = 0;
  std::size_t valid_dropped = 0;
  std::size_t test_dropped = 0;
};

struct Dataset {
  Vocabulary vocab;
  std::vector<Triple> train, valid, test;
};

using TripleSet = std::unordered_set<Triple, TripleHash>;

// Files hold one subject<TAB>relation<TAB>object per line. The vocabulary is
// built from the train split alone; valid/test lines naming anything outside it
// are dropped and counted, as are duplicate train lines. A malformed line or an
// empty train split throws with the offending file and line number.
Dataset load_dataset(const std::string& train_path, const std::string& valid_path,
                     const std::string& test_path, LoadStats* stats = nullptr);
Dataset load_dataset_dir(const std::string& dir, LoadStats* stats = nullptr);

void write_split(const std::string& path, const std::vector<Triple>& triples,
                 const Vocabulary& vocab);
// Writes train.txt/valid.txt/test.txt under dir, creating it if needed.
void write_dataset_dir(const std::string& dir, const Dataset& ds);
// Sidecar key=value file for drop/merge counts next to the splits.
void write_summary(const std::string& dir,
                   const std::vector<std::pair<std::string, std::size_t>>& counts);

// New dataset sharing the vocabulary. Train gains the edits that are not
// already present, deduplicated, in first-appearance order after the original
// triples. valid/test are untouched. Out-of-range ids throw.
Dataset merge_poison(const Dataset& ds, const std::vector<Triple>& edits,
                     std::size_t* added = nullptr);

}  // namespace kgelab
