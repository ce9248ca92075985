#include "kgelab/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace kgelab {

int Vocabulary::add_entity(const std::string& name) {
  auto it = ent_ids_.find(name);
  if (it != ent_ids_.end()) return it->second;
  int id = static_cast<int>(ent_names_.size());
  ent_names_.push_back(name);
  ent_ids_.emplace(name, id);
  return id;
}

int Vocabulary::add_relation(const std::string& name) {
  auto it = rel_ids_.find(name);
  if (it != rel_ids_.end()) return it->second;
  int id = static_cast<int>(rel_names_.size());
  rel_names_.push_back(name);
  rel_ids_.emplace(name, id);
  return id;
}

std::optional<int> Vocabulary::entity_id(const std::string& name) const {
  auto it = ent_ids_.find(name);
  if (it == ent_ids_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> Vocabulary::relation_id(const std::string& name) const {
  auto it = rel_ids_.find(name);
  if (it == rel_ids_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::entity_name(int id) const {
  return ent_names_.at(static_cast<std::size_t>(id));
}

const std::string& Vocabulary::relation_name(int id) const {
  return rel_names_.at(static_cast<std::size_t>(id));
}

namespace {

struct RawTriple {
  std::string s, r, o;
};

// Splits a line on single tabs. Exactly three non-empty fields, else error.
RawTriple parse_line(const std::string& line, const std::string& path, std::size_t lineno) {
  RawTriple t;
  std::size_t first = line.find('\t');
  std::size_t second = first == std::string::npos ? std::string::npos : line.find('\t', first + 1);
  if (first == std::string::npos || second == std::string::npos ||
      line.find('\t', second + 1) != std::string::npos) {
    throw std::runtime_error(path + ":" + std::to_string(lineno) +
                             ": expected subject<TAB>relation<TAB>object");
  }
  t.s = line.substr(0, first);
  t.r = line.substr(first + 1, second - first - 1);
  t.o = line.substr(second + 1);
  if (!t.o.empty() && t.o.back() == '\r') t.o.pop_back();
  if (t.s.empty() || t.r.empty() || t.o.empty()) {
    throw std::runtime_error(path + ":" + std::to_string(lineno) + ": empty field");
  }
  return t;
}

std::vector<RawTriple> read_raw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<RawTriple> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    out.push_back(parse_line(line, path, lineno));
  }
  return out;
}

}  // namespace

Dataset load_dataset(const std::string& train_path, const std::string& valid_path,
                     const std::string& test_path, LoadStats* stats) {
  LoadStats local;
  Dataset ds;

  TripleSet seen;
  for (const RawTriple& raw : read_raw(train_path)) {
    Triple t{ds.vocab.add_entity(raw.s), ds.vocab.add_relation(raw.r), ds.vocab.add_entity(raw.o)};
    if (!seen.insert(t).second) {
      ++local.train_duplicates;
      continue;
    }
    ds.train.push_back(t);
  }
  if (ds.train.empty()) throw std::runtime_error(train_path + ": train split is empty");

  auto load_eval = [&](const std::string& path, std::vector<Triple>& out, std::size_t& dropped) {
    for (const RawTriple& raw : read_raw(path)) {
      auto s = ds.vocab.entity_id(raw.s);
      auto r = ds.vocab.relation_id(raw.r);
      auto o = ds.vocab.entity_id(raw.o);
      if (!s || !r || !o) {
        ++dropped;
        continue;
      }
      out.push_back(Triple{*s, *r, *o});
    }
  };
  load_eval(valid_path, ds.valid, local.valid_dropped);
  load_eval(test_path, ds.test, local.test_dropped);

  if (stats) *stats = local;
  return ds;
}

Dataset load_dataset_dir(const std::string& dir, LoadStats* stats) {
  namespace fs = std::filesystem;
  fs::path base(dir);
  return load_dataset((base / "train.txt").string(), (base / "valid.txt").string(),
                      (base / "test.txt").string(), stats);
}

void write_split(const std::string& path, const std::vector<Triple>& triples,
                 const Vocabulary& vocab) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const Triple& t : triples) {
    out << vocab.entity_name(t.s) << '\t' << vocab.relation_name(t.r) << '\t'
        << vocab.entity_name(t.o) << '\n';
  }
}

void write_dataset_dir(const std::string& dir, const Dataset& ds) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  fs::path base(dir);
  write_split((base / "train.txt").string(), ds.train, ds.vocab);
  write_split((base / "valid.txt").string(), ds.valid, ds.vocab);
  write_split((base / "test.txt").string(), ds.test, ds.vocab);
}

void write_summary(const std::string& dir,
                   const std::vector<std::pair<std::string, std::size_t>>& counts) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::ofstream out((fs::path(dir) / "summary.txt").string());
  if (!out) throw std::runtime_error("cannot write summary under " + dir);
  for (const auto& [key, value] : counts) out << key << '=' << value << '\n';
}

Dataset merge_poison(const Dataset& ds, const std::vector<Triple>& edits, std::size_t* added) {
  Dataset out;
  out.vocab = ds.vocab;
  out.train = ds.train;
  out.valid = ds.valid;
  out.test = ds.test;

  TripleSet present(ds.train.begin(), ds.train.end());
  std::size_t n_added = 0;
  for (const Triple& t : edits) {
    if (t.s < 0 || t.s >= ds.vocab.n_entities() || t.o < 0 || t.o >= ds.vocab.n_entities() ||
        t.r < 0 || t.r >= ds.vocab.n_relations()) {
      throw std::runtime_error("merge_poison: edit references an id outside the vocabulary");
    }
    if (!present.insert(t).second) continue;
    out.train.push_back(t);
    ++n_added;
  }
  if (added) *added = n_added;
  return out;
}

}  // namespace kgelab
