#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "support/test_support.hpp"

using namespace kgelab;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const char* name) {
  const fs::path dir = fs::temp_directory_path() / "kgelab_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST_CASE("dataset load assigns ids in first-seen order and filters splits") {
  const fs::path dir = scratch_dir("load");
  write_file(dir / "train.txt", "a\tlikes\tb\nb\tlikes\tc\na\tlikes\tb\nc\tknows\ta\n");
  write_file(dir / "valid.txt", "a\tlikes\tc\nzz\tlikes\ta\n");
  write_file(dir / "test.txt", "b\tknows\tb\na\thates\tb\n");

  LoadStats stats;
  const Dataset ds = load_dataset_dir(dir.string(), &stats);

  CHECK(ds.vocab.n_entities() == 3);
  CHECK(ds.vocab.n_relations() == 2);
  CHECK(ds.vocab.entity_id("a") == 0);
  CHECK(ds.vocab.entity_id("b") == 1);
  CHECK(ds.vocab.entity_id("c") == 2);
  CHECK(ds.vocab.relation_id("likes") == 0);
  CHECK(ds.vocab.relation_id("knows") == 1);

  CHECK(ds.train.size() == 3);  // duplicate dropped
  CHECK(stats.train_duplicates == 1);
  CHECK(ds.valid.size() == 1);  // zz outside the train vocabulary
  CHECK(stats.valid_dropped == 1);
  CHECK(ds.test.size() == 1);  // hates outside the train vocabulary
  CHECK(stats.test_dropped == 1);
  CHECK(ds.train[0] == Triple{0, 0, 1});
  CHECK(ds.test[0] == Triple{1, 1, 1});
}

TEST_CASE("dataset load rejects malformed lines and an empty train split") {
  const fs::path dir = scratch_dir("malformed");
  write_file(dir / "train.txt", "a\tlikes\tb\nbroken line\n");
  write_file(dir / "valid.txt", "");
  write_file(dir / "test.txt", "");
  CHECK_THROWS_WITH_AS(load_dataset_dir(dir.string()),
                       doctest::Contains("train.txt:2"), std::runtime_error);

  write_file(dir / "train.txt", "\n");
  CHECK_THROWS_AS(load_dataset_dir(dir.string()), std::runtime_error);
}

TEST_CASE("dataset round-trips through write_dataset_dir") {
  Rng rng(11);
  const Dataset ds = ts::random_dataset(rng, 12, 3, 40, 6, 6);
  const fs::path dir = scratch_dir("roundtrip");
  write_dataset_dir(dir.string(), ds);
  const Dataset back = load_dataset_dir(dir.string());
  CHECK(back.train == ds.train);
  CHECK(back.valid == ds.valid);
  CHECK(back.test == ds.test);
  CHECK(back.vocab.n_entities() == ds.vocab.n_entities());
  CHECK(back.vocab.entity_name(5) == ds.vocab.entity_name(5));
}

TEST_CASE("merge_poison appends new triples only and keeps order") {
  Rng rng(7);
  const Dataset ds = ts::random_dataset(rng, 10, 2, 30, 0, 5);
  const Triple existing = ds.train[3];
  const TripleSet train_set = ts::to_set(ds.train);
  std::vector<Triple> fresh;
  for (int s = 0; s < 10 && fresh.size() < 2; ++s) {
    for (int o = 0; o < 10 && fresh.size() < 2; ++o) {
      const Triple t{s, 1, o};
      if (!train_set.count(t)) fresh.push_back(t);
    }
  }
  REQUIRE(fresh.size() == 2);
  const Triple fresh1 = fresh[0];
  const Triple fresh2 = fresh[1];

  std::size_t added = 0;
  const Dataset merged = merge_poison(ds, {existing, fresh1, fresh2, fresh1}, &added);
  CHECK(added == 2);
  CHECK(merged.train.size() == ds.train.size() + 2);
  CHECK(merged.train[ds.train.size()] == fresh1);
  CHECK(merged.train[ds.train.size() + 1] == fresh2);
  CHECK(std::vector<Triple>(merged.train.begin(), merged.train.begin() + ds.train.size()) ==
        ds.train);
  CHECK(merged.valid == ds.valid);
  CHECK(merged.test == ds.test);

  CHECK_THROWS_AS(merge_poison(ds, {Triple{10, 0, 0}}), std::runtime_error);
  CHECK_THROWS_AS(merge_poison(ds, {Triple{0, 2, 0}}), std::runtime_error);
}
