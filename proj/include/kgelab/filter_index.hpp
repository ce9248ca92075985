#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "kgelab/dataset.hpp"
#include "kgelab/types.hpp"

namespace kgelab {

// Known-triple index over train+valid+test, used to filter competing true
// answers out of a ranking and to enumerate existing completions of a query.
// Completion lists are sorted ascending and deduplicated.
class FilterIndex {
 public:
  explicit FilterIndex(const Dataset& ds);

  const std::vector<int>& objects_for(int s, int r) const;
  const std::vector<int>& subjects_for(int r, int o) const;
  bool contains(const Triple& t) const;

 private:
  static std::uint64_t key(int a, int b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint64_t>(static_cast<std::uint32_t>(b));
  }

  std::unordered_map<std::uint64_t, std::vector<int>> sr2o_, ro2s_;
};

}  // namespace kgelab
