#include "kgelab/filter_index.hpp"

#include <algorithm>

namespace kgelab {

namespace {
const std::vector<int> kEmpty;
}

FilterIndex::FilterIndex(const Dataset& ds) {
  auto add = [&](const std::vector<Triple>& split) {
    for (const Triple& t : split) {
      sr2o_[key(t.s, t.r)].push_back(t.o);
      ro2s_[key(t.r, t.o)].push_back(t.s);
    }
  };
  add(ds.train);
  add(ds.valid);
  add(ds.test);
  auto finish = [](std::unordered_map<std::uint64_t, std::vector<int>>& m) {
    for (auto& [k, v] : m) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    }
  };
  finish(sr2o_);
  finish(ro2s_);
}

const std::vector<int>& FilterIndex::objects_for(int s, int r) const {
  auto it = sr2o_.find(key(s, r));
  return it == sr2o_.end() ? kEmpty : it->second;
}

const std::vector<int>& FilterIndex::subjects_for(int r, int o) const {
  auto it = ro2s_.find(key(r, o));
  return it == ro2s_.end() ? kEmpty : it->second;
}

bool FilterIndex::contains(const Triple& t) const {
  const std::vector<int>& objs = objects_for(t.s, t.r);
  return std::binary_search(objs.begin(), objs.end(), t.o);
}

}  // namespace kgelab
