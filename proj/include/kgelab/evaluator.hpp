#pragma once

#include <string>
#include <vector>

#include "kgelab/filter_index.hpp"
#include "kgelab/model.hpp"
#include "kgelab/types.hpp"

namespace kgelab {

struct RankOutcome {
  Triple triple;
  int subject_rank = 0;
  int object_rank = 0;
};

struct MetricsReport {
  Real mr = 0.0;
  Real mrr = 0.0;
  Real hits1 = 0.0;
  Real hits3 = 0.0;
  Real hits10 = 0.0;
  Side side = Side::Both;
  std::size_t n = 0;  // ranks aggregated (two per triple when side is Both)
};

// Filtered rank of the triple's entity on the queried side: candidates forming
// an existing triple are pushed to -inf (never the true entity itself), and
// rank = 1 + |{candidates scoring strictly greater than the true entity}|.
int rank_triple(const Model& m, const Triple& t, const FilterIndex& fidx, Side side);

RankOutcome rank_both_sides(const Model& m, const Triple& t, const FilterIndex& fidx);

std::vector<RankOutcome> rank_all(const Model& m, const std::vector<Triple>& triples,
                                  const FilterIndex& fidx);

MetricsReport metrics_from_outcomes(const std::vector<RankOutcome>& outcomes, Side side);

// Aggregates over both sides of every triple unless side restricts to one.
MetricsReport evaluate(const Model& m, const std::vector<Triple>& triples, const FilterIndex& fidx,
                       Side side = Side::Both);

struct TargetRecord {
  Triple triple;
  int subject_rank = 0;
  int object_rank = 0;
};

// Test triples the model already ranks well: both sides <= cutoff by default,
// either side when both_sides is false.
std::vector<TargetRecord> select_targets(const Model& m, const Dataset& ds,
                                         const FilterIndex& fidx, int cutoff = 10,
                                         bool both_sides = true);

std::string format_summary(const MetricsReport& r);
void write_metrics_tsv(const std::string& path, const MetricsReport& r);
void write_ranks_tsv(const std::string& path, const std::vector<RankOutcome>& outcomes,
                     const Vocabulary& vocab);

}  // namespace kgelab
