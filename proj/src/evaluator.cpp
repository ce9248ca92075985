#include "kgelab/evaluator.hpp"

#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "kgelab/scoring.hpp"

namespace kgelab {

int rank_triple(const Model& m, const Triple& t, const FilterIndex& fidx, Side side) {
  if (side == Side::Both) throw std::invalid_argument("rank_triple: side must be one slot");
  const bool object_side = side == Side::Object;
  Vector scores = object_side ? score_all_objects(m, t.s, t.r) : score_all_subjects(m, t.r, t.o);
  const int true_entity = object_side ? t.o : t.s;
  const std::vector<int>& known =
      object_side ? fidx.objects_for(t.s, t.r) : fidx.subjects_for(t.r, t.o);
  for (int e : known) {
    if (e != true_entity) scores[e] = -std::numeric_limits<Real>::infinity();
  }
  const Real true_score = scores[true_entity];
  int rank = 1;
  for (Eigen::Index e = 0; e < scores.size(); ++e) {
    if (scores[e] > true_score) ++rank;
  }
  return rank;
}

RankOutcome rank_both_sides(const Model& m, const Triple& t, const FilterIndex& fidx) {
  return RankOutcome{t, rank_triple(m, t, fidx, Side::Subject),
                     rank_triple(m, t, fidx, Side::Object)};
}

std::vector<RankOutcome> rank_all(const Model& m, const std::vector<Triple>& triples,
                                  const FilterIndex& fidx) {
  std::vector<RankOutcome> out;
  out.reserve(triples.size());
  for (const Triple& t : triples) out.push_back(rank_both_sides(m, t, fidx));
  return out;
}

MetricsReport metrics_from_outcomes(const std::vector<RankOutcome>& outcomes, Side side) {
  if (outcomes.empty()) throw std::invalid_argument("metrics: no ranks to aggregate");
  MetricsReport rep;
  rep.side = side;
  Real sum_rank = 0.0, sum_rr = 0.0;
  std::size_t h1 = 0, h3 = 0, h10 = 0, n = 0;
  auto tally = [&](int rank) {
    sum_rank += static_cast<Real>(rank);
    sum_rr += 1.0 / static_cast<Real>(rank);
    if (rank <= 1) ++h1;
    if (rank <= 3) ++h3;
    if (rank <= 10) ++h10;
    ++n;
  };
  for (const RankOutcome& oc : outcomes) {
    if (side != Side::Object) tally(oc.subject_rank);
    if (side != Side::Subject) tally(oc.object_rank);
  }
  rep.n = n;
  rep.mr = sum_rank / static_cast<Real>(n);
  rep.mrr = sum_rr / static_cast<Real>(n);
  rep.hits1 = static_cast<Real>(h1) / static_cast<Real>(n);
  rep.hits3 = static_cast<Real>(h3) / static_cast<Real>(n);
  rep.hits10 = static_cast<Real>(h10) / static_cast<Real>(n);
  return rep;
}

MetricsReport evaluate(const Model& m, const std::vector<Triple>& triples, const FilterIndex& fidx,
                       Side side) {
  if (triples.empty()) throw std::invalid_argument("evaluate: empty triple list");
  return metrics_from_outcomes(rank_all(m, triples, fidx), side);
}

std::vector<TargetRecord> select_targets(const Model& m, const Dataset& ds,
                                         const FilterIndex& fidx, int cutoff, bool both_sides) {
  std::vector<TargetRecord> out;
  for (const Triple& t : ds.test) {
    const RankOutcome oc = rank_both_sides(m, t, fidx);
    const bool keep = both_sides ? (oc.subject_rank <= cutoff && oc.object_rank <= cutoff)
                                 : (oc.subject_rank <= cutoff || oc.object_rank <= cutoff);
    if (keep) out.push_back(TargetRecord{t, oc.subject_rank, oc.object_rank});
  }
  return out;
}

std::string format_summary(const MetricsReport& r) {
  std::ostringstream os;
  os << "side=" << side_name(r.side) << " n=" << r.n << " mr=" << r.mr << " mrr=" << r.mrr
     << " hits@1=" << r.hits1 << " hits@3=" << r.hits3 << " hits@10=" << r.hits10;
  return os.str();
}

void write_metrics_tsv(const std::string& path, const MetricsReport& r) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "metric\tside\tvalue\n";
  const char* side = side_name(r.side);
  out << "mr\t" << side << '\t' << r.mr << '\n';
  out << "mrr\t" << side << '\t' << r.mrr << '\n';
  out << "hits@1\t" << side << '\t' << r.hits1 << '\n';
  out << "hits@3\t" << side << '\t' << r.hits3 << '\n';
  out << "hits@10\t" << side << '\t' << r.hits10 << '\n';
  out << "n\t" << side << '\t' << r.n << '\n';
}

void write_ranks_tsv(const std::string& path, const std::vector<RankOutcome>& outcomes,
                     const Vocabulary& vocab) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "subject\trelation\tobject\tsubject_rank\tobject_rank\n";
  for (const RankOutcome& oc : outcomes) {
    out << vocab.entity_name(oc.triple.s) << '\t' << vocab.relation_name(oc.triple.r) << '\t'
        << vocab.entity_name(oc.triple.o) << '\t' << oc.subject_rank << '\t' << oc.object_rank
        << '\n';
  }
}

}  // namespace kgelab
