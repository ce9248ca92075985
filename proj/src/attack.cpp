#include "kgelab/attack.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "kgelab/kmeans.hpp"
#include "kgelab/rng.hpp"
#include "kgelab/scoring.hpp"
#include "kgelab/softlogic.hpp"

namespace kgelab {

const char* pattern_name(AttackPattern p) {
  switch (p) {
    case AttackPattern::Sym: return "sym";
    case AttackPattern::Inv: return "inv";
    default: return "com";
  }
}

const char* heuristic_name(DecoyHeuristic h) {
  switch (h) {
    case DecoyHeuristic::Truth: return "truth";
    case DecoyHeuristic::Rank: return "rank";
    default: return "cos";
  }
}

const char* baseline_name(BaselineKind b) {
  switch (b) {
    case BaselineKind::RandomN: return "random_n";
    case BaselineKind::RandomG1: return "random_g1";
    default: return "random_g2";
  }
}

std::optional<AttackPattern> parse_pattern(std::string_view s) {
  if (s == "sym") return AttackPattern::Sym;
  if (s == "inv") return AttackPattern::Inv;
  if (s == "com") return AttackPattern::Com;
  return std::nullopt;
}

std::optional<DecoyHeuristic> parse_heuristic(std::string_view s) {
  if (s == "truth") return DecoyHeuristic::Truth;
  if (s == "rank") return DecoyHeuristic::Rank;
  if (s == "cos") return DecoyHeuristic::Cos;
  return std::nullopt;
}

std::optional<BaselineKind> parse_baseline(std::string_view s) {
  if (s == "random_n") return BaselineKind::RandomN;
  if (s == "random_g1") return BaselineKind::RandomG1;
  if (s == "random_g2") return BaselineKind::RandomG2;
  return std::nullopt;
}

int find_inverse_relation(const Model& m, int r) {
  if (m.n_relations() < 2) {
    throw std::invalid_argument("find_inverse_relation: need at least two relations");
  }
  const bool additive = family_of(m.kind) == Family::Additive;
  int best = -1;
  Real best_crit = std::numeric_limits<Real>::infinity();
  for (int ri = 0; ri < m.n_relations(); ++ri) {
    if (ri == r) continue;
    Real crit;
    if (additive) {
      crit = (m.relations.row(ri) + m.relations.row(r)).norm();
    } else if (m.kind == ModelKind::ComplEx) {
      const Eigen::Index k = m.dim;
      const Real re = m.relations.row(ri).head(k).dot(m.relations.row(r).head(k)) -
                      m.relations.row(ri).tail(k).dot(m.relations.row(r).tail(k));
      crit = std::abs(re - 1.0);
    } else {
      crit = std::abs(m.relations.row(ri).dot(m.relations.row(r)) - 1.0);
    }
    if (crit < best_crit) {
      best_crit = crit;
      best = ri;
    }
  }
  return best;
}

Vector compose_relation_embeddings(const Model& m, int r1, int r2) {
  const auto a = m.relations.row(r1).transpose();
  const auto b = m.relations.row(r2).transpose();
  Vector out(a.size());
  if (family_of(m.kind) == Family::Additive) {
    out = a + b;
  } else if (m.kind == ModelKind::ComplEx) {
    const Eigen::Index k = m.dim;
    out.head(k).array() = a.head(k).array() * b.head(k).array() -
                          a.tail(k).array() * b.tail(k).array();
    out.tail(k).array() = a.head(k).array() * b.tail(k).array() +
                          a.tail(k).array() * b.head(k).array();
  } else {
    out = a.cwiseProduct(b);
  }
  return out;
}

std::pair<int, int> find_composition_pair(const Model& m, int r, bool exclude_r) {
  if (m.n_relations() < (exclude_r ? 2 : 1)) {
    throw std::invalid_argument("find_composition_pair: not enough relations");
  }
  std::pair<int, int> best{-1, -1};
  Real best_dist = std::numeric_limits<Real>::infinity();
  const Vector target = m.relations.row(r).transpose();
  for (int r1 = 0; r1 < m.n_relations(); ++r1) {
    if (exclude_r && r1 == r) continue;
    for (int r2 = 0; r2 < m.n_relations(); ++r2) {
      if (exclude_r && r2 == r) continue;
      const Real dist = (compose_relation_embeddings(m, r1, r2) - target).norm();
      if (dist < best_dist) {
        best_dist = dist;
        best = {r1, r2};
      }
    }
  }
  return best;
}

std::vector<int> decoy_candidates(const Triple& target, Side side, const FilterIndex& fidx,
                                  int n_entities) {
  const bool object_side = side == Side::Object;
  const std::vector<int>& existing =
      object_side ? fidx.objects_for(target.s, target.r) : fidx.subjects_for(target.r, target.o);
  const int replaced = object_side ? target.o : target.s;
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(n_entities));
  for (int e = 0; e < n_entities; ++e) {
    if (e == replaced) continue;
    if (std::binary_search(existing.begin(), existing.end(), e)) continue;
    out.push_back(e);
  }
  return out;
}

namespace {

std::vector<int> candidates_minus(const Triple& target, Side side, const FilterIndex& fidx,
                                  int n_entities, int extra_exclude) {
  std::vector<int> cands = decoy_candidates(target, side, fidx, n_entities);
  if (extra_exclude >= 0) {
    auto it = std::lower_bound(cands.begin(), cands.end(), extra_exclude);
    if (it != cands.end() && *it == extra_exclude) cands.erase(it);
  }
  return cands;
}

}  // namespace

std::optional<DecoyChoice> select_decoy_truth(const Model& m, const Triple& target, Side side,
                                              const FilterIndex& fidx, const PatternContext& ctx,
                                              int extra_exclude) {
  const std::vector<int> cands =
      candidates_minus(target, side, fidx, m.n_entities(), extra_exclude);
  if (cands.empty()) return std::nullopt;
  const bool object_side = side == Side::Object;

  const Vector head = object_side ? score_all_objects(m, target.s, target.r)
                                  : score_all_subjects(m, target.r, target.o);
  std::vector<Real> head_sig(cands.size());
  for (std::size_t i = 0; i < cands.size(); ++i) head_sig[i] = sigmoid(head[cands[i]]);

  std::vector<Real> phi(cands.size(), std::numeric_limits<Real>::infinity());
  if (ctx.pattern == AttackPattern::Com) {
    const auto [r1, r2] = ctx.pair;
    const Matrix& centroids = *ctx.centroids;
    Vector centroid;
    for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
      centroid = centroids.row(c).transpose();
      if (object_side) {
        // body: (s, r1, o'') and (o'', r2, o') with the centroid as o''
        const Real b1 = sigmoid(score_with_object_embedding(m, target.s, r1, centroid));
        const Vector b2 = score_all_objects_with_subject_embedding(m, centroid, r2);
        for (std::size_t i = 0; i < cands.size(); ++i) {
          phi[i] = std::min(phi[i], ground_score(b1, sigmoid(b2[cands[i]]), head_sig[i]));
        }
      } else {
        // body: (s', r1, o'') and (o'', r2, o)
        const Vector b1 = score_all_subjects_with_object_embedding(m, r1, centroid);
        const Real b2 = sigmoid(score_with_subject_embedding(m, centroid, r2, target.o));
        for (std::size_t i = 0; i < cands.size(); ++i) {
          phi[i] = std::min(phi[i], ground_score(sigmoid(b1[cands[i]]), b2, head_sig[i]));
        }
      }
    }
  } else {
    // body: object side (o', rb, s), subject side (o, rb, s')
    const Vector body = object_side ? score_all_subjects(m, ctx.body_relation, target.s)
                                    : score_all_objects(m, target.o, ctx.body_relation);
    for (std::size_t i = 0; i < cands.size(); ++i) {
      phi[i] = ground_score(sigmoid(body[cands[i]]), head_sig[i]);
    }
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < phi.size(); ++i) {
    if (phi[i] < phi[best]) best = i;
  }
  return DecoyChoice{target, side, cands[best], phi[best]};
}

std::optional<DecoyChoice> select_decoy_rank(const Model& m, const Triple& target, Side side,
                                             const FilterIndex& fidx, int extra_exclude) {
  const std::vector<int> cands =
      candidates_minus(target, side, fidx, m.n_entities(), extra_exclude);
  if (cands.empty()) return std::nullopt;
  const bool object_side = side == Side::Object;
  const Vector scores = object_side ? score_all_objects(m, target.s, target.r)
                                    : score_all_subjects(m, target.r, target.o);
  const Real true_score = scores[object_side ? target.o : target.s];
  int best = -1;
  Real best_score = -std::numeric_limits<Real>::infinity();
  for (int c : cands) {
    if (scores[c] <= true_score && scores[c] > best_score) {
      best_score = scores[c];
      best = c;
    }
  }
  if (best < 0) return std::nullopt;
  return DecoyChoice{target, side, best, best_score};
}

std::optional<DecoyChoice> select_decoy_cos(const Model& m, const Triple& target, Side side,
                                            const FilterIndex& fidx, int extra_exclude) {
  const std::vector<int> cands =
      candidates_minus(target, side, fidx, m.n_entities(), extra_exclude);
  if (cands.empty()) return std::nullopt;
  const int replaced = side == Side::Object ? target.o : target.s;
  const Vector ref = m.entities.row(replaced).transpose();
  const Real ref_norm = ref.norm();
  int best = -1;
  Real best_dist = -std::numeric_limits<Real>::infinity();
  for (int c : cands) {
    const Real cand_norm = m.entities.row(c).norm();
    Real dist;
    if (ref_norm == 0.0 || cand_norm == 0.0) {
      std::cerr << "select_decoy_cos: zero-norm embedding, using distance 1\n";
      dist = 1.0;
    } else {
      dist = 1.0 - m.entities.row(c).transpose().dot(ref) / (cand_norm * ref_norm);
    }
    if (dist > best_dist) {
      best_dist = dist;
      best = c;
    }
  }
  return DecoyChoice{target, side, best, best_dist};
}

std::optional<int> select_adversarial_entity_com(const Model& m, const Triple& target,
                                                 int decoy_entity, Side side,
                                                 std::pair<int, int> pair, Step3Mode mode,
                                                 const TripleSet& train_set) {
  const auto [r1, r2] = pair;
  const bool object_side = side == Side::Object;
  // Body atoms with o'' free: object side (s, r1, o'') & (o'', r2, o');
  // subject side (s', r1, o'') & (o'', r2, o).
  const int body1_subject = object_side ? target.s : decoy_entity;
  const int body2_object = object_side ? decoy_entity : target.o;
  const Vector b1 = score_all_objects(m, body1_subject, r1);
  const Vector b2 = score_all_subjects(m, r2, body2_object);
  const Triple decoy = object_side ? Triple{target.s, target.r, decoy_entity}
                                   : Triple{decoy_entity, target.r, target.o};
  const Real h = sigmoid(score(m, decoy));

  int best = -1;
  Real best_val = -std::numeric_limits<Real>::infinity();
  for (int e = 0; e < m.n_entities(); ++e) {
    if (e == target.s || e == target.o || e == decoy_entity) continue;
    if (train_set.count(Triple{body1_subject, r1, e}) ||
        train_set.count(Triple{e, r2, body2_object})) {
      continue;
    }
    const Real s1 = sigmoid(b1[e]);
    const Real s2 = sigmoid(b2[e]);
    const Real val = mode == Step3Mode::LiteralArgmax ? ground_score(s1, s2, h) : t_and(s1, s2);
    if (val > best_val) {
      best_val = val;
      best = e;
    }
  }
  if (best < 0) return std::nullopt;
  return best;
}

namespace {

struct SideWork {
  std::optional<DecoyChoice> decoy;
  std::uint64_t evals = 0;
  std::string skip_reason;
};

std::string attack_display_name(AttackPattern p, DecoyHeuristic h) {
  std::string name = pattern_name(p);
  name[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
  return name + "_" + heuristic_name(h);
}

}  // namespace

AttackResult generate_attack(const Model& m, const Dataset& ds, const FilterIndex& fidx,
                             const std::vector<TargetRecord>& targets, const AttackConfig& cfg) {
  AttackResult res;
  res.name = attack_display_name(cfg.pattern, cfg.heuristic);
  res.pattern = pattern_name(cfg.pattern);
  res.heuristic = heuristic_name(cfg.heuristic);

  const TripleSet train_set(ds.train.begin(), ds.train.end());

  // Step 1 precomputation, once per distinct target relation.
  std::unordered_map<int, int> inverse_of;
  std::unordered_map<int, std::pair<int, int>> pair_of;
  for (const TargetRecord& tr : targets) {
    const int r = tr.triple.r;
    if (cfg.pattern == AttackPattern::Inv && !inverse_of.count(r)) {
      inverse_of[r] = find_inverse_relation(m, r);
    } else if (cfg.pattern == AttackPattern::Com && !pair_of.count(r)) {
      pair_of[r] = find_composition_pair(m, r, cfg.exclude_target_relation);
    }
  }

  // Cluster the entity table once for the composition soft-truth search; the
  // time is reported separately from edit generation.
  Matrix centroids;
  if (cfg.pattern == AttackPattern::Com && cfg.heuristic == DecoyHeuristic::Truth) {
    int k = cfg.clusters_k;
    if (k > m.n_entities()) {
      std::cerr << res.name << ": clusters-k " << k << " clamped to " << m.n_entities() << "\n";
      k = m.n_entities();
    }
    const auto c0 = std::chrono::steady_clock::now();
    centroids = kmeans(m.entities, k, cfg.seed, cfg.kmeans_max_iters).centroids;
    res.clustering_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - c0).count();
  }

  const auto t0 = std::chrono::steady_clock::now();
  const Side sides[2] = {Side::Subject, Side::Object};

  // Choose every decoy first so edits can be checked against the full decoy
  // set (an edit may never coincide with any decoy triple).
  std::vector<SideWork> work(targets.size() * 2);
  for (std::size_t ti = 0; ti < targets.size(); ++ti) {
    const Triple& t = targets[ti].triple;
    for (int si = 0; si < 2; ++si) {
      const Side side = sides[si];
      SideWork& w = work[ti * 2 + static_cast<std::size_t>(si)];
      const std::uint64_t before = score_evals();
      const int extra = cfg.pattern == AttackPattern::Sym
                            ? (side == Side::Object ? t.s : t.o)
                            : -1;
      PatternContext ctx;
      ctx.pattern = cfg.pattern;
      if (cfg.pattern == AttackPattern::Sym) {
        ctx.body_relation = t.r;
      } else if (cfg.pattern == AttackPattern::Inv) {
        ctx.body_relation = inverse_of.at(t.r);
      } else {
        ctx.pair = pair_of.at(t.r);
        ctx.centroids = &centroids;
      }
      switch (cfg.heuristic) {
        case DecoyHeuristic::Truth:
          w.decoy = select_decoy_truth(m, t, side, fidx, ctx, extra);
          break;
        case DecoyHeuristic::Rank:
          w.decoy = select_decoy_rank(m, t, side, fidx, extra);
          break;
        case DecoyHeuristic::Cos:
          w.decoy = select_decoy_cos(m, t, side, fidx, extra);
          break;
      }
      w.evals = score_evals() - before;
      if (!w.decoy) {
        w.skip_reason = candidates_minus(t, side, fidx, m.n_entities(), extra).empty()
                            ? "no valid decoy candidates"
                            : "no candidate ranked at or below the target";
      }
    }
  }

  TripleSet decoy_triples;
  for (const SideWork& w : work) {
    if (w.decoy) decoy_triples.insert(w.decoy->decoy_triple());
  }

  TripleSet emitted;
  for (std::size_t ti = 0; ti < targets.size(); ++ti) {
    const Triple& t = targets[ti].triple;
    for (int si = 0; si < 2; ++si) {
      const Side side = sides[si];
      SideWork& w = work[ti * 2 + static_cast<std::size_t>(si)];
      if (!w.decoy) {
        res.skips.push_back(SkipRecord{t, side, w.skip_reason});
        continue;
      }
      const int decoy = w.decoy->decoy_entity;
      std::vector<Triple> raw;
      const std::uint64_t before = score_evals();
      switch (cfg.pattern) {
        case AttackPattern::Sym:
          raw.push_back(side == Side::Object ? Triple{decoy, t.r, t.s} : Triple{t.o, t.r, decoy});
          break;
        case AttackPattern::Inv: {
          const int ri = inverse_of.at(t.r);
          raw.push_back(side == Side::Object ? Triple{decoy, ri, t.s} : Triple{t.o, ri, decoy});
          break;
        }
        case AttackPattern::Com: {
          const auto [r1, r2] = pair_of.at(t.r);
          const auto mid =
              select_adversarial_entity_com(m, t, decoy, side, {r1, r2}, cfg.step3, train_set);
          if (!mid) break;
          if (side == Side::Object) {
            raw.push_back(Triple{t.s, r1, *mid});
            raw.push_back(Triple{*mid, r2, decoy});
          } else {
            raw.push_back(Triple{decoy, r1, *mid});
            raw.push_back(Triple{*mid, r2, t.o});
          }
          break;
        }
      }
      w.evals += score_evals() - before;
      if (raw.empty()) {
        res.skips.push_back(SkipRecord{t, side, "no intermediate entity candidates"});
        continue;
      }

      std::vector<Triple> kept;
      for (const Triple& e : raw) {
        if (train_set.count(e)) continue;
        if (decoy_triples.count(e)) continue;
        kept.push_back(e);
      }
      if (kept.empty()) {
        res.skips.push_back(SkipRecord{t, side, "edit triples already present"});
        continue;
      }
      res.decoys.push_back(*w.decoy);
      for (const Triple& e : kept) {
        if (emitted.insert(e).second) res.unique_triples.push_back(e);
      }
      res.edits.push_back(AdversarialEdit{std::move(kept), t, side});
    }
  }

  for (const SideWork& w : work) {
    res.max_side_score_evals = std::max(res.max_side_score_evals, w.evals);
  }
  res.generation_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

AttackResult generate_random_baseline(const Dataset& ds, const std::vector<TargetRecord>& targets,
                                      BaselineKind variant, std::uint64_t seed) {
  AttackResult res;
  res.pattern = baseline_name(variant);
  res.heuristic = "-";
  res.name = res.pattern;
  res.name[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(res.name[0])));

  const TripleSet train_set(ds.train.begin(), ds.train.end());
  const int n_ent = ds.vocab.n_entities();
  const int n_rel = ds.vocab.n_relations();
  Rng rng(seed);
  TripleSet emitted;
  const int per_side = variant == BaselineKind::RandomG2 ? 2 : 1;
  constexpr int kMaxRetries = 100;

  const auto t0 = std::chrono::steady_clock::now();
  for (const TargetRecord& tr : targets) {
    const Triple& t = tr.triple;
    for (Side side : {Side::Subject, Side::Object}) {
      for (int j = 0; j < per_side; ++j) {
        const int anchor = side == Side::Subject ? t.s : t.o;
        bool placed = false;
        for (int attempt = 0; attempt < kMaxRetries && !placed; ++attempt) {
          Triple e;
          if (variant == BaselineKind::RandomN) {
            const bool anchor_subject = rng.below(2) == 0;
            const int other = rng.index(n_ent);
            const int rel = rng.index(n_rel);
            e = anchor_subject ? Triple{anchor, rel, other} : Triple{other, rel, anchor};
          } else {
            e = Triple{rng.index(n_ent), rng.index(n_rel), rng.index(n_ent)};
          }
          if (train_set.count(e) || emitted.count(e)) continue;
          emitted.insert(e);
          res.unique_triples.push_back(e);
          res.edits.push_back(AdversarialEdit{{e}, t, side});
          placed = true;
        }
        if (!placed) {
          res.skips.push_back(SkipRecord{t, side, "retry budget exhausted"});
        }
      }
    }
  }
  res.generation_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

void write_edits_tsv(const std::string& path, const AttackResult& result, const Vocabulary& vocab) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "subject\trelation\tobject\tpattern\theuristic\ttarget_subject\ttarget_relation\t"
         "target_object\tside\n";
  for (const AdversarialEdit& edit : result.edits) {
    for (const Triple& e : edit.triples) {
      out << vocab.entity_name(e.s) << '\t' << vocab.relation_name(e.r) << '\t'
          << vocab.entity_name(e.o) << '\t' << result.pattern << '\t' << result.heuristic << '\t'
          << vocab.entity_name(edit.target.s) << '\t' << vocab.relation_name(edit.target.r) << '\t'
          << vocab.entity_name(edit.target.o) << '\t' << side_name(edit.side) << '\n';
    }
  }
}

std::vector<Triple> read_edits_tsv(const std::string& path, const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<Triple> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 || line.empty()) continue;  // header
    std::istringstream ls(line);
    std::string s, r, o;
    if (!std::getline(ls, s, '\t') || !std::getline(ls, r, '\t') || !std::getline(ls, o, '\t')) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed edit row");
    }
    auto sid = vocab.entity_id(s);
    auto rid = vocab.relation_id(r);
    auto oid = vocab.entity_id(o);
    if (!sid || !rid || !oid) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": edit names an unknown entity or relation");
    }
    out.push_back(Triple{*sid, *rid, *oid});
  }
  return out;
}

}  // namespace kgelab
