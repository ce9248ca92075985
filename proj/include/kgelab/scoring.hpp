#pragma once

#include <cstdint>

#include "kgelab/model.hpp"
#include "kgelab/types.hpp"

namespace kgelab {

namespace detail {
inline std::uint64_t g_score_evals = 0;
}

// Running count of per-triple score evaluations (score adds 1, the score_all
// family adds n_entities). Reset then read around a region to measure how much
// scoring work an attack spends. Single-threaded by design.
inline std::uint64_t score_evals() { return detail::g_score_evals; }
inline void reset_score_evals() { detail::g_score_evals = 0; }

// One scoring kernel per model kind, written over row expressions so that a
// single-triple score and a row of a score_all sweep run the identical
// instantiation and agree bit for bit.
template <class D1, class D2, class D3>
Real score_embeddings(ModelKind kind, Real margin, const Eigen::MatrixBase<D1>& es,
                      const Eigen::MatrixBase<D2>& er, const Eigen::MatrixBase<D3>& eo) {
  switch (kind) {
    case ModelKind::DistMult:
      return (es.array() * er.array() * eo.array()).sum();
    case ModelKind::ComplEx: {
      const Eigen::Index k = es.size() / 2;
      auto as = es.head(k).array(), bs = es.tail(k).array();
      auto ar = er.head(k).array(), br = er.tail(k).array();
      auto ao = eo.head(k).array(), bo = eo.tail(k).array();
      // Re(<e_s, e_r, conj(e_o)>)
      return ((as * ar - bs * br) * ao + (as * br + bs * ar) * bo).sum();
    }
    default:
      return margin - (es + er - eo).norm();
  }
}

inline Real score(const Model& m, const Triple& t) {
  ++detail::g_score_evals;
  return score_embeddings(m.kind, m.margin, m.entities.row(t.s).transpose(),
                          m.relations.row(t.r).transpose(), m.entities.row(t.o).transpose());
}

// Scores (s, r, e) for every entity e. Loops the per-triple kernel row by row
// rather than batching into a matrix product, keeping exact agreement with
// score() a structural property instead of a floating-point accident.
inline Vector score_all_objects(const Model& m, int s, int r) {
  const int n = m.n_entities();
  detail::g_score_evals += static_cast<std::uint64_t>(n);
  Vector out(n);
  for (int e = 0; e < n; ++e) {
    out[e] = score_embeddings(m.kind, m.margin, m.entities.row(s).transpose(),
                              m.relations.row(r).transpose(), m.entities.row(e).transpose());
  }
  return out;
}

inline Vector score_all_subjects(const Model& m, int r, int o) {
  const int n = m.n_entities();
  detail::g_score_evals += static_cast<std::uint64_t>(n);
  Vector out(n);
  for (int e = 0; e < n; ++e) {
    out[e] = score_embeddings(m.kind, m.margin, m.entities.row(e).transpose(),
                              m.relations.row(r).transpose(), m.entities.row(o).transpose());
  }
  return out;
}

// Variants that take a free-standing embedding in one slot, used when the
// "entity" is a virtual point such as a cluster centroid.
inline Real score_with_object_embedding(const Model& m, int s, int r, const Vector& obj) {
  ++detail::g_score_evals;
  return score_embeddings(m.kind, m.margin, m.entities.row(s).transpose(),
                          m.relations.row(r).transpose(), obj);
}

inline Real score_with_subject_embedding(const Model& m, const Vector& subj, int r, int o) {
  ++detail::g_score_evals;
  return score_embeddings(m.kind, m.margin, subj, m.relations.row(r).transpose(),
                          m.entities.row(o).transpose());
}

inline Vector score_all_objects_with_subject_embedding(const Model& m, const Vector& subj, int r) {
  const int n = m.n_entities();
  detail::g_score_evals += static_cast<std::uint64_t>(n);
  Vector out(n);
  for (int e = 0; e < n; ++e) {
    out[e] = score_embeddings(m.kind, m.margin, subj, m.relations.row(r).transpose(),
                              m.entities.row(e).transpose());
  }
  return out;
}

inline Vector score_all_subjects_with_object_embedding(const Model& m, int r, const Vector& obj) {
  const int n = m.n_entities();
  detail::g_score_evals += static_cast<std::uint64_t>(n);
  Vector out(n);
  for (int e = 0; e < n; ++e) {
    out[e] = score_embeddings(m.kind, m.margin, m.entities.row(e).transpose(),
                              m.relations.row(r).transpose(), obj);
  }
  return out;
}

struct TripleGrad {
  Vector d_subject, d_relation, d_object;
};

// Analytic gradient of the score in each embedding slot. For the additive kind
// at zero distance the norm is not differentiable; the zero subgradient is used.
inline TripleGrad grad_score(const Model& m, const Triple& t) {
  const Vector es = m.entities.row(t.s).transpose();
  const Vector er = m.relations.row(t.r).transpose();
  const Vector eo = m.entities.row(t.o).transpose();
  TripleGrad g;
  switch (m.kind) {
    case ModelKind::DistMult:
      g.d_subject = er.cwiseProduct(eo);
      g.d_relation = es.cwiseProduct(eo);
      g.d_object = es.cwiseProduct(er);
      break;
    case ModelKind::ComplEx: {
      const Eigen::Index k = es.size() / 2;
      auto as = es.head(k).array(), bs = es.tail(k).array();
      auto ar = er.head(k).array(), br = er.tail(k).array();
      auto ao = eo.head(k).array(), bo = eo.tail(k).array();
      g.d_subject.resize(2 * k);
      g.d_relation.resize(2 * k);
      g.d_object.resize(2 * k);
      g.d_subject.head(k).array() = ar * ao + br * bo;
      g.d_subject.tail(k).array() = ar * bo - br * ao;
      g.d_relation.head(k).array() = as * ao + bs * bo;
      g.d_relation.tail(k).array() = as * bo - bs * ao;
      g.d_object.head(k).array() = ar * as - br * bs;
      g.d_object.tail(k).array() = ar * bs + br * as;
      break;
    }
    default: {
      const Vector d = es + er - eo;
      const Real n = d.norm();
      if (n == 0.0) {
        g.d_subject = Vector::Zero(es.size());
        g.d_relation = Vector::Zero(es.size());
        g.d_object = Vector::Zero(es.size());
      } else {
        g.d_subject = -d / n;
        g.d_relation = -d / n;
        g.d_object = d / n;
      }
    }
  }
  return g;
}

}  // namespace kgelab
