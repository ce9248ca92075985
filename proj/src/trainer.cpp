#include "kgelab/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "kgelab/rng.hpp"
#include "kgelab/softlogic.hpp"

namespace kgelab {

namespace {

std::string fmt_real(Real v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

std::string config_canonical(const TrainConfig& cfg) {
  std::ostringstream os;
  os << "dim=" << cfg.dim << '\n'
     << "epochs=" << cfg.epochs << '\n'
     << "batch_size=" << cfg.batch_size << '\n'
     << "lr=" << fmt_real(cfg.lr) << '\n'
     << "label_smoothing=" << fmt_real(cfg.label_smoothing) << '\n'
     << "l2=" << fmt_real(cfg.l2) << '\n'
     << "input_dropout=" << fmt_real(cfg.input_dropout) << '\n'
     << "seed=" << cfg.seed << '\n'
     << "optimizer=" << (cfg.optimizer == OptimizerKind::Adam ? "adam" : "sgd") << '\n'
     << "adam_beta1=" << fmt_real(cfg.adam_beta1) << '\n'
     << "adam_beta2=" << fmt_real(cfg.adam_beta2) << '\n'
     << "adam_eps=" << fmt_real(cfg.adam_eps) << '\n'
     << "margin=" << fmt_real(cfg.margin) << '\n';
  return os.str();
}

std::string config_hash(const TrainConfig& cfg) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(config_canonical(cfg));
  return os.str();
}

GroupedTrain group_train_triples(const Dataset& ds) {
  GroupedTrain out;
  auto build = [](std::vector<Triple> triples, bool key_is_subject, std::vector<KeyGroup>& dst) {
    std::sort(triples.begin(), triples.end(), [&](const Triple& a, const Triple& b) {
      const int ka = key_is_subject ? a.s : a.o, kb = key_is_subject ? b.s : b.o;
      const int va = key_is_subject ? a.o : a.s, vb = key_is_subject ? b.o : b.s;
      if (ka != kb) return ka < kb;
      if (a.r != b.r) return a.r < b.r;
      return va < vb;
    });
    for (const Triple& t : triples) {
      const int key = key_is_subject ? t.s : t.o;
      const int value = key_is_subject ? t.o : t.s;
      if (dst.empty() || dst.back().key_entity != key || dst.back().key_relation != t.r) {
        dst.push_back(KeyGroup{key, t.r, {}});
      }
      dst.back().completions.push_back(value);
    }
  };
  build(ds.train, true, out.by_subject_relation);
  build(ds.train, false, out.by_object_relation);
  return out;
}

Vector label_vector(const KeyGroup& g, int n_entities, Real label_smoothing) {
  const Real base = label_smoothing / static_cast<Real>(n_entities);
  Vector y = Vector::Constant(n_entities, base);
  for (int e : g.completions) y[e] = 1.0 - label_smoothing + base;
  return y;
}

Real bce_with_logits(Real logit, Real label) {
  return std::max(logit, 0.0) - logit * label + std::log1p(std::exp(-std::abs(logit)));
}

Real bce_grad(Real logit, Real label) { return sigmoid(logit) - label; }

namespace {

void gather_rows(const Matrix& table, const std::vector<const KeyGroup*>& groups, bool entity_slot,
                 Matrix& out) {
  out.resize(static_cast<Eigen::Index>(groups.size()), table.cols());
  for (std::size_t b = 0; b < groups.size(); ++b) {
    const int id = entity_slot ? groups[b]->key_entity : groups[b]->key_relation;
    out.row(static_cast<Eigen::Index>(b)) = table.row(id);
  }
}

}  // namespace

Real batch_loss_and_grads(const Model& m, Side side, const std::vector<const KeyGroup*>& groups,
                          const TrainConfig& cfg, Gradients& out, const Matrix* entity_mask,
                          const Matrix* relation_mask) {
  if (groups.empty()) throw std::invalid_argument("batch_loss_and_grads: empty batch");
  if (side == Side::Both) throw std::invalid_argument("batch_loss_and_grads: side must be one slot");
  const Eigen::Index B = static_cast<Eigen::Index>(groups.size());
  const Eigen::Index n = m.entities.rows();
  const Eigen::Index C = m.entities.cols();
  const Real inv_count = 1.0 / static_cast<Real>(B * n);

  out.d_entities.resize(n, C);
  out.d_relations.resize(m.relations.rows(), C);
  out.d_entities.setZero();
  out.d_relations.setZero();

  Matrix KE, KR;
  gather_rows(m.entities, groups, true, KE);
  gather_rows(m.relations, groups, false, KR);
  if (entity_mask) KE.array() *= entity_mask->array();
  if (relation_mask) KR.array() *= relation_mask->array();

  // Forward: logits L, one row per group over every entity.
  Matrix L(B, n);
  Matrix Q;  // multiplicative query rows; unused for the additive kind
  if (m.kind == ModelKind::DistMult) {
    Q = KE.cwiseProduct(KR);
    L.noalias() = Q * m.entities.transpose();
  } else if (m.kind == ModelKind::ComplEx) {
    const Eigen::Index k = C / 2;
    auto KEre = KE.leftCols(k).array(), KEim = KE.rightCols(k).array();
    auto KRre = KR.leftCols(k).array(), KRim = KR.rightCols(k).array();
    Q.resize(B, C);
    if (side == Side::Subject) {
      Q.leftCols(k).array() = KEre * KRre - KEim * KRim;
      Q.rightCols(k).array() = KEre * KRim + KEim * KRre;
    } else {
      Q.leftCols(k).array() = KRre * KEre + KRim * KEim;
      Q.rightCols(k).array() = KRim * KEre - KRre * KEim;
    }
    L.noalias() = Q * m.entities.transpose();
  } else {
    Eigen::RowVectorXd t(C);
    for (Eigen::Index b = 0; b < B; ++b) {
      if (side == Side::Subject) {
        t = KE.row(b) + KR.row(b);
      } else {
        t = KE.row(b) - KR.row(b);
      }
      for (Eigen::Index e = 0; e < n; ++e) {
        L(b, e) = m.margin - (t - m.entities.row(e)).norm();
      }
    }
  }

  // Loss, and L overwritten in place with dLoss/dlogit.
  Real loss = 0.0;
  Vector y;
  for (Eigen::Index b = 0; b < B; ++b) {
    y = label_vector(*groups[static_cast<std::size_t>(b)], static_cast<int>(n),
                     cfg.label_smoothing);
    for (Eigen::Index e = 0; e < n; ++e) {
      loss += bce_with_logits(L(b, e), y[e]);
      L(b, e) = bce_grad(L(b, e), y[e]) * inv_count;
    }
  }
  loss *= inv_count;

  // Backward into the key rows and the candidate table.
  Matrix dKE(B, C), dKR(B, C);
  if (m.kind == ModelKind::DistMult) {
    out.d_entities.noalias() += L.transpose() * Q;
    Matrix dQ = L * m.entities;
    dKE = dQ.cwiseProduct(KR);
    dKR = dQ.cwiseProduct(KE);
  } else if (m.kind == ModelKind::ComplEx) {
    const Eigen::Index k = C / 2;
    out.d_entities.noalias() += L.transpose() * Q;
    Matrix dQ = L * m.entities;
    auto dQre = dQ.leftCols(k).array(), dQim = dQ.rightCols(k).array();
    auto KEre = KE.leftCols(k).array(), KEim = KE.rightCols(k).array();
    auto KRre = KR.leftCols(k).array(), KRim = KR.rightCols(k).array();
    if (side == Side::Subject) {
      dKE.leftCols(k).array() = dQre * KRre + dQim * KRim;
      dKE.rightCols(k).array() = -dQre * KRim + dQim * KRre;
      dKR.leftCols(k).array() = dQre * KEre + dQim * KEim;
      dKR.rightCols(k).array() = -dQre * KEim + dQim * KEre;
    } else {
      dKE.leftCols(k).array() = dQre * KRre + dQim * KRim;
      dKE.rightCols(k).array() = dQre * KRim - dQim * KRre;
      dKR.leftCols(k).array() = dQre * KEre - dQim * KEim;
      dKR.rightCols(k).array() = dQim * KEre + dQre * KEim;
    }
  } else {
    dKE.setZero();
    dKR.setZero();
    Eigen::RowVectorXd t(C), diff(C), dt(C);
    for (Eigen::Index b = 0; b < B; ++b) {
      if (side == Side::Subject) {
        t = KE.row(b) + KR.row(b);
      } else {
        t = KE.row(b) - KR.row(b);
      }
      dt.setZero();
      for (Eigen::Index e = 0; e < n; ++e) {
        diff = t - m.entities.row(e);
        const Real norm = diff.norm();
        if (norm == 0.0) continue;
        const Real g = L(b, e) / norm;
        dt.noalias() -= g * diff;
        out.d_entities.row(e).noalias() += g * diff;
      }
      dKE.row(b) = dt;
      dKR.row(b) = side == Side::Subject ? dt : -dt;
    }
  }
  if (entity_mask) dKE.array() *= entity_mask->array();
  if (relation_mask) dKR.array() *= relation_mask->array();
  for (Eigen::Index b = 0; b < B; ++b) {
    const KeyGroup& g = *groups[static_cast<std::size_t>(b)];
    out.d_entities.row(g.key_entity) += dKE.row(b);
    out.d_relations.row(g.key_relation) += dKR.row(b);
  }

  if (cfg.l2 > 0.0) {
    const Real denom = static_cast<Real>(m.entities.rows() + m.relations.rows());
    loss += cfg.l2 * (m.entities.squaredNorm() + m.relations.squaredNorm()) / denom;
    out.d_entities += (2.0 * cfg.l2 / denom) * m.entities;
    out.d_relations += (2.0 * cfg.l2 / denom) * m.relations;
  }
  return loss;
}

namespace {

struct AdamState {
  Matrix m_ent, v_ent, m_rel, v_rel;
  long t = 0;
};

void adam_step(Matrix& table, const Matrix& grad, Matrix& mom, Matrix& vel, long t,
               const TrainConfig& cfg) {
  mom = cfg.adam_beta1 * mom + (1.0 - cfg.adam_beta1) * grad;
  vel = cfg.adam_beta2 * vel + (1.0 - cfg.adam_beta2) * grad.cwiseProduct(grad);
  const Real bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<Real>(t));
  const Real bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<Real>(t));
  table.array() -=
      cfg.lr * (mom.array() / bc1) / ((vel.array() / bc2).sqrt() + cfg.adam_eps);
}

void fill_mask(Matrix& mask, Eigen::Index rows, Eigen::Index cols, Real p, Rng& rng) {
  mask.resize(rows, cols);
  const Real keep_scale = 1.0 / (1.0 - p);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) mask(i, j) = rng.uniform01() < p ? 0.0 : keep_scale;
}

}  // namespace

std::pair<Model, TrainReport> train(const Dataset& ds, ModelKind kind, const TrainConfig& cfg,
                                    const std::string& checkpoint_dir) {
  if (cfg.epochs < 0 || cfg.batch_size <= 0) {
    throw std::invalid_argument("train: epochs must be >= 0 and batch_size positive");
  }
  const auto t0 = std::chrono::steady_clock::now();

  Model model = init_model(kind, ds.vocab.n_entities(), ds.vocab.n_relations(), cfg.dim, cfg.seed,
                           cfg.margin);
  const GroupedTrain grouped = group_train_triples(ds);
  Rng order_rng(derive_seed(cfg.seed, 1));
  Rng dropout_rng(derive_seed(cfg.seed, 2));

  AdamState adam;
  if (cfg.optimizer == OptimizerKind::Adam) {
    adam.m_ent = Matrix::Zero(model.entities.rows(), model.entities.cols());
    adam.v_ent = adam.m_ent;
    adam.m_rel = Matrix::Zero(model.relations.rows(), model.relations.cols());
    adam.v_rel = adam.m_rel;
  }

  std::vector<int> perm_s(grouped.by_subject_relation.size());
  std::vector<int> perm_o(grouped.by_object_relation.size());
  for (std::size_t i = 0; i < perm_s.size(); ++i) perm_s[i] = static_cast<int>(i);
  for (std::size_t i = 0; i < perm_o.size(); ++i) perm_o[i] = static_cast<int>(i);

  Gradients grads;
  Matrix mask_e, mask_r;
  TrainReport report;

  auto run_batch = [&](Side side, const std::vector<KeyGroup>& all, const std::vector<int>& perm,
                       std::size_t begin, std::size_t end, int epoch) -> Real {
    std::vector<const KeyGroup*> batch;
    batch.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
      batch.push_back(&all[static_cast<std::size_t>(perm[i])]);
    }
    const Matrix* me = nullptr;
    const Matrix* mr = nullptr;
    if (cfg.input_dropout > 0.0) {
      fill_mask(mask_e, static_cast<Eigen::Index>(batch.size()), model.entities.cols(),
                cfg.input_dropout, dropout_rng);
      fill_mask(mask_r, static_cast<Eigen::Index>(batch.size()), model.relations.cols(),
                cfg.input_dropout, dropout_rng);
      me = &mask_e;
      mr = &mask_r;
    }
    const Real loss = batch_loss_and_grads(model, side, batch, cfg, grads, me, mr);
    if (!std::isfinite(loss)) {
      throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch));
    }
    if (cfg.optimizer == OptimizerKind::Adam) {
      ++adam.t;
      adam_step(model.entities, grads.d_entities, adam.m_ent, adam.v_ent, adam.t, cfg);
      adam_step(model.relations, grads.d_relations, adam.m_rel, adam.v_rel, adam.t, cfg);
    } else {
      model.entities -= cfg.lr * grads.d_entities;
      model.relations -= cfg.lr * grads.d_relations;
    }
    return loss;
  };

  const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    order_rng.shuffle(perm_s);
    order_rng.shuffle(perm_o);
    const std::size_t nb_s = (perm_s.size() + bs - 1) / bs;
    const std::size_t nb_o = (perm_o.size() + bs - 1) / bs;
    Real loss_sum = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t i = 0; i < std::max(nb_s, nb_o); ++i) {
      if (i < nb_s) {
        loss_sum += run_batch(Side::Subject, grouped.by_subject_relation, perm_s, i * bs,
                              std::min((i + 1) * bs, perm_s.size()), epoch);
        ++n_batches;
      }
      if (i < nb_o) {
        loss_sum += run_batch(Side::Object, grouped.by_object_relation, perm_o, i * bs,
                              std::min((i + 1) * bs, perm_o.size()), epoch);
        ++n_batches;
      }
    }
    report.epoch_loss.push_back(n_batches ? loss_sum / static_cast<Real>(n_batches) : 0.0);
  }

  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!checkpoint_dir.empty()) {
    save_checkpoint(checkpoint_dir, model, cfg.seed, config_hash(cfg));
    report.checkpoint_path = checkpoint_dir;
  }
  return {std::move(model), std::move(report)};
}

}  // namespace kgelab
