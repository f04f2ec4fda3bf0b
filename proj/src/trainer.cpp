#include "connecte/trainer.hpp"

#include <cmath>
#include <cstddef>
#include <sstream>
#include <thread>

namespace connecte {

AdagradState AdagradState::zeros_like(const ModelParams& params, double epsilon) {
  AdagradState s;
  s.entity = Matrix::Zero(params.entity.rows(), params.entity.cols());
  s.type = Matrix::Zero(params.type.rows(), params.type.cols());
  s.rel_entity = Matrix::Zero(params.rel_entity.rows(), params.rel_entity.cols());
  s.rel_type = Matrix::Zero(params.rel_type.rows(), params.rel_type.cols());
  s.proj = Matrix::Zero(params.proj.rows(), params.proj.cols());
  s.epsilon = epsilon;
  return s;
}

namespace {

// Uniform redraw of one id slot, rejecting the original value.
void replace_uniform(int& slot, int n, Rng& rng) {
  if (n < 2) throw ConfigError("cannot corrupt a slot with fewer than 2 symbols");
  const int original = slot;
  do {
    slot = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
  } while (slot == original);
}

}  // namespace

Triple corrupt_triple(const Triple& t, Rng& rng, int n_entities) {
  Triple out = t;
  replace_uniform(rng.flip() ? out.head : out.tail, n_entities, rng);
  return out;
}

TypeAssertion corrupt_assertion(const TypeAssertion& a, Rng& rng, int n_entities, int n_types) {
  TypeAssertion out = a;
  if (rng.flip()) {
    replace_uniform(out.entity, n_entities, rng);
  } else {
    replace_uniform(out.type, n_types, rng);
  }
  return out;
}

TypeTriple corrupt_type_triple(const TypeTriple& tt, Rng& rng, int n_types) {
  TypeTriple out = tt;
  replace_uniform(rng.flip() ? out.head_type : out.tail_type, n_types, rng);
  return out;
}

void PairGradients::add(ParamGroup group, int row, const Vector& grad) {
  for (RowGrad& rg : rows) {
    if (rg.group == group && rg.row == row) {
      rg.grad += grad;
      return;
    }
  }
  rows.push_back(RowGrad{group, row, grad});
}

PairGradients pair_gradients_j1(const ModelParams& params, const Triple& pos, const Triple& neg) {
  PairGradients g;
  const Vector d_pos = (params.entity.row(pos.head) + params.rel_entity.row(pos.rel) -
                        params.entity.row(pos.tail))
                           .transpose();
  const Vector d_neg = (params.entity.row(neg.head) + params.rel_entity.row(neg.rel) -
                        params.entity.row(neg.tail))
                           .transpose();
  g.add(ParamGroup::Entity, pos.head, 2.0 * d_pos);
  g.add(ParamGroup::Entity, pos.tail, -2.0 * d_pos);
  g.add(ParamGroup::RelEntity, pos.rel, 2.0 * d_pos);
  g.add(ParamGroup::Entity, neg.head, -2.0 * d_neg);
  g.add(ParamGroup::Entity, neg.tail, 2.0 * d_neg);
  g.add(ParamGroup::RelEntity, neg.rel, -2.0 * d_neg);
  return g;
}

PairGradients pair_gradients_j2(const ModelParams& params, const TypeAssertion& pos,
                                const TypeAssertion& neg) {
  PairGradients g;
  const Vector e_pos = params.entity.row(pos.entity).transpose();
  const Vector e_neg = params.entity.row(neg.entity).transpose();
  const Vector g_pos = params.proj * e_pos - params.type.row(pos.type).transpose();
  const Vector g_neg = params.proj * e_neg - params.type.row(neg.type).transpose();
  // Entity rows stay frozen here, including the corrupted one.
  g.add(ParamGroup::Type, pos.type, -2.0 * g_pos);
  g.add(ParamGroup::Type, neg.type, 2.0 * g_neg);
  g.proj_grad = 2.0 * (g_pos * e_pos.transpose() - g_neg * e_neg.transpose());
  g.has_proj = true;
  return g;
}

PairGradients pair_gradients_j3(const ModelParams& params, const TypeTriple& pos,
                                const TypeTriple& neg) {
  PairGradients g;
  const Vector d_pos = (params.type.row(pos.head_type) + params.rel_type.row(pos.rel) -
                        params.type.row(pos.tail_type))
                           .transpose();
  const Vector d_neg = (params.type.row(neg.head_type) + params.rel_type.row(neg.rel) -
                        params.type.row(neg.tail_type))
                           .transpose();
  g.add(ParamGroup::RelType, pos.rel, 2.0 * d_pos);
  g.add(ParamGroup::RelType, neg.rel, -2.0 * d_neg);
  return g;
}

namespace {

void apply_gradients(ModelParams& params, AdagradState& ada, const PairGradients& grads,
                     double alpha) {
  for (const PairGradients::RowGrad& rg : grads.rows) {
    const auto g = rg.grad.transpose();
    switch (rg.group) {
      case ParamGroup::Entity:
        adagrad_update(params.entity.row(rg.row), ada.entity.row(rg.row), g, alpha, ada.epsilon);
        break;
      case ParamGroup::Type:
        adagrad_update(params.type.row(rg.row), ada.type.row(rg.row), g, alpha, ada.epsilon);
        break;
      case ParamGroup::RelEntity:
        adagrad_update(params.rel_entity.row(rg.row), ada.rel_entity.row(rg.row), g, alpha,
                       ada.epsilon);
        break;
      case ParamGroup::RelType:
        adagrad_update(params.rel_type.row(rg.row), ada.rel_type.row(rg.row), g, alpha,
                       ada.epsilon);
        break;
    }
  }
  if (grads.has_proj) {
    adagrad_update(params.proj, ada.proj, grads.proj_grad, alpha, ada.epsilon);
  }
}

// Shared batch walk: per pair score both sides, and on an active hinge apply
// the pair gradient. Splitting across threads races benignly on shared rows;
// per-chunk losses are still summed in chunk order.
template <class Record, class ScoreFn, class GradFn>
double run_batch(ModelParams& params, AdagradState& ada, const Batch<Record>& batch,
                 double margin, double alpha, int threads, ScoreFn score, GradFn grads) {
  const std::size_t n = batch.positives.size();
  auto process = [&](std::size_t begin, std::size_t end) {
    double loss = 0;
    for (std::size_t i = begin; i < end; ++i) {
      const Record& pos = batch.positives[i];
      const Record& neg = batch.negatives[i];
      const double l = hinge(margin, score(params, pos), score(params, neg));
      if (l > 0) {
        loss += l;
        apply_gradients(params, ada, grads(params, pos, neg), alpha);
      }
    }
    return loss;
  };

  if (threads <= 1 || n < 2 * static_cast<std::size_t>(threads)) {
    return process(0, n);
  }
  const std::size_t chunk = (n + static_cast<std::size_t>(threads) - 1) /
                            static_cast<std::size_t>(threads);
  std::vector<double> losses(static_cast<std::size_t>(threads), 0.0);
  std::vector<std::thread> workers;
  for (int t = 0; t < threads; ++t) {
    const std::size_t begin = static_cast<std::size_t>(t) * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    workers.emplace_back(
        [&, t, begin, end] { losses[static_cast<std::size_t>(t)] = process(begin, end); });
  }
  for (auto& w : workers) w.join();
  double total = 0;
  for (double l : losses) total += l;
  return total;
}

}  // namespace

double step_j1(ModelParams& params, AdagradState& ada, const Batch<Triple>& batch,
               const TrainConfig& cfg) {
  return run_batch<Triple>(
      params, ada, batch, cfg.gamma1, cfg.alpha, cfg.threads,
      [](const ModelParams& p, const Triple& t) { return score_transe(p, t); },
      pair_gradients_j1);
}

double step_j2(ModelParams& params, AdagradState& ada, const Batch<TypeAssertion>& batch,
               const TrainConfig& cfg) {
  return run_batch<TypeAssertion>(
      params, ada, batch, cfg.gamma2, cfg.alpha, cfg.threads,
      [](const ModelParams& p, const TypeAssertion& a) { return score_e2t(p, a); },
      pair_gradients_j2);
}

double step_j3(ModelParams& params, AdagradState& ada, const Batch<TypeTriple>& batch,
               const TrainConfig& cfg) {
  return run_batch<TypeTriple>(
      params, ada, batch, cfg.gamma3, cfg.alpha, cfg.threads,
      [](const ModelParams& p, const TypeTriple& tt) { return score_trt(p, tt); },
      pair_gradients_j3);
}

namespace {

// One full pass of a stage over its training list, shuffled and batched.
template <class Record, class Corrupt, class Step>
double run_stage(ModelParams& params, AdagradState& ada, const std::vector<Record>& data,
                 std::vector<std::uint32_t>& order, Rng& shuffle_rng, Rng& neg_rng,
                 const TrainConfig& cfg, const char* stage, Corrupt corrupt, Step step) {
  if (data.empty()) return 0.0;
  shuffle_rng.shuffle(order);
  double stage_loss = 0;
  const std::size_t batch_size = static_cast<std::size_t>(cfg.batch_size);
  std::size_t batch_index = 0;
  for (std::size_t begin = 0; begin < order.size(); begin += batch_size, ++batch_index) {
    const std::size_t end = std::min(order.size(), begin + batch_size);
    Batch<Record> batch;
    batch.positives.reserve((end - begin) * static_cast<std::size_t>(cfg.neg_per_pos));
    batch.negatives.reserve(batch.positives.capacity());
    for (std::size_t i = begin; i < end; ++i) {
      const Record& pos = data[order[i]];
      for (int k = 0; k < cfg.neg_per_pos; ++k) {
        batch.positives.push_back(pos);
        batch.negatives.push_back(corrupt(pos, neg_rng));
      }
    }
    const double batch_loss = step(params, ada, batch, cfg);
    if (!std::isfinite(batch_loss)) {
      std::ostringstream msg;
      msg << stage << ": non-finite loss at batch " << batch_index;
      throw NumericError(msg.str());
    }
    stage_loss += batch_loss;
  }
  return stage_loss;
}

std::vector<std::uint32_t> iota_index(std::size_t n) {
  std::vector<std::uint32_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<std::uint32_t>(i);
  return idx;
}

}  // namespace

TrainResult train(const KnowledgeBase& kb, const TrainConfig& cfg, const EpochObserver& observer) {
  cfg.validate();
  TrainResult result;
  result.params = init_params(cfg.kappa, cfg.ell, kb.n_entities, kb.n_relations, kb.n_types,
                              cfg.seed, cfg.init_bound);
  AdagradState ada = AdagradState::zeros_like(result.params, cfg.adagrad_eps);

  Rng root(cfg.seed);
  Rng shuffle_rng = root.fork(10);
  Rng neg_j1 = root.fork(11);
  Rng neg_j2 = root.fork(12);
  Rng neg_j3 = root.fork(13);

  std::vector<std::uint32_t> order_d = iota_index(kb.triples.size());
  std::vector<std::uint32_t> order_h = iota_index(kb.assertions.size());
  std::vector<std::uint32_t> order_z = iota_index(kb.type_triples.size());

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    EpochLosses losses;
    losses.epoch = epoch;
    losses.j1 = run_stage<Triple>(
        result.params, ada, kb.triples, order_d, shuffle_rng, neg_j1, cfg, "J1",
        [&](const Triple& t, Rng& rng) { return corrupt_triple(t, rng, kb.n_entities); },
        step_j1);
    losses.j2 = run_stage<TypeAssertion>(
        result.params, ada, kb.assertions, order_h, shuffle_rng, neg_j2, cfg, "J2",
        [&](const TypeAssertion& a, Rng& rng) {
          return corrupt_assertion(a, rng, kb.n_entities, kb.n_types);
        },
        step_j2);
    losses.j3 = run_stage<TypeTriple>(
        result.params, ada, kb.type_triples, order_z, shuffle_rng, neg_j3, cfg, "J3",
        [&](const TypeTriple& tt, Rng& rng) { return corrupt_type_triple(tt, rng, kb.n_types); },
        step_j3);
    normalize_entities(result.params);
    result.history.push_back(losses);
    if (observer) observer(losses, result.params);
  }
  return result;
}

}  // namespace connecte
