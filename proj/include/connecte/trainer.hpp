#pragma once

#include <algorithm>
#include <functional>
#include <utility>
#include <vector>

#include "connecte/kg.hpp"
#include "connecte/model.hpp"
#include "connecte/rng.hpp"
#include "connecte/types.hpp"

namespace connecte {

// One Adagrad accumulator per parameter group, same shapes, starting at 0.
struct AdagradState {
  Matrix entity;
  Matrix type;
  Matrix rel_entity;
  Matrix rel_type;
  Matrix proj;
  double epsilon = 1e-8;

  static AdagradState zeros_like(const ModelParams& params, double epsilon);
};

// accum += grad^2 elementwise, then param -= alpha * grad / (sqrt(accum) + eps).
template <class ParamT, class AccumT, class GradT>
void adagrad_update(ParamT&& param, AccumT&& accum, const GradT& grad, double alpha,
                    double epsilon) {
  accum.array() += grad.array().square();
  param.array() -= alpha * grad.array() / (accum.array().sqrt() + epsilon);
}

inline Scalar hinge(Scalar margin, Scalar s_pos, Scalar s_neg) {
  return std::max(Scalar(0), margin + s_pos - s_neg);
}

// Corruptors replace exactly one slot (p = 1/2 per side) with a uniform
// draw that differs from the original; the relation is never replaced.
Triple corrupt_triple(const Triple& t, Rng& rng, int n_entities);
TypeAssertion corrupt_assertion(const TypeAssertion& a, Rng& rng, int n_entities, int n_types);
TypeTriple corrupt_type_triple(const TypeTriple& tt, Rng& rng, int n_types);

template <class Record>
struct Batch {
  std::vector<Record> positives;
  std::vector<Record> negatives;  // parallel to positives
};

enum class ParamGroup { Entity, Type, RelEntity, RelType };

// Gradient of one hinge pair, deduplicated per touched row (slot aliasing
// between the positive and its corruption is folded into a single entry).
// proj_grad covers the full projection matrix when J2 touches it.
struct PairGradients {
  struct RowGrad {
    ParamGroup group;
    int row;
    Vector grad;
  };
  std::vector<RowGrad> rows;
  Matrix proj_grad;
  bool has_proj = false;

  void add(ParamGroup group, int row, const Vector& grad);
};

// Gradients of the pre-hinge expression margin + s_pos - s_neg; only
// meaningful where the hinge is active. J1 touches entity rows and
// entity-space relation rows; J2 touches type rows and the projection (the
// entity side stays frozen even for the corrupted entity); J3 touches only
// the type-space relation row.
PairGradients pair_gradients_j1(const ModelParams& params, const Triple& pos, const Triple& neg);
PairGradients pair_gradients_j2(const ModelParams& params, const TypeAssertion& pos,
                                const TypeAssertion& neg);
PairGradients pair_gradients_j3(const ModelParams& params, const TypeTriple& pos,
                                const TypeTriple& neg);

// One pass over a batch: per active pair, Adagrad-update every touched row.
// Returns the summed batch loss. cfg.threads > 1 splits the batch across
// workers (updates race benignly; loss totals stay deterministic in order).
double step_j1(ModelParams& params, AdagradState& ada, const Batch<Triple>& batch,
               const TrainConfig& cfg);
double step_j2(ModelParams& params, AdagradState& ada, const Batch<TypeAssertion>& batch,
               const TrainConfig& cfg);
double step_j3(ModelParams& params, AdagradState& ada, const Batch<TypeTriple>& batch,
               const TrainConfig& cfg);

struct EpochLosses {
  int epoch = 0;
  double j1 = 0.0;
  double j2 = 0.0;
  double j3 = 0.0;
};

using EpochObserver = std::function<void(const EpochLosses&, const ModelParams&)>;

struct TrainResult {
  ModelParams params;
  std::vector<EpochLosses> history;
};

// Staged loop: per epoch run J1 over D, J2 over H, J3 over Z (shuffled,
// batched), then renormalize entity rows. Fully deterministic for a given
// seed when cfg.threads == 1. Aborts with NumericError if a stage loss goes
// non-finite.
TrainResult train(const KnowledgeBase& kb, const TrainConfig& cfg,
                  const EpochObserver& observer = {});

}  // namespace connecte
