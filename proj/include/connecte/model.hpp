#pragma once

#include <cstdint>

#include "connecte/kg.hpp"
#include "connecte/types.hpp"

namespace connecte {

// The five trainable parameter groups. Entity-space vectors have dimension
// kappa, type-space vectors dimension ell, with ell < kappa. Each relation
// carries two embeddings, one per space; proj maps entity space into type
// space.
struct ModelParams {
  Matrix entity;      // n_entities x kappa
  Matrix type;        // n_types x ell
  Matrix rel_entity;  // n_relations x kappa
  Matrix rel_type;    // n_relations x ell
  Matrix proj;        // ell x kappa

  Eigen::Index kappa() const { return entity.cols(); }
  Eigen::Index ell() const { return type.cols(); }
  Eigen::Index n_entities() const { return entity.rows(); }
  Eigen::Index n_relations() const { return rel_entity.rows(); }
  Eigen::Index n_types() const { return type.rows(); }
};

struct TrainConfig {
  double alpha = 0.1;   // Adagrad learning rate
  double gamma1 = 2.0;  // triple-fact margin
  double gamma2 = 2.0;  // type-assertion margin
  double gamma3 = 2.0;  // type-triple margin
  int kappa = 200;
  int ell = 100;
  double lambda_weight = 0.85;  // composite trade-off
  int epochs = 800;
  int batch_size = 4096;
  std::uint64_t seed = 1;
  int neg_per_pos = 1;
  int threads = 1;  // >1 forfeits bitwise determinism
  double adagrad_eps = 1e-8;
  double init_bound = 0.0;  // 0 -> sqrt(6)/sqrt(m+n) per matrix

  void validate() const;  // throws ConfigError
};

// Uniform init on [-b, b] with b = sqrt(6)/sqrt(m + n), m the embedding
// dimension and n the vocabulary size of each matrix (for proj: m = ell,
// n = kappa). A nonzero bound_override replaces b for every matrix.
ModelParams init_params(int kappa, int ell, int n_entities, int n_relations, int n_types,
                        std::uint64_t seed, double bound_override = 0.0);

// ||e + r* - e~||^2
Scalar score_transe(const ModelParams& params, int head, int rel, int tail);
inline Scalar score_transe(const ModelParams& params, const Triple& t) {
  return score_transe(params, t.head, t.rel, t.tail);
}

// ||M e - t||^2
Scalar score_e2t(const ModelParams& params, int entity, int type);
inline Scalar score_e2t(const ModelParams& params, const TypeAssertion& a) {
  return score_e2t(params, a.entity, a.type);
}

// ||t_h + r° - t_t||^2
Scalar score_trt(const ModelParams& params, int head_type, int rel, int tail_type);
inline Scalar score_trt(const ModelParams& params, const TypeTriple& tt) {
  return score_trt(params, tt.head_type, tt.rel, tt.tail_type);
}

// Neighborhood aggregates for the composite score. For a candidate type t,
//   mean over P of ||t + r° - t_nb||^2 = ||t||^2 + 2 t.dot(out_mean) + out_sq_mean
//   mean over Q of ||t_nb + r° - t||^2 = ||t||^2 - 2 t.dot(in_mean) + in_sq_mean
// where P/Q range over (relation, neighbor-type) pairs taken per generating
// triple, so one precomputed context scores every candidate in O(ell).
struct CompositeContext {
  bool has_out = false;
  bool has_in = false;
  Vector out_mean;       // mean of (r° - t_nb) over P
  Scalar out_sq_mean = 0.0;
  Vector in_mean;        // mean of (t_nb + r°) over Q
  Scalar in_sq_mean = 0.0;
};

CompositeContext make_composite_context(const ModelParams& params, const KnowledgeBase& kb,
                                        int entity);

// lambda * S_e2t + (1 - lambda) * (mean-P term + mean-Q term). An empty side
// contributes 0; with both sides empty the score falls back to plain S_e2t
// (unweighted, so isolated entities rank exactly as E2T would rank them).
Scalar score_composite(const ModelParams& params, const CompositeContext& ctx, int entity,
                       int type, double lambda);
Scalar score_composite(const ModelParams& params, const KnowledgeBase& kb, int entity, int type,
                       double lambda);

// Rescales every entity row to unit L2 norm. A zero row is replaced by a
// fresh deterministic init draw (warning on stderr), then normalized.
void normalize_entities(ModelParams& params);

}  // namespace connecte
