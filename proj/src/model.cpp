#include "connecte/model.hpp"

#include <cmath>
#include <iostream>
#include <sstream>

#include "connecte/rng.hpp"

namespace connecte {

void TrainConfig::validate() const {
  std::ostringstream why;
  if (alpha <= 0) why << "alpha must be > 0; ";
  if (gamma1 <= 0 || gamma2 <= 0 || gamma3 <= 0) why << "margins must be > 0; ";
  if (kappa <= 0 || ell <= 0) why << "dimensions must be > 0; ";
  if (ell >= kappa) why << "ell must be < kappa; ";
  if (lambda_weight < 0 || lambda_weight > 1) why << "lambda must be in [0, 1]; ";
  if (epochs < 0) why << "epochs must be >= 0; ";
  if (batch_size <= 0) why << "batch size must be > 0; ";
  if (neg_per_pos <= 0) why << "neg-per-pos must be > 0; ";
  if (threads <= 0) why << "threads must be > 0; ";
  if (adagrad_eps <= 0) why << "adagrad epsilon must be > 0; ";
  if (init_bound < 0) why << "init bound must be >= 0; ";
  std::string msg = why.str();
  if (!msg.empty()) throw ConfigError("invalid config: " + msg.substr(0, msg.size() - 2));
}

namespace {

double glorot_bound(int dim, int vocab) { return std::sqrt(6.0) / std::sqrt(double(dim + vocab)); }

void fill_uniform(Matrix& m, Rng rng, double bound) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      m(i, j) = rng.uniform(-bound, bound);
    }
  }
}

}  // namespace

ModelParams init_params(int kappa, int ell, int n_entities, int n_relations, int n_types,
                        std::uint64_t seed, double bound_override) {
  if (n_entities <= 0 || n_relations <= 0 || n_types <= 0) {
    throw ConfigError("init_params: vocabulary sizes must be positive");
  }
  if (kappa <= 0 || ell <= 0 || ell >= kappa) {
    throw ConfigError("init_params: need 0 < ell < kappa");
  }

  ModelParams p;
  p.entity.resize(n_entities, kappa);
  p.type.resize(n_types, ell);
  p.rel_entity.resize(n_relations, kappa);
  p.rel_type.resize(n_relations, ell);
  p.proj.resize(ell, kappa);

  auto bound = [&](int dim, int vocab) {
    return bound_override > 0 ? bound_override : glorot_bound(dim, vocab);
  };

  // One derived stream per matrix, so vocab sizes of one group do not shift
  // the draws of another.
  Rng root(seed);
  fill_uniform(p.entity, root.fork(0), bound(kappa, n_entities));
  fill_uniform(p.type, root.fork(1), bound(ell, n_types));
  fill_uniform(p.rel_entity, root.fork(2), bound(kappa, n_relations));
  fill_uniform(p.rel_type, root.fork(3), bound(ell, n_relations));
  fill_uniform(p.proj, root.fork(4), bound(ell, kappa));
  return p;
}

Scalar score_transe(const ModelParams& params, int head, int rel, int tail) {
  return (params.entity.row(head) + params.rel_entity.row(rel) - params.entity.row(tail))
      .squaredNorm();
}

Scalar score_e2t(const ModelParams& params, int entity, int type) {
  return (params.proj * params.entity.row(entity).transpose() -
          params.type.row(type).transpose())
      .squaredNorm();
}

Scalar score_trt(const ModelParams& params, int head_type, int rel, int tail_type) {
  return (params.type.row(head_type) + params.rel_type.row(rel) - params.type.row(tail_type))
      .squaredNorm();
}

CompositeContext make_composite_context(const ModelParams& params, const KnowledgeBase& kb,
                                        int entity) {
  CompositeContext ctx;
  const Eigen::Index ell = params.ell();
  Vector out_sum = Vector::Zero(ell);
  Vector in_sum = Vector::Zero(ell);
  Scalar out_sq = 0, in_sq = 0;
  std::size_t n_out = 0, n_in = 0;

  for (const auto& [rel, tail] : kb.out_edges[static_cast<std::size_t>(entity)]) {
    for (int nb_type : kb.types_of[static_cast<std::size_t>(tail)]) {
      Vector a = params.rel_type.row(rel).transpose() - params.type.row(nb_type).transpose();
      out_sum += a;
      out_sq += a.squaredNorm();
      ++n_out;
    }
  }
  for (const auto& [rel, head] : kb.in_edges[static_cast<std::size_t>(entity)]) {
    for (int nb_type : kb.types_of[static_cast<std::size_t>(head)]) {
      Vector b = params.type.row(nb_type).transpose() + params.rel_type.row(rel).transpose();
      in_sum += b;
      in_sq += b.squaredNorm();
      ++n_in;
    }
  }

  if (n_out > 0) {
    ctx.has_out = true;
    ctx.out_mean = out_sum / double(n_out);
    ctx.out_sq_mean = out_sq / double(n_out);
  }
  if (n_in > 0) {
    ctx.has_in = true;
    ctx.in_mean = in_sum / double(n_in);
    ctx.in_sq_mean = in_sq / double(n_in);
  }
  return ctx;
}

Scalar score_composite(const ModelParams& params, const CompositeContext& ctx, int entity,
                       int type, double lambda) {
  const Scalar e2t = score_e2t(params, entity, type);
  if (!ctx.has_out && !ctx.has_in) return e2t;  // isolated entity: plain E2T

  const auto t = params.type.row(type);
  const Scalar t_sq = t.squaredNorm();
  Scalar trt = 0;
  if (ctx.has_out) trt += t_sq + 2.0 * t.dot(ctx.out_mean) + ctx.out_sq_mean;
  if (ctx.has_in) trt += t_sq - 2.0 * t.dot(ctx.in_mean) + ctx.in_sq_mean;
  return lambda * e2t + (1.0 - lambda) * trt;
}

Scalar score_composite(const ModelParams& params, const KnowledgeBase& kb, int entity, int type,
                       double lambda) {
  return score_composite(params, make_composite_context(params, kb, entity), entity, type,
                         lambda);
}

void normalize_entities(ModelParams& params) {
  const double fallback_bound =
      std::sqrt(6.0) / std::sqrt(double(params.kappa() + params.n_entities()));
  for (Eigen::Index i = 0; i < params.entity.rows(); ++i) {
    double norm = params.entity.row(i).norm();
    if (norm == 0.0) {
      std::cerr << "warning: entity row " << i << " is zero, reinitializing\n";
      Rng rng(0xC0FFEEULL ^ static_cast<std::uint64_t>(i));
      for (Eigen::Index j = 0; j < params.entity.cols(); ++j) {
        params.entity(i, j) = rng.uniform(-fallback_bound, fallback_bound);
      }
      norm = params.entity.row(i).norm();
    }
    params.entity.row(i) /= norm;
  }
}

}  // namespace connecte
