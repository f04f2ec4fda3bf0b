#include <doctest.h>

#include <cmath>

#include "connecte/model.hpp"
#include "connecte/rng.hpp"
#include "test_util.hpp"

using namespace connecte;

namespace {

ModelParams random_params(std::uint64_t seed, int kappa, int ell, int n_ent, int n_rel,
                          int n_type) {
  ModelParams p = init_params(kappa, ell, n_ent, n_rel, n_type, seed);
  // Spread the entries beyond the tiny init range.
  p.entity *= 3.0;
  p.type *= 2.0;
  p.rel_entity *= 3.0;
  p.rel_type *= 2.0;
  p.proj *= 4.0;
  return p;
}

}  // namespace

TEST_CASE("init_params is deterministic given the seed") {
  ModelParams a = init_params(8, 4, 10, 3, 5, 99);
  ModelParams b = init_params(8, 4, 10, 3, 5, 99);
  CHECK(a.entity == b.entity);
  CHECK(a.type == b.type);
  CHECK(a.rel_entity == b.rel_entity);
  CHECK(a.rel_type == b.rel_type);
  CHECK(a.proj == b.proj);
  ModelParams c = init_params(8, 4, 10, 3, 5, 100);
  CHECK(a.entity != c.entity);
}

TEST_CASE("init_params shapes follow dims and vocab sizes") {
  ModelParams p = init_params(200, 100, 14951, 1345, 3851, 1);
  CHECK(p.entity.rows() == 14951);
  CHECK(p.entity.cols() == 200);
  CHECK(p.type.rows() == 3851);
  CHECK(p.type.cols() == 100);
  CHECK(p.rel_entity.rows() == 1345);
  CHECK(p.rel_type.rows() == 1345);
  CHECK(p.proj.rows() == 100);
  CHECK(p.proj.cols() == 200);
}

TEST_CASE("init_params rejects bad sizes") {
  CHECK_THROWS_AS(init_params(8, 4, 0, 3, 5, 1), ConfigError);
  CHECK_THROWS_AS(init_params(4, 8, 10, 3, 5, 1), ConfigError);  // ell >= kappa
}

TEST_CASE("init draws stay within the uniform bound and center on zero") {
  // 1000 x 1000 = 1e6 draws for the entity matrix alone.
  const int n = 1000, dim = 1000;
  ModelParams p = init_params(dim, dim / 2, n, 2, 2, 5);
  const double b = std::sqrt(6.0) / std::sqrt(double(dim + n));
  CHECK(p.entity.maxCoeff() <= b);
  CHECK(p.entity.minCoeff() >= -b);
  // Mean of 1e6 uniform[-b,b] draws: sigma = b / sqrt(3 * 1e6).
  const double sigma = b / std::sqrt(3.0 * n * dim);
  CHECK(std::abs(p.entity.mean()) < 3.0 * sigma);

  // Override replaces the derived bound (default here would be ~0.577).
  ModelParams q = init_params(8, 4, 10, 3, 5, 1, 2.0);
  CHECK(q.entity.cwiseAbs().maxCoeff() <= 2.0);
  CHECK(q.entity.cwiseAbs().maxCoeff() > std::sqrt(6.0) / std::sqrt(18.0));
}

TEST_CASE("score_transe on exact translations and plain arithmetic") {
  ModelParams p = init_params(2, 1, 2, 1, 2, 1);
  p.entity.row(0) << 1, 0;
  p.rel_entity.row(0) << 0, 1;
  p.entity.row(1) << 1, 1;
  CHECK(score_transe(p, 0, 0, 1) == doctest::Approx(0.0).epsilon(1e-15));

  p.entity.row(0) << 0, 0;
  p.rel_entity.row(0) << 0, 0;
  p.entity.row(1) << 3, 4;
  CHECK(score_transe(p, 0, 0, 1) == doctest::Approx(25.0).epsilon(1e-15));
}

TEST_CASE("score_transe matches an elementwise oracle") {
  ModelParams p = random_params(17, 5, 2, 6, 3, 4);
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    const int h = static_cast<int>(rng.below(6));
    const int r = static_cast<int>(rng.below(3));
    const int t = static_cast<int>(rng.below(6));
    double expected = 0;
    for (int j = 0; j < 5; ++j) {
      const double d = p.entity(h, j) + p.rel_entity(r, j) - p.entity(t, j);
      expected += d * d;
    }
    CHECK(score_transe(p, h, r, t) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("score_e2t degenerate and exact-projection cases") {
  ModelParams p = init_params(2, 1, 3, 1, 2, 1);
  p.proj.setZero();
  p.type.row(0).setZero();
  for (int e = 0; e < 3; ++e) CHECK(score_e2t(p, e, 0) == 0.0);

  p.proj << 1, 1;
  p.entity.row(0) << 2, 3;
  p.type.row(1) << 5;
  CHECK(score_e2t(p, 0, 1) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("score_e2t matches a dense mat-vec oracle") {
  ModelParams p = random_params(23, 6, 3, 5, 2, 4);
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    const int e = static_cast<int>(rng.below(5));
    const int t = static_cast<int>(rng.below(4));
    double expected = 0;
    for (int row = 0; row < 3; ++row) {
      double acc = 0;
      for (int col = 0; col < 6; ++col) acc += p.proj(row, col) * p.entity(e, col);
      const double d = acc - p.type(t, row);
      expected += d * d;
    }
    CHECK(score_e2t(p, e, t) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("score_trt exact translation and swap symmetry") {
  ModelParams p = init_params(3, 2, 2, 1, 3, 1);
  p.type.row(0) << 1, 2;
  p.rel_type.row(0) << 1, 1;
  p.type.row(1) << 2, 3;
  CHECK(score_trt(p, 0, 0, 1) == doctest::Approx(0.0).epsilon(1e-15));

  p.rel_type.row(0).setZero();
  CHECK(score_trt(p, 0, 0, 1) == score_trt(p, 1, 0, 0));
}

TEST_CASE("score_trt matches an elementwise oracle") {
  ModelParams p = random_params(31, 5, 3, 4, 3, 6);
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const int th = static_cast<int>(rng.below(6));
    const int r = static_cast<int>(rng.below(3));
    const int tt = static_cast<int>(rng.below(6));
    double expected = 0;
    for (int j = 0; j < 3; ++j) {
      const double d = p.type(th, j) + p.rel_type(r, j) - p.type(tt, j);
      expected += d * d;
    }
    CHECK(score_trt(p, th, r, tt) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("all scores are non-negative and zero only at exact equality") {
  ModelParams p = random_params(41, 5, 3, 6, 3, 5);
  Rng rng(4);
  for (int i = 0; i < 100; ++i) {
    CHECK(score_transe(p, static_cast<int>(rng.below(6)), static_cast<int>(rng.below(3)),
                       static_cast<int>(rng.below(6))) >= 0.0);
    CHECK(score_e2t(p, static_cast<int>(rng.below(6)), static_cast<int>(rng.below(5))) >= 0.0);
    CHECK(score_trt(p, static_cast<int>(rng.below(5)), static_cast<int>(rng.below(3)),
                    static_cast<int>(rng.below(5))) >= 0.0);
  }
}

TEST_CASE("composite score: brute-force enumeration oracle on a hand-built KB") {
  // 4 entities, 3 types, 2 relations.
  std::vector<Triple> d = {{0, 0, 1}, {0, 1, 2}, {3, 0, 0}, {2, 1, 0}, {1, 0, 2}};
  std::vector<TypeAssertion> h = {{0, 0}, {1, 1}, {2, 2}, {2, 1}, {3, 0}};
  KnowledgeBase kb = build_kb(d, h, {}, {}, {}, 4, 2, 3);
  ModelParams p = random_params(55, 4, 2, 4, 2, 3);

  const double lambda = 0.85;
  for (int e = 0; e < 4; ++e) {
    for (int t = 0; t < 3; ++t) {
      // Oracle: walk the triple list directly and average the TRT terms.
      double p_sum = 0, q_sum = 0;
      int p_n = 0, q_n = 0;
      for (const Triple& tr : d) {
        if (tr.head == e) {
          for (int nb : kb.types_of[tr.tail]) {
            p_sum += score_trt(p, t, tr.rel, nb);
            ++p_n;
          }
        }
        if (tr.tail == e) {
          for (int nb : kb.types_of[tr.head]) {
            q_sum += score_trt(p, nb, tr.rel, t);
            ++q_n;
          }
        }
      }
      double expected = score_e2t(p, e, t);
      if (p_n > 0 || q_n > 0) {
        expected = lambda * expected +
                   (1 - lambda) * ((p_n > 0 ? p_sum / p_n : 0.0) + (q_n > 0 ? q_sum / q_n : 0.0));
      }
      CHECK(score_composite(p, kb, e, t, lambda) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("composite score boundary and fallback behavior") {
  Rng rng(6);
  KnowledgeBase kb = testutil::random_kb(rng, 8, 2, 4, 20);
  ModelParams p = random_params(66, 5, 3, 8, 2, 4);

  // lambda = 1 reduces to E2T everywhere.
  for (int e = 0; e < 8; ++e) {
    for (int t = 0; t < 4; ++t) {
      CHECK(score_composite(p, kb, e, t, 1.0) ==
            doctest::Approx(score_e2t(p, e, t)).epsilon(1e-12));
    }
  }

  // Isolated entity: composite equals plain E2T regardless of lambda.
  KnowledgeBase isolated = build_kb({}, {{0, 0}}, {}, {}, {}, 2, 1, 4);
  CHECK(score_composite(p, isolated, 1, 2, 0.85) == score_e2t(p, 1, 2));
}

TEST_CASE("composite score is linear in lambda when a neighborhood exists") {
  Rng rng(8);
  KnowledgeBase kb = testutil::random_kb(rng, 6, 2, 4, 25);
  ModelParams p = random_params(77, 5, 3, 6, 2, 4);
  for (int e = 0; e < 6; ++e) {
    if (kb.out_edges[e].empty() && kb.in_edges[e].empty()) continue;
    for (int t = 0; t < 4; ++t) {
      const double at0 = score_composite(p, kb, e, t, 0.0);
      const double at1 = score_composite(p, kb, e, t, 1.0);
      for (double lambda : {0.25, 0.5, 0.85}) {
        CHECK(score_composite(p, kb, e, t, lambda) ==
              doctest::Approx(lambda * at1 + (1 - lambda) * at0).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("score_trt is invariant under a rigid rotation of type space") {
  ModelParams p = random_params(91, 6, 4, 5, 3, 6);
  // Random orthogonal matrix via QR.
  Matrix gaussian(4, 4);
  Rng rng(9);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) gaussian(i, j) = rng.uniform(-1, 1);
  }
  Eigen::HouseholderQR<Matrix> qr(gaussian);
  Matrix q = qr.householderQ();

  ModelParams rotated = p;
  rotated.type = p.type * q.transpose();
  rotated.rel_type = p.rel_type * q.transpose();

  Rng pick(10);
  for (int i = 0; i < 50; ++i) {
    const int th = static_cast<int>(pick.below(6));
    const int r = static_cast<int>(pick.below(3));
    const int tt = static_cast<int>(pick.below(6));
    CHECK(score_trt(rotated, th, r, tt) == doctest::Approx(score_trt(p, th, r, tt)).epsilon(1e-9));
  }
}

TEST_CASE("normalize_entities scales rows to unit norm") {
  ModelParams p = init_params(2, 1, 2, 1, 2, 1);
  p.entity.row(0) << 3, 4;
  p.entity.row(1) << 0.6, 0.8;
  const Matrix type_before = p.type;
  const Matrix proj_before = p.proj;

  normalize_entities(p);
  CHECK(p.entity(0, 0) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(p.entity(0, 1) == doctest::Approx(0.8).epsilon(1e-12));
  // Already-unit rows stay put; other groups untouched.
  CHECK(p.entity(1, 0) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(p.type == type_before);
  CHECK(p.proj == proj_before);
}

TEST_CASE("normalize_entities: all norms land on 1 for random matrices") {
  ModelParams p = random_params(101, 7, 3, 40, 2, 3);
  normalize_entities(p);
  for (Eigen::Index i = 0; i < p.entity.rows(); ++i) {
    CHECK(std::abs(p.entity.row(i).norm() - 1.0) < 1e-9);
  }
}

TEST_CASE("normalize_entities replaces a zero row with a usable draw") {
  ModelParams p = random_params(111, 5, 2, 4, 1, 2);
  p.entity.row(2).setZero();
  normalize_entities(p);
  CHECK(std::abs(p.entity.row(2).norm() - 1.0) < 1e-9);
}

TEST_CASE("TrainConfig validation catches each bad field") {
  TrainConfig good;
  CHECK_NOTHROW(good.validate());

  TrainConfig c = good;
  c.ell = c.kappa;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = good;
  c.lambda_weight = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = good;
  c.gamma2 = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = good;
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
