#include "connecte/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "connecte/manifest.hpp"

namespace connecte {

using nlohmann::json;

ScoreMode parse_score_mode(const std::string& s) {
  if (s == "e2t") return ScoreMode::E2T;
  if (s == "composite") return ScoreMode::Composite;
  throw ConfigError("unknown score mode '" + s + "' (expected e2t or composite)");
}

std::string to_string(ScoreMode mode) {
  return mode == ScoreMode::E2T ? "e2t" : "composite";
}

Vector candidate_scores(const ModelParams& params, const KnowledgeBase& kb, int entity,
                        double lambda, ScoreMode mode) {
  const Vector projected = params.proj * params.entity.row(entity).transpose();
  Vector e2t = (params.type.rowwise() - projected.transpose()).rowwise().squaredNorm();
  if (mode == ScoreMode::E2T) return e2t;

  const CompositeContext ctx = make_composite_context(params, kb, entity);
  if (!ctx.has_out && !ctx.has_in) return e2t;

  const Vector type_sq = params.type.rowwise().squaredNorm();
  Vector trt = Vector::Zero(params.n_types());
  if (ctx.has_out) {
    trt += type_sq + 2.0 * (params.type * ctx.out_mean) +
           Vector::Constant(params.n_types(), ctx.out_sq_mean);
  }
  if (ctx.has_in) {
    trt += type_sq - 2.0 * (params.type * ctx.in_mean) +
           Vector::Constant(params.n_types(), ctx.in_sq_mean);
  }
  return lambda * e2t + (1.0 - lambda) * trt;
}

int rank_within(const Vector& scores, int true_type, const std::vector<char>& excluded_mask) {
  const Scalar target = scores[true_type];
  int smaller = 0;
  int ties = 0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    if (i == true_type) continue;
    if (!excluded_mask.empty() && excluded_mask[static_cast<std::size_t>(i)]) continue;
    if (scores[i] < target) {
      ++smaller;
    } else if (scores[i] == target) {
      ++ties;
    }
  }
  // Fair tie handling: midpoint rank among the tied block.
  return smaller + (ties + 2) / 2;
}

std::optional<int> rank_type(const ModelParams& params, const KnowledgeBase& kb, int entity,
                             int true_type, double lambda, ScoreMode mode, bool filtered) {
  if (entity < 0 || entity >= params.n_entities()) return std::nullopt;
  if (true_type < 0 || true_type >= params.n_types()) return std::nullopt;

  const Vector scores = candidate_scores(params, kb, entity, lambda, mode);
  std::vector<char> excluded;
  if (filtered) {
    excluded.assign(static_cast<std::size_t>(params.n_types()), 0);
    for (int t : kb.true_types_all[static_cast<std::size_t>(entity)]) {
      if (t != true_type && t < params.n_types()) excluded[static_cast<std::size_t>(t)] = 1;
    }
  }
  return rank_within(scores, true_type, excluded);
}

RankReport evaluate_typing(const ModelParams& params, const KnowledgeBase& kb,
                           const std::vector<TypeAssertion>& test, double lambda, ScoreMode mode,
                           bool filtered, int threads, std::vector<RankedPair>* per_pair) {
  if (test.empty()) throw DataError("evaluate_typing: empty test split");

  const std::size_t n = test.size();
  std::vector<int> ranks(n, -1);
  auto worker = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      auto r = rank_type(params, kb, test[i].entity, test[i].type, lambda, mode, filtered);
      if (r) ranks[i] = *r;
    }
  };
  if (threads <= 1 || n < 2 * static_cast<std::size_t>(threads)) {
    worker(0, n);
  } else {
    const std::size_t chunk =
        (n + static_cast<std::size_t>(threads) - 1) / static_cast<std::size_t>(threads);
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
      const std::size_t begin = static_cast<std::size_t>(t) * chunk;
      const std::size_t end = std::min(n, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(worker, begin, end);
    }
    for (auto& w : pool) w.join();
  }

  // Sequential aggregation over the rank vector keeps the report independent
  // of the thread count.
  RankReport report;
  double reciprocal_sum = 0;
  std::map<int, std::size_t> hit_counts = {{1, 0}, {3, 0}, {10, 0}};
  for (std::size_t i = 0; i < n; ++i) {
    if (ranks[i] < 0) {
      ++report.skipped;
      continue;
    }
    ++report.evaluated;
    reciprocal_sum += 1.0 / ranks[i];
    for (auto& [k, count] : hit_counts) {
      if (ranks[i] <= k) ++count;
    }
    if (per_pair) per_pair->push_back(RankedPair{test[i].entity, test[i].type, ranks[i]});
  }
  if (report.evaluated == 0) throw DataError("evaluate_typing: no evaluable test pairs");
  report.mrr = reciprocal_sum / double(report.evaluated);
  for (const auto& [k, count] : hit_counts) {
    report.hits_at[k] = 100.0 * double(count) / double(report.evaluated);
  }
  return report;
}

std::vector<std::pair<int, Scalar>> predict_topk(const ModelParams& params,
                                                 const KnowledgeBase& kb, int entity, int k,
                                                 double lambda, ScoreMode mode) {
  const Vector scores = candidate_scores(params, kb, entity, lambda, mode);
  std::vector<int> order(static_cast<std::size_t>(scores.size()));
  std::iota(order.begin(), order.end(), 0);
  const std::size_t take =
      std::min<std::size_t>(order.size(), static_cast<std::size_t>(std::max(k, 0)));
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    [&](int a, int b) {
                      if (scores[a] != scores[b]) return scores[a] < scores[b];
                      return a < b;
                    });
  std::vector<std::pair<int, Scalar>> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.emplace_back(order[i], scores[order[i]]);
  return out;
}

std::vector<LabeledPair> make_classification_split(const std::vector<TypeAssertion>& assertions,
                                                   const KnowledgeBase& kb, Rng& rng) {
  if (assertions.empty()) throw DataError("classification split: no assertions");
  if (kb.n_types < 2) throw DataError("classification split: need at least 2 types");

  constexpr int kMaxRetries = 1000;
  std::vector<LabeledPair> out;
  out.reserve(assertions.size() * 2);
  for (const TypeAssertion& a : assertions) {
    out.push_back(LabeledPair{a.entity, a.type, true});
    int negative = -1;
    for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
      const int t = static_cast<int>(rng.below(static_cast<std::uint64_t>(kb.n_types)));
      if (!kb.has_true_type(a.entity, t)) {
        negative = t;
        break;
      }
    }
    if (negative < 0) {
      std::ostringstream msg;
      msg << "classification split: no eligible negative type for entity " << a.entity;
      throw DataError(msg.str());
    }
    out.push_back(LabeledPair{a.entity, negative, false});
  }
  rng.shuffle(out);
  return out;
}

std::vector<double> threshold_candidates(std::vector<double> scores) {
  std::sort(scores.begin(), scores.end());
  scores.erase(std::unique(scores.begin(), scores.end()), scores.end());
  if (scores.empty()) return {};
  std::vector<double> candidates;
  candidates.reserve(scores.size() + 1);
  candidates.push_back(scores.front() - 1.0);  // below every score: all negative
  for (std::size_t i = 1; i < scores.size(); ++i) {
    candidates.push_back(0.5 * (scores[i - 1] + scores[i]));
  }
  candidates.push_back(scores.back() + 1.0);  // above every score: all positive
  return candidates;
}

double binary_accuracy(const std::vector<double>& scores, const std::vector<char>& labels,
                       double eta) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted_positive = scores[i] <= eta;
    if (predicted_positive == static_cast<bool>(labels[i])) ++correct;
  }
  return double(correct) / double(scores.size());
}

double select_threshold(const std::vector<double>& scores, const std::vector<char>& labels) {
  if (scores.empty() || scores.size() != labels.size()) {
    throw DataError("select_threshold: empty or mismatched scores/labels");
  }
  double best_eta = 0;
  double best_acc = -1;
  for (double eta : threshold_candidates(scores)) {
    const double acc = binary_accuracy(scores, labels, eta);
    if (acc > best_acc) {  // strict: keeps the smallest eta on ties
      best_acc = acc;
      best_eta = eta;
    }
  }
  return best_eta;
}

namespace {

void score_pairs(const ModelParams& params, const KnowledgeBase& kb,
                 const std::vector<LabeledPair>& pairs, double lambda, ScoreMode mode,
                 std::vector<double>& scores, std::vector<char>& labels) {
  std::unordered_map<int, CompositeContext> contexts;
  scores.reserve(pairs.size());
  labels.reserve(pairs.size());
  for (const LabeledPair& p : pairs) {
    double s;
    if (mode == ScoreMode::E2T) {
      s = score_e2t(params, p.entity, p.type);
    } else {
      auto [it, inserted] = contexts.try_emplace(p.entity);
      if (inserted) it->second = make_composite_context(params, kb, p.entity);
      s = score_composite(params, it->second, p.entity, p.type, lambda);
    }
    scores.push_back(s);
    labels.push_back(p.positive ? 1 : 0);
  }
}

void check_two_classes(const std::vector<char>& labels, const char* split) {
  const std::size_t positives =
      static_cast<std::size_t>(std::count(labels.begin(), labels.end(), char(1)));
  if (positives == 0 || positives == labels.size()) {
    throw DataError(std::string("classify: single-class ") + split + " split");
  }
}

}  // namespace

ClassifyReport classify(const ModelParams& params, const KnowledgeBase& kb,
                        const std::vector<LabeledPair>& valid_pairs,
                        const std::vector<LabeledPair>& test_pairs, double lambda,
                        ScoreMode mode) {
  if (valid_pairs.empty() || test_pairs.empty()) {
    throw DataError("classify: empty validation or test pairs");
  }
  std::vector<double> valid_scores, test_scores;
  std::vector<char> valid_labels, test_labels;
  score_pairs(params, kb, valid_pairs, lambda, mode, valid_scores, valid_labels);
  score_pairs(params, kb, test_pairs, lambda, mode, test_scores, test_labels);
  check_two_classes(valid_labels, "validation");
  check_two_classes(test_labels, "test");

  ClassifyReport report;
  report.valid_pairs = valid_pairs.size();
  report.test_pairs = test_pairs.size();
  report.threshold = select_threshold(valid_scores, valid_labels);
  report.accuracy = binary_accuracy(test_scores, test_labels, report.threshold);

  for (double eta : threshold_candidates(valid_scores)) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < test_scores.size(); ++i) {
      const bool predicted = test_scores[i] <= eta;
      const bool actual = static_cast<bool>(test_labels[i]);
      if (predicted && actual) ++tp;
      if (predicted && !actual) ++fp;
      if (!predicted && actual) ++fn;
    }
    PrPoint point;
    point.threshold = eta;
    point.precision = (tp + fp) == 0 ? 1.0 : double(tp) / double(tp + fp);
    point.recall = (tp + fn) == 0 ? 0.0 : double(tp) / double(tp + fn);
    report.pr_points.push_back(point);
    const double denom = point.precision + point.recall;
    const double f1 = denom == 0 ? 0.0 : 2.0 * point.precision * point.recall / denom;
    if (f1 > report.f1_best) {
      report.f1_best = f1;
      report.precision_at_f1 = point.precision;
      report.recall_at_f1 = point.recall;
    }
  }
  return report;
}

namespace {

std::ofstream open_report(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out.is_open()) throw DataError("cannot write " + path);
  out.precision(17);
  return out;
}

}  // namespace

void write_typing_report(const std::string& path, const RankReport& report, ScoreMode mode,
                         double lambda, bool filtered, const std::string& manifest_hash,
                         const nlohmann::json& config_echo) {
  json j;
  j["mrr"] = report.mrr;
  json hits = json::object();
  for (const auto& [k, pct] : report.hits_at) hits[std::to_string(k)] = pct;
  j["hits_at"] = hits;
  j["evaluated"] = report.evaluated;
  j["skipped"] = report.skipped;
  j["mode"] = to_string(mode);
  j["lambda"] = lambda;
  j["filtered"] = filtered;
  j["config"] = config_echo;
  j["manifest_hash"] = manifest_hash;
  j["tool_version"] = kToolVersion;
  auto out = open_report(path);
  out << j.dump(2) << '\n';
}

void write_ranks_tsv(const std::string& path, const std::vector<RankedPair>& per_pair,
                     const Vocab& entities, const Vocab& types) {
  auto out = open_report(path);
  out << "entity\ttrue_type\trank\n";
  for (const RankedPair& p : per_pair) {
    out << entities.name(p.entity) << '\t' << types.name(p.type) << '\t' << p.rank << '\n';
  }
}

void write_classify_report(const std::string& path, const ClassifyReport& report, ScoreMode mode,
                           double lambda, const std::string& manifest_hash) {
  json j;
  j["threshold"] = report.threshold;
  j["accuracy"] = report.accuracy;
  j["f1_best"] = report.f1_best;
  j["precision_at_f1"] = report.precision_at_f1;
  j["recall_at_f1"] = report.recall_at_f1;
  j["valid_pairs"] = report.valid_pairs;
  j["test_pairs"] = report.test_pairs;
  j["mode"] = to_string(mode);
  j["lambda"] = lambda;
  j["manifest_hash"] = manifest_hash;
  j["tool_version"] = kToolVersion;
  auto out = open_report(path);
  out << j.dump(2) << '\n';
}

void write_pr_curve(const std::string& path, const std::vector<PrPoint>& points) {
  auto out = open_report(path);
  out << "threshold\tprecision\trecall\n";
  for (const PrPoint& p : points) {
    out << p.threshold << '\t' << p.precision << '\t' << p.recall << '\n';
  }
}

}  // namespace connecte
