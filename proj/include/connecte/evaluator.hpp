#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "connecte/kg.hpp"
#include "connecte/model.hpp"
#include "connecte/rng.hpp"

namespace connecte {

enum class ScoreMode { E2T, Composite };

ScoreMode parse_score_mode(const std::string& s);  // "e2t" | "composite"
std::string to_string(ScoreMode mode);

// Scores of every candidate type for one entity under the given mode.
Vector candidate_scores(const ModelParams& params, const KnowledgeBase& kb, int entity,
                        double lambda, ScoreMode mode);

// Fair deterministic rank: (# strictly smaller) + ceil((ties + 1) / 2),
// ties counted among the non-excluded candidates other than true_type.
// excluded_mask may be empty (nothing excluded); true_type itself is never
// excluded.
int rank_within(const Vector& scores, int true_type, const std::vector<char>& excluded_mask);

// Rank of true_type among all candidate types; under the filtered protocol
// every other known-true type of the entity is excluded first. nullopt if
// true_type is outside the trained vocabulary (skip signal).
std::optional<int> rank_type(const ModelParams& params, const KnowledgeBase& kb, int entity,
                             int true_type, double lambda, ScoreMode mode, bool filtered);

struct RankReport {
  double mrr = 0.0;
  std::map<int, double> hits_at;  // k -> percentage
  std::size_t evaluated = 0;
  std::size_t skipped = 0;
};

struct RankedPair {
  int entity = 0;
  int type = 0;
  int rank = 0;
};

// MRR and HITS@{1,3,10} over a test split. threads > 1 fans scoring out
// across pairs; aggregation stays order-independent so reports are
// bit-identical at any thread count.
RankReport evaluate_typing(const ModelParams& params, const KnowledgeBase& kb,
                           const std::vector<TypeAssertion>& test, double lambda, ScoreMode mode,
                           bool filtered, int threads = 1,
                           std::vector<RankedPair>* per_pair = nullptr);

// k lowest-scoring types, ascending, ties broken by type id. Truncates at
// the type-vocabulary size.
std::vector<std::pair<int, Scalar>> predict_topk(const ModelParams& params,
                                                 const KnowledgeBase& kb, int entity, int k,
                                                 double lambda, ScoreMode mode);

struct LabeledPair {
  int entity = 0;
  int type = 0;
  bool positive = false;
};

// Balanced classification split: one negative (entity, type') per positive,
// type' uniform over types not known true for the entity. Shuffled by rng.
std::vector<LabeledPair> make_classification_split(const std::vector<TypeAssertion>& assertions,
                                                   const KnowledgeBase& kb, Rng& rng);

// Threshold machinery on raw (score, label) arrays; a pair is predicted
// positive when score <= eta. Candidates are midpoints between consecutive
// distinct sorted scores plus below-min/above-max sentinels.
std::vector<double> threshold_candidates(std::vector<double> scores);
double binary_accuracy(const std::vector<double>& scores, const std::vector<char>& labels,
                       double eta);
// Accuracy-maximizing candidate, smallest eta on ties.
double select_threshold(const std::vector<double>& scores, const std::vector<char>& labels);

struct PrPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

struct ClassifyReport {
  double threshold = 0.0;  // eta selected on validation
  double accuracy = 0.0;   // test accuracy at eta
  std::vector<PrPoint> pr_points;
  double f1_best = 0.0;
  double precision_at_f1 = 0.0;
  double recall_at_f1 = 0.0;
  std::size_t valid_pairs = 0;
  std::size_t test_pairs = 0;
};

ClassifyReport classify(const ModelParams& params, const KnowledgeBase& kb,
                        const std::vector<LabeledPair>& valid_pairs,
                        const std::vector<LabeledPair>& test_pairs, double lambda, ScoreMode mode);

// Report emission (stable bytes for identical inputs).
void write_typing_report(const std::string& path, const RankReport& report, ScoreMode mode,
                         double lambda, bool filtered, const std::string& manifest_hash,
                         const nlohmann::json& config_echo = nlohmann::json::object());
void write_ranks_tsv(const std::string& path, const std::vector<RankedPair>& per_pair,
                     const Vocab& entities, const Vocab& types);
void write_classify_report(const std::string& path, const ClassifyReport& report, ScoreMode mode,
                           double lambda, const std::string& manifest_hash);
void write_pr_curve(const std::string& path, const std::vector<PrPoint>& points);

}  // namespace connecte
