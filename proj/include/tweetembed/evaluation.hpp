#pragma once

// Intrinsic tests over an embedding table: class membership, class
// distinction, word equivalence (cosine thresholds) and the threshold-free
// topological consistency check.

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "tweetembed/embeddings.hpp"

namespace tweetembed {

struct GoldClass {
  std::string name;
  std::vector<std::string> members;
};

struct EquivalencePair {
  std::string left;
  std::string right;
};

// Unordered; stored with first < second.
using WordPair = std::pair<std::string, std::string>;

struct CoverageResult {
  double fraction = 0;
  std::vector<WordPair> covered;
};

// Fraction of pairs with both words in the table. Throws
// std::invalid_argument on an empty pair list.
CoverageResult coverage(std::span<const WordPair> pairs, const EmbeddingTable& table);

// Distinct unordered pairs of distinct words sharing a class.
std::vector<WordPair> within_class_pairs(std::span<const GoldClass> classes);
// Distinct unordered pairs of distinct words drawn from two different
// classes. A word listed in both classes never pairs with itself.
std::vector<WordPair> cross_class_pairs(std::span<const GoldClass> classes);

inline constexpr std::string_view kClassMembership = "class_membership";
inline constexpr std::string_view kClassDistinction = "class_distinction";
inline constexpr std::string_view kWordEquivalence = "word_equivalence";
inline constexpr std::string_view kTopologicalConsistency = "topological_consistency";

struct TestReport {
  std::string test;
  std::optional<double> threshold;  // empty for the topological test
  double coverage = 0;
  // Gold pairs (gold words for the topological test).
  std::size_t total_pairs = 0;
  // Covered items that were actually scored (zero-vector pairs removed).
  std::size_t covered_pairs = 0;
  std::size_t passed = 0;
  // passed / covered_pairs; empty when nothing could be scored.
  std::optional<double> score;
  std::size_t excluded_zero_vectors = 0;
  std::vector<std::string> notes;

  bool operator==(const TestReport&) const = default;
};

// Pass iff cosine > threshold. Threshold must lie in (0, 1).
TestReport class_membership_test(const EmbeddingTable& table, std::span<const GoldClass> classes,
                                 double threshold);
// Pass (true negative) iff cosine < threshold. Needs at least two classes.
TestReport class_distinction_test(const EmbeddingTable& table, std::span<const GoldClass> classes,
                                  double threshold);
// Pass iff cosine > threshold.
TestReport word_equivalence_test(const EmbeddingTable& table,
                                 std::span<const EquivalencePair> pairs, double threshold);
// A covered word passes when its least similar same-class word is still more
// similar than its most similar word from any other class.
TestReport topological_consistency_test(const EmbeddingTable& table,
                                        std::span<const GoldClass> classes);

struct ThresholdPair {
  double low = 0;
  double high = 0;
};

struct SuiteThresholds {
  ThresholdPair membership{0.70, 0.80};
  ThresholdPair distinction{0.70, 0.80};
  ThresholdPair equivalence{0.85, 0.95};
};

// Membership and distinction at both thresholds, equivalence at both
// thresholds (when pairs are given) and the topological test.
std::vector<TestReport> run_intrinsic_suite(const EmbeddingTable& table,
                                            std::span<const GoldClass> classes,
                                            std::span<const EquivalencePair> pairs,
                                            const SuiteThresholds& thresholds = {});

// "class_name\tword" per line. Words go through tweet normalization and must
// stay a single token.
std::vector<GoldClass> read_classes(std::istream& in);
// "left\tright" per line.
std::vector<EquivalencePair> read_equivalences(std::istream& in);

struct EvaluationReport {
  nlohmann::json manifest = nlohmann::json::object();
  std::vector<TestReport> reports;
};

nlohmann::json to_json(const TestReport& report);
TestReport test_report_from_json(const nlohmann::json& j);

// {"manifest": {...}, "reports": [...]}, pretty printed with sorted keys.
void write_report_json(const EvaluationReport& report, std::ostream& out);
EvaluationReport read_report_json(std::istream& in);

// One aligned row per report:
//   test  threshold  coverage  pairs  scored  passed  score  zero_vectors
std::string format_report_table(std::span<const TestReport> reports);

struct LabeledReports {
  std::string label;
  std::vector<TestReport> reports;
};

// Pivot with one row per run:
//   Embeddings | CM coverage | Acc@low | Acc@high | CD coverage | TN@low |
//   TN@high | WE coverage | Acc@low | Acc@high | Topological
std::string format_intrinsic_table(std::span<const LabeledReports> rows,
                                   const SuiteThresholds& thresholds = {});

}  // namespace tweetembed
