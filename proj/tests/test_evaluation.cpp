#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "tweetembed/errors.hpp"
#include "tweetembed/evaluation.hpp"
#include "tweetembed/rng.hpp"

using namespace tweetembed;

namespace {

// Words "<class><i>" per class; each class lives near its own axis with
// small per-word jitter.
struct Clustered {
  std::vector<GoldClass> classes;
  EmbeddingTable table;
};

Clustered clustered(std::size_t n_classes, std::size_t per_class, double jitter,
                    std::uint64_t seed) {
  SplitMix64 rng(seed);
  Clustered out;
  std::vector<std::string> words;
  const auto d = static_cast<Eigen::Index>(n_classes + 2);
  RowMatrix v(static_cast<Eigen::Index>(n_classes * per_class), d);
  Eigen::Index row = 0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    GoldClass g{"k" + std::to_string(c), {}};
    for (std::size_t i = 0; i < per_class; ++i) {
      const auto w = "k" + std::to_string(c) + "w" + std::to_string(i);
      g.members.push_back(w);
      words.push_back(w);
      for (Eigen::Index j = 0; j < d; ++j) v(row, j) = jitter * rng.uniform(-1, 1);
      v(row, static_cast<Eigen::Index>(c)) += 1.0;
      ++row;
    }
    out.classes.push_back(std::move(g));
  }
  out.table = EmbeddingTable(std::move(words), std::move(v));
  return out;
}

EmbeddingTable table_of(std::vector<std::string> words, std::vector<std::vector<double>> rows) {
  RowMatrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return {std::move(words), std::move(m)};
}

RowMatrix random_rotation(Eigen::Index d, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Eigen::MatrixXd a(d, d);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.uniform(-1, 1);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  return qr.householderQ();
}

// Literal restatement of the topological rule, for comparison.
double topological_brute_force(const EmbeddingTable& t, const std::vector<GoldClass>& classes) {
  std::size_t scored = 0, passed = 0;
  for (std::size_t a = 0; a < classes.size(); ++a) {
    for (const auto& w : classes[a].members) {
      if (!t.contains(w)) continue;
      double min_same = 2, max_other = -2;
      for (std::size_t b = 0; b < classes.size(); ++b) {
        for (const auto& u : classes[b].members) {
          if (u == w || !t.contains(u)) continue;
          const double c = cosine(t.vector(w), t.vector(u));
          if (a == b) min_same = std::min(min_same, c);
          else max_other = std::max(max_other, c);
        }
      }
      if (min_same == 2 || max_other == -2) continue;
      ++scored;
      passed += min_same > max_other ? 1 : 0;
    }
  }
  return static_cast<double>(passed) / static_cast<double>(scored);
}

}  // namespace

TEST(Coverage, AllAndNone) {
  const auto t = table_of({"a", "b", "c"}, {{1}, {2}, {3}});
  const std::vector<WordPair> in = {{"a", "b"}, {"b", "c"}};
  EXPECT_DOUBLE_EQ(coverage(in, t).fraction, 1.0);
  EXPECT_EQ(coverage(in, t).covered, in);
  const std::vector<WordPair> out = {{"x", "y"}, {"a", "y"}};
  EXPECT_DOUBLE_EQ(coverage(out, t).fraction, 0.0);
  EXPECT_TRUE(coverage(out, t).covered.empty());
  EXPECT_THROW(coverage({}, t), std::invalid_argument);
}

TEST(Coverage, UnionLiesBetweenItsParts) {
  const auto t = table_of({"a", "b", "c", "d"}, {{1}, {2}, {3}, {4}});
  SplitMix64 rng(3);
  const std::vector<std::string> pool = {"a", "b", "c", "d", "x", "y", "z"};
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<WordPair> p, q;
    for (int i = 0; i < 5; ++i) p.emplace_back(pool[rng.below(7)], pool[rng.below(7)]);
    for (int i = 0; i < 8; ++i) q.emplace_back(pool[rng.below(7)], pool[rng.below(7)]);
    auto both = p;
    both.insert(both.end(), q.begin(), q.end());
    const double cp = coverage(p, t).fraction, cq = coverage(q, t).fraction;
    const double cu = coverage(both, t).fraction;
    EXPECT_GE(cu, std::min(cp, cq) - 1e-15);
    EXPECT_LE(cu, std::max(cp, cq) + 1e-15);
  }
}

TEST(Coverage, GrowsWithTheTable) {
  const auto c = clustered(3, 6, 0.1, 1);
  const auto pairs = within_class_pairs(c.classes);
  double previous = -1;
  for (std::size_t keep : {2u, 6u, 12u, 18u}) {
    std::vector<std::string> words(c.table.words().begin(), c.table.words().begin() + keep);
    const EmbeddingTable part(words, c.table.vectors().topRows(static_cast<Eigen::Index>(keep)));
    const double f = coverage(pairs, part).fraction;
    EXPECT_GE(f, previous);
    previous = f;
  }
  EXPECT_DOUBLE_EQ(previous, 1.0);
}

TEST(Pairs, WithinAndCrossCounts) {
  const std::vector<GoldClass> classes = {{"a", {"x", "y", "z"}}, {"b", {"u", "v"}}};
  EXPECT_EQ(within_class_pairs(classes).size(), 3u + 1u);
  EXPECT_EQ(cross_class_pairs(classes).size(), 6u);
}

TEST(Pairs, SharedWordNeverPairsWithItself) {
  const std::vector<GoldClass> classes = {{"a", {"x", "y"}}, {"b", {"x", "z"}}};
  const auto cross = cross_class_pairs(classes);
  for (const auto& [l, r] : cross) EXPECT_NE(l, r);
  // x-z, y-x and y-z; x-x is dropped.
  EXPECT_EQ(cross.size(), 3u);
}

TEST(Pairs, CrossCountMatchesClosedFormAndBruteForce) {
  SplitMix64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<GoldClass> classes(2 + rng.below(3));
    std::size_t total = 0;
    for (std::size_t c = 0; c < classes.size(); ++c) {
      classes[c].name = "c" + std::to_string(c);
      const auto size = 2 + rng.below(5);
      std::set<std::string> members;
      while (members.size() < size) members.insert("w" + std::to_string(rng.below(12)));
      classes[c].members.assign(members.begin(), members.end());
      total += size;
    }
    std::set<WordPair> brute;
    std::size_t within_mass = 0;
    for (std::size_t a = 0; a < classes.size(); ++a) {
      within_mass += classes[a].members.size() * classes[a].members.size();
      for (std::size_t b = 0; b < classes.size(); ++b) {
        if (a == b) continue;
        for (const auto& x : classes[a].members) {
          for (const auto& y : classes[b].members) {
            if (x != y) brute.insert(std::minmax(x, y));
          }
        }
      }
    }
    const auto cross = cross_class_pairs(classes);
    EXPECT_EQ(std::set<WordPair>(cross.begin(), cross.end()), brute);
    EXPECT_EQ(cross.size(), brute.size());
    // Ordered cross-class pairs over two, before duplicate removal.
    EXPECT_GE((total * total - within_mass) / 2, cross.size());
    std::set<std::string> distinct;
    for (const auto& c : classes) distinct.insert(c.members.begin(), c.members.end());
    if (distinct.size() == total) EXPECT_EQ((total * total - within_mass) / 2, cross.size());
  }
}

TEST(Membership, IdenticalVectorsPerClassScoreOne) {
  const std::vector<GoldClass> classes = {{"a", {"p", "q", "r"}}, {"b", {"s", "t"}}};
  const auto t = table_of({"p", "q", "r", "s", "t"}, {{1, 0}, {1, 0}, {1, 0}, {0, 2}, {0, 2}});
  for (double th : {0.5, 0.7, 0.8, 0.99}) {
    const auto r = class_membership_test(t, classes, th);
    EXPECT_EQ(r.score, 1.0);
    EXPECT_EQ(r.covered_pairs, 4u);
  }
}

TEST(Membership, OrthogonalMembersScoreZero) {
  const std::vector<GoldClass> classes = {{"a", {"p", "q", "r"}}};
  const auto t = table_of({"p", "q", "r"}, {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  EXPECT_EQ(class_membership_test(t, classes, 0.7).score, 0.0);
}

TEST(Membership, ThresholdIsStrict) {
  // cosine((1,1),(1,0)) = 0.7071...; a threshold at that value fails.
  const std::vector<GoldClass> classes = {{"a", {"p", "q"}}};
  const auto t = table_of({"p", "q"}, {{1, 1}, {1, 0}});
  const double c = std::sqrt(0.5);
  EXPECT_EQ(class_membership_test(t, classes, 0.70).passed, 1u);
  EXPECT_EQ(class_membership_test(t, classes, c).passed, 0u);
  EXPECT_THROW(class_membership_test(t, classes, 0.0), std::invalid_argument);
  EXPECT_THROW(class_membership_test(t, classes, 1.0), std::invalid_argument);
}

TEST(Membership, ThinClassIsNotedAndScoreUndefined) {
  const std::vector<GoldClass> classes = {{"a", {"p", "missing"}}};
  const auto t = table_of({"p", "q"}, {{1, 0}, {0, 1}});
  const auto r = class_membership_test(t, classes, 0.7);
  EXPECT_EQ(r.coverage, 0.0);
  EXPECT_FALSE(r.score.has_value());
  EXPECT_EQ(r.covered_pairs, 0u);
  ASSERT_FALSE(r.notes.empty());
}

TEST(Membership, ZeroVectorsAreCountedNotScored) {
  const std::vector<GoldClass> classes = {{"a", {"p", "q", "z"}}};
  const auto t = table_of({"p", "q", "z"}, {{1, 0}, {1, 0}, {0, 0}});
  const auto r = class_membership_test(t, classes, 0.7);
  EXPECT_EQ(r.total_pairs, 3u);
  EXPECT_DOUBLE_EQ(r.coverage, 1.0);
  EXPECT_EQ(r.excluded_zero_vectors, 2u);
  EXPECT_EQ(r.covered_pairs, 1u);
  EXPECT_EQ(r.score, 1.0);
}

TEST(Distinction, OrthogonalClassesAllTrueNegatives) {
  const std::vector<GoldClass> classes = {{"a", {"p", "q"}}, {"b", {"s", "t"}}};
  const auto t = table_of({"p", "q", "s", "t"}, {{1, 0}, {2, 0}, {0, 1}, {0, 3}});
  EXPECT_EQ(class_distinction_test(t, classes, 0.8).score, 1.0);
}

TEST(Distinction, IdenticalVectorsNoTrueNegatives) {
  const std::vector<GoldClass> classes = {{"a", {"p", "q"}}, {"b", {"s", "t"}}};
  const auto t = table_of({"p", "q", "s", "t"}, {{1, 1}, {1, 1}, {1, 1}, {1, 1}});
  EXPECT_EQ(class_distinction_test(t, classes, 0.7).score, 0.0);
  EXPECT_THROW(class_distinction_test(t, {classes.data(), 1}, 0.7), std::invalid_argument);
}

TEST(Equivalence, IdenticalPassesAntipodalFails) {
  const auto t = table_of({"vc", "você", "nao", "sim"}, {{1, 2}, {1, 2}, {1, 0}, {-1, 0}});
  const std::vector<EquivalencePair> same = {{"vc", "você"}};
  EXPECT_EQ(word_equivalence_test(t, same, 0.95).score, 1.0);
  const std::vector<EquivalencePair> opposite = {{"nao", "sim"}};
  EXPECT_EQ(word_equivalence_test(t, opposite, 0.85).score, 0.0);
  EXPECT_EQ(word_equivalence_test(t, opposite, 0.95).score, 0.0);
}

TEST(Topological, SeparatedClustersScoreOne) {
  const auto c = clustered(4, 5, 0.05, 2);
  const auto r = topological_consistency_test(c.table, c.classes);
  EXPECT_EQ(r.score, 1.0);
  EXPECT_EQ(r.covered_pairs, 20u);
  EXPECT_FALSE(r.threshold.has_value());
}

TEST(Topological, RandomAssignmentMatchesBruteForce) {
  SplitMix64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto c = clustered(1, 24, 1.0, 100 + trial);
    // Deal the same random vectors into three classes at random.
    std::vector<GoldClass> classes = {{"x", {}}, {"y", {}}, {"z", {}}};
    for (const auto& w : c.table.words()) classes[rng.below(3)].members.push_back(w);
    if (std::any_of(classes.begin(), classes.end(),
                    [](const GoldClass& g) { return g.members.size() < 2; })) {
      continue;
    }
    const auto r = topological_consistency_test(c.table, classes);
    ASSERT_TRUE(r.score.has_value());
    EXPECT_DOUBLE_EQ(*r.score, topological_brute_force(c.table, classes));
    EXPECT_LT(*r.score, 0.5);
  }
}

TEST(Topological, InvariantUnderScalingAndRotation) {
  const auto c = clustered(3, 6, 0.8, 6);
  const auto base = topological_consistency_test(c.table, c.classes);
  SplitMix64 rng(7);
  RowMatrix scaled = c.table.vectors();
  for (Eigen::Index r = 0; r < scaled.rows(); ++r) scaled.row(r) *= rng.uniform(0.1, 10);
  const EmbeddingTable s(c.table.words(), scaled);
  EXPECT_EQ(topological_consistency_test(s, c.classes).passed, base.passed);
  const RowMatrix rotated = c.table.vectors() * random_rotation(c.table.vectors().cols(), 8);
  const EmbeddingTable rot(c.table.words(), rotated);
  EXPECT_EQ(topological_consistency_test(rot, c.classes).passed, base.passed);
}

TEST(Topological, SkipsWordsWithoutPeers) {
  const std::vector<GoldClass> classes = {{"a", {"p", "q"}}, {"b", {"s", "gone"}}};
  const auto t = table_of({"p", "q", "s"}, {{1, 0}, {1, 0.1}, {0, 1}});
  const auto r = topological_consistency_test(t, classes);
  EXPECT_EQ(r.covered_pairs, 2u);
  EXPECT_EQ(r.score, 1.0);
  EXPECT_FALSE(r.notes.empty());
}

TEST(Suite, ScoresNeverRiseWithTheThreshold) {
  SplitMix64 rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const auto c = clustered(4, 6, rng.uniform(0.1, 2.0), 200 + trial);
    std::vector<EquivalencePair> eq;
    for (int i = 0; i < 10; ++i) {
      const auto& w = c.table.words();
      const auto a = rng.below(w.size()), b = rng.below(w.size());
      if (a != b) eq.push_back({w[a], w[b]});
    }
    const double lo = rng.uniform(0.05, 0.9);
    const double hi = rng.uniform(lo, 0.95);
    const SuiteThresholds th{{lo, hi}, {lo, hi}, {lo, hi}};
    const auto reports = run_intrinsic_suite(c.table, c.classes, eq, th);
    ASSERT_EQ(reports.size(), 7u);
    for (std::size_t i = 0; i + 1 < 6; i += 2) {
      ASSERT_EQ(reports[i].test, reports[i + 1].test);
      if (reports[i].test == kClassDistinction) {
        // True negatives need cosine below the threshold, so they can only grow.
        EXPECT_LE(*reports[i].score, *reports[i + 1].score);
      } else {
        EXPECT_GE(*reports[i].score, *reports[i + 1].score);
      }
    }
  }
}

TEST(Suite, DefaultLayout) {
  const auto c = clustered(3, 4, 0.1, 10);
  const auto reports = run_intrinsic_suite(c.table, c.classes, {});
  ASSERT_EQ(reports.size(), 5u);
  EXPECT_EQ(reports[0].test, kClassMembership);
  EXPECT_EQ(reports[0].threshold, 0.70);
  EXPECT_EQ(reports[1].threshold, 0.80);
  EXPECT_EQ(reports[2].test, kClassDistinction);
  EXPECT_EQ(reports[4].test, kTopologicalConsistency);
  EXPECT_EQ(reports[0].score, 1.0);
  EXPECT_EQ(reports[2].score, 1.0);
}

TEST(GoldFiles, ClassesAreNormalized) {
  std::stringstream s("# comment\nmonths\tJaneiro\nmonths\tfevereiro\r\nmonths\tjaneiro\n\n"
                      "smileys\t:)\nsmileys\t:D\n");
  const auto classes = read_classes(s);
  ASSERT_EQ(classes.size(), 2u);
  EXPECT_EQ(classes[0].name, "months");
  EXPECT_EQ(classes[0].members, (std::vector<std::string>{"janeiro", "fevereiro"}));
  EXPECT_EQ(classes[1].members, (std::vector<std::string>{":)", ":d"}));
}

TEST(GoldFiles, RejectsMalformedLines) {
  std::stringstream two_tokens("months\tnovo mês\n");
  EXPECT_THROW(read_classes(two_tokens), InputError);
  std::stringstream no_tab("months janeiro\n");
  EXPECT_THROW(read_classes(no_tab), InputError);
  std::stringstream same("vc\tVC\n");
  EXPECT_THROW(read_equivalences(same), InputError);
  std::stringstream ok("vc\tvocê\nq\tque\n");
  EXPECT_EQ(read_equivalences(ok).size(), 2u);
}

TEST(ReportFile, RoundTrip) {
  const auto c = clustered(3, 4, 0.5, 11);
  EvaluationReport report;
  report.manifest = {{"embeddings", "x.txt"}, {"vocab_size", 12}};
  report.reports = run_intrinsic_suite(c.table, c.classes, {});
  const std::vector<GoldClass> absent = {{"a", {"nope", "none"}}};
  report.reports.push_back(class_membership_test(c.table, absent, 0.7));
  std::stringstream s;
  write_report_json(report, s);
  const auto back = read_report_json(s);
  EXPECT_EQ(back.manifest, report.manifest);
  EXPECT_EQ(back.reports, report.reports);
}

TEST(ReportFile, ManifestOnly) {
  EvaluationReport report;
  report.manifest = {{"k", 1}};
  std::stringstream s;
  write_report_json(report, s);
  const auto back = read_report_json(s);
  EXPECT_TRUE(back.reports.empty());
  EXPECT_EQ(back.manifest, report.manifest);
  std::stringstream junk("{]");
  EXPECT_THROW(read_report_json(junk), InputError);
}

TEST(ReportTable, OneRowPerReport) {
  const auto c = clustered(3, 4, 0.1, 12);
  const auto reports = run_intrinsic_suite(c.table, c.classes, {});
  const auto text = format_report_table(std::span(reports.data(), 1));
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
  EXPECT_NE(text.find("class_membership  0.70"), std::string::npos) << text;
  const auto all = format_report_table(reports);
  EXPECT_EQ(std::count(all.begin(), all.end(), '\n'), 6);
  EXPECT_NE(all.find("n/a"), std::string::npos);
}

TEST(IntrinsicTable, PivotsRuns) {
  const auto c = clustered(3, 4, 0.1, 13);
  const std::vector<LabeledReports> rows = {{"v256", run_intrinsic_suite(c.table, c.classes, {})}};
  const auto text = format_intrinsic_table(rows);
  EXPECT_NE(text.find("Acc@0.70"), std::string::npos);
  EXPECT_NE(text.find("TN@0.80"), std::string::npos);
  EXPECT_NE(text.find("v256"), std::string::npos);
  // No equivalence pairs: those columns are dashes.
  EXPECT_NE(text.find(" -  "), std::string::npos) << text;
}
