#include "tweetembed/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>

#include "text_util.hpp"
#include "tweetembed/corpus.hpp"
#include "tweetembed/errors.hpp"

namespace tweetembed {

namespace {

WordPair ordered(const std::string& a, const std::string& b) {
  return a < b ? WordPair{a, b} : WordPair{b, a};
}

void check_threshold(double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw std::invalid_argument("cosine threshold must lie in (0, 1), got " +
                                detail::format_double(threshold));
  }
}

template <typename Pass>
TestReport score_pairs(std::string_view test, double threshold, std::span<const WordPair> pairs,
                       const EmbeddingTable& table, Pass pass) {
  TestReport r;
  r.test = std::string(test);
  r.threshold = threshold;
  r.total_pairs = pairs.size();
  if (pairs.empty()) {
    r.notes.push_back("no gold pairs");
    return r;
  }
  const auto cov = coverage(pairs, table);
  r.coverage = cov.fraction;
  for (const auto& [a, b] : cov.covered) {
    double c = 0;
    try {
      c = cosine(table.vector(a), table.vector(b));
    } catch (const ZeroVectorError&) {
      ++r.excluded_zero_vectors;
      continue;
    }
    ++r.covered_pairs;
    if (pass(c)) ++r.passed;
  }
  if (r.covered_pairs > 0) {
    r.score = static_cast<double>(r.passed) / static_cast<double>(r.covered_pairs);
  } else {
    r.notes.push_back("no covered pairs; score undefined");
  }
  if (r.excluded_zero_vectors > 0) {
    r.notes.push_back(std::to_string(r.excluded_zero_vectors) + " pairs excluded (zero vector)");
  }
  return r;
}

void note_thin_classes(TestReport& r, std::span<const GoldClass> classes,
                       const EmbeddingTable& table) {
  for (const auto& c : classes) {
    std::size_t covered = 0;
    for (const auto& w : c.members) covered += table.contains(w) ? 1 : 0;
    if (covered < 2) {
      r.notes.push_back("class '" + c.name + "' has " + std::to_string(covered) +
                        " covered members and contributes no pairs");
    }
  }
}

std::string normalize_gold_word(std::string_view raw, std::string_view ctx) {
  const auto tokens = tokenize_tweet(raw);
  if (tokens.size() != 1) {
    throw InputError(std::string(ctx) + ": gold word '" + std::string(raw) +
                     "' must be exactly one token");
  }
  return tokens.front();
}

std::string percent(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * *v);
  return buf;
}

std::string percent(double v) { return percent(std::optional<double>(v)); }

std::string join_aligned(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    width.resize(std::max(width.size(), row.size()));
    for (std::size_t c = 0; c < row.size(); ++c) {
      width[c] = std::max(width[c], decode_utf8(row[c]).size());
    }
  }
  std::string out;
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) line += "  ";
      line += row[c];
      if (c + 1 < row.size()) line.append(width[c] - decode_utf8(row[c]).size(), ' ');
    }
    out += line + '\n';
  }
  return out;
}

}  // namespace

CoverageResult coverage(std::span<const WordPair> pairs, const EmbeddingTable& table) {
  if (pairs.empty()) throw std::invalid_argument("coverage of an empty pair list");
  CoverageResult r;
  for (const auto& p : pairs) {
    if (table.contains(p.first) && table.contains(p.second)) r.covered.push_back(p);
  }
  r.fraction = static_cast<double>(r.covered.size()) / static_cast<double>(pairs.size());
  return r;
}

std::vector<WordPair> within_class_pairs(std::span<const GoldClass> classes) {
  std::set<WordPair> pairs;
  for (const auto& c : classes) {
    for (std::size_t i = 0; i < c.members.size(); ++i) {
      for (std::size_t j = i + 1; j < c.members.size(); ++j) {
        if (c.members[i] != c.members[j]) pairs.insert(ordered(c.members[i], c.members[j]));
      }
    }
  }
  return {pairs.begin(), pairs.end()};
}

std::vector<WordPair> cross_class_pairs(std::span<const GoldClass> classes) {
  std::set<WordPair> pairs;
  for (std::size_t a = 0; a < classes.size(); ++a) {
    for (std::size_t b = a + 1; b < classes.size(); ++b) {
      for (const auto& x : classes[a].members) {
        for (const auto& y : classes[b].members) {
          if (x != y) pairs.insert(ordered(x, y));
        }
      }
    }
  }
  return {pairs.begin(), pairs.end()};
}

TestReport class_membership_test(const EmbeddingTable& table, std::span<const GoldClass> classes,
                                 double threshold) {
  check_threshold(threshold);
  const auto pairs = within_class_pairs(classes);
  auto r = score_pairs(kClassMembership, threshold, pairs, table,
                       [threshold](double c) { return c > threshold; });
  note_thin_classes(r, classes, table);
  return r;
}

TestReport class_distinction_test(const EmbeddingTable& table, std::span<const GoldClass> classes,
                                  double threshold) {
  check_threshold(threshold);
  if (classes.size() < 2) throw std::invalid_argument("class distinction needs two classes");
  const auto pairs = cross_class_pairs(classes);
  return score_pairs(kClassDistinction, threshold, pairs, table,
                     [threshold](double c) { return c < threshold; });
}

TestReport word_equivalence_test(const EmbeddingTable& table,
                                 std::span<const EquivalencePair> pairs, double threshold) {
  check_threshold(threshold);
  std::vector<WordPair> word_pairs;
  word_pairs.reserve(pairs.size());
  for (const auto& p : pairs) word_pairs.emplace_back(p.left, p.right);
  return score_pairs(kWordEquivalence, threshold, word_pairs, table,
                     [threshold](double c) { return c > threshold; });
}

TestReport topological_consistency_test(const EmbeddingTable& table,
                                        std::span<const GoldClass> classes) {
  if (classes.size() < 2) throw std::invalid_argument("topological test needs two classes");
  TestReport r;
  r.test = std::string(kTopologicalConsistency);

  // word -> classes containing it
  std::map<std::string, std::set<std::size_t>> membership;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    for (const auto& w : classes[c].members) membership[w].insert(c);
  }
  r.total_pairs = membership.size();

  std::vector<std::string> usable;
  std::size_t covered = 0;
  for (const auto& [w, cls] : membership) {
    const auto row = table.find(w);
    if (!row) continue;
    ++covered;
    const auto v = table.vector(*row);
    if (std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; })) {
      ++r.excluded_zero_vectors;
      continue;
    }
    usable.push_back(w);
  }
  r.coverage = membership.empty() ? 0.0
                                  : static_cast<double>(covered) /
                                        static_cast<double>(membership.size());

  std::size_t skipped = 0;
  for (const auto& w : usable) {
    const auto& mine = membership.at(w);
    double min_same = std::numeric_limits<double>::infinity();
    double max_other = -std::numeric_limits<double>::infinity();
    bool any_same = false;
    bool any_other = false;
    const auto wv = table.vector(w);
    for (const auto& u : usable) {
      if (u == w) continue;
      const auto& theirs = membership.at(u);
      const bool shares = std::any_of(theirs.begin(), theirs.end(),
                                      [&](std::size_t c) { return mine.contains(c); });
      const double c = cosine(wv, table.vector(u));
      if (shares) {
        min_same = std::min(min_same, c);
        any_same = true;
      } else {
        max_other = std::max(max_other, c);
        any_other = true;
      }
    }
    if (!any_same || !any_other) {
      ++skipped;
      continue;
    }
    ++r.covered_pairs;
    if (min_same > max_other) ++r.passed;
  }
  if (skipped > 0) {
    r.notes.push_back(std::to_string(skipped) +
                      " words skipped (no covered same-class or other-class word)");
  }
  if (r.covered_pairs > 0) {
    r.score = static_cast<double>(r.passed) / static_cast<double>(r.covered_pairs);
  } else {
    r.notes.push_back("no scorable words; score undefined");
  }
  return r;
}

std::vector<TestReport> run_intrinsic_suite(const EmbeddingTable& table,
                                            std::span<const GoldClass> classes,
                                            std::span<const EquivalencePair> pairs,
                                            const SuiteThresholds& t) {
  std::vector<TestReport> out;
  if (!classes.empty()) {
    out.push_back(class_membership_test(table, classes, t.membership.low));
    out.push_back(class_membership_test(table, classes, t.membership.high));
  }
  if (classes.size() >= 2) {
    out.push_back(class_distinction_test(table, classes, t.distinction.low));
    out.push_back(class_distinction_test(table, classes, t.distinction.high));
  }
  if (!pairs.empty()) {
    out.push_back(word_equivalence_test(table, pairs, t.equivalence.low));
    out.push_back(word_equivalence_test(table, pairs, t.equivalence.high));
  }
  if (classes.size() >= 2) out.push_back(topological_consistency_test(table, classes));
  return out;
}

std::vector<GoldClass> read_classes(std::istream& in) {
  std::vector<GoldClass> classes;
  std::map<std::string, std::size_t> index;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto trimmed = detail::strip_cr(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const auto ctx = detail::where("class file", line_no);
    const auto f = detail::split_tabs(trimmed);
    if (f.size() != 2 || f[0].empty()) throw InputError(ctx + ": expected 'class<TAB>word'");
    const std::string name(f[0]);
    auto [it, fresh] = index.emplace(name, classes.size());
    if (fresh) classes.push_back({name, {}});
    auto& members = classes[it->second].members;
    auto word = normalize_gold_word(f[1], ctx);
    if (std::find(members.begin(), members.end(), word) == members.end()) {
      members.push_back(std::move(word));
    }
  }
  return classes;
}

std::vector<EquivalencePair> read_equivalences(std::istream& in) {
  std::vector<EquivalencePair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto trimmed = detail::strip_cr(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const auto ctx = detail::where("equivalence file", line_no);
    const auto f = detail::split_tabs(trimmed);
    if (f.size() != 2) throw InputError(ctx + ": expected 'left<TAB>right'");
    EquivalencePair p{normalize_gold_word(f[0], ctx), normalize_gold_word(f[1], ctx)};
    if (p.left == p.right) throw InputError(ctx + ": equivalence pair of identical words");
    pairs.push_back(std::move(p));
  }
  return pairs;
}

nlohmann::json to_json(const TestReport& r) {
  nlohmann::json j;
  j["test"] = r.test;
  j["threshold"] = r.threshold ? nlohmann::json(*r.threshold) : nlohmann::json("n/a");
  j["coverage"] = r.coverage;
  j["total_pairs"] = r.total_pairs;
  j["covered_pairs"] = r.covered_pairs;
  j["passed"] = r.passed;
  j["score"] = r.score ? nlohmann::json(*r.score) : nlohmann::json(nullptr);
  j["excluded_zero_vectors"] = r.excluded_zero_vectors;
  j["notes"] = r.notes;
  return j;
}

TestReport test_report_from_json(const nlohmann::json& j) {
  try {
    TestReport r;
    r.test = j.at("test").get<std::string>();
    if (j.at("threshold").is_number()) r.threshold = j.at("threshold").get<double>();
    r.coverage = j.at("coverage").get<double>();
    r.total_pairs = j.at("total_pairs").get<std::size_t>();
    r.covered_pairs = j.at("covered_pairs").get<std::size_t>();
    r.passed = j.at("passed").get<std::size_t>();
    if (!j.at("score").is_null()) r.score = j.at("score").get<double>();
    r.excluded_zero_vectors = j.at("excluded_zero_vectors").get<std::size_t>();
    r.notes = j.at("notes").get<std::vector<std::string>>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed test report: ") + e.what());
  }
}

void write_report_json(const EvaluationReport& report, std::ostream& out) {
  nlohmann::json j;
  j["manifest"] = report.manifest;
  j["reports"] = nlohmann::json::array();
  for (const auto& r : report.reports) j["reports"].push_back(to_json(r));
  out << j.dump(2) << '\n';
}

EvaluationReport read_report_json(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("report is not valid JSON: ") + e.what());
  }
  EvaluationReport report;
  if (!j.contains("manifest") || !j.contains("reports") || !j["reports"].is_array()) {
    throw InputError("report must hold 'manifest' and 'reports'");
  }
  report.manifest = j["manifest"];
  for (const auto& r : j["reports"]) report.reports.push_back(test_report_from_json(r));
  return report;
}

std::string format_report_table(std::span<const TestReport> reports) {
  std::vector<std::vector<std::string>> rows = {
      {"test", "threshold", "coverage", "pairs", "scored", "passed", "score", "zero_vectors"}};
  for (const auto& r : reports) {
    char threshold[32] = "n/a";
    if (r.threshold) std::snprintf(threshold, sizeof threshold, "%.2f", *r.threshold);
    rows.push_back({r.test, threshold, percent(r.coverage), std::to_string(r.total_pairs),
                    std::to_string(r.covered_pairs), std::to_string(r.passed), percent(r.score),
                    std::to_string(r.excluded_zero_vectors)});
  }
  return join_aligned(rows);
}

std::string format_intrinsic_table(std::span<const LabeledReports> rows,
                                   const SuiteThresholds& t) {
  const auto at = [](double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "@%.2f", x);
    return std::string(buf);
  };
  std::vector<std::vector<std::string>> table = {
      {"Embeddings", "CM coverage", "Acc" + at(t.membership.low), "Acc" + at(t.membership.high),
       "CD coverage", "TN" + at(t.distinction.low), "TN" + at(t.distinction.high), "WE coverage",
       "Acc" + at(t.equivalence.low), "Acc" + at(t.equivalence.high), "Topological"}};
  for (const auto& row : rows) {
    const auto find = [&](std::string_view test,
                          std::optional<double> threshold) -> const TestReport* {
      for (const auto& r : row.reports) {
        if (r.test == test && r.threshold == threshold) return &r;
      }
      return nullptr;
    };
    const auto cov = [&](const TestReport* r) { return r ? percent(r->coverage) : "-"; };
    const auto score = [&](const TestReport* r) { return r ? percent(r->score) : "-"; };
    const auto* cm_lo = find(kClassMembership, t.membership.low);
    const auto* cm_hi = find(kClassMembership, t.membership.high);
    const auto* cd_lo = find(kClassDistinction, t.distinction.low);
    const auto* cd_hi = find(kClassDistinction, t.distinction.high);
    const auto* we_lo = find(kWordEquivalence, t.equivalence.low);
    const auto* we_hi = find(kWordEquivalence, t.equivalence.high);
    const auto* topo = find(kTopologicalConsistency, std::nullopt);
    table.push_back({row.label, cov(cm_lo), score(cm_lo), score(cm_hi), cov(cd_lo), score(cd_lo),
                     score(cd_hi), cov(we_lo), score(we_lo), score(we_hi), score(topo)});
  }
  return join_aligned(table);
}

}  // namespace tweetembed
