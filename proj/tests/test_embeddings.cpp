#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tweetembed/embeddings.hpp"
#include "tweetembed/errors.hpp"
#include "tweetembed/rng.hpp"

using namespace tweetembed;

namespace {

RowMatrix rows_of(std::initializer_list<std::initializer_list<double>> rows) {
  RowMatrix m(static_cast<Eigen::Index>(rows.size()),
              static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (double x : row) m(r, c++) = x;
    ++r;
  }
  return m;
}

EmbeddingTable random_table(std::size_t n, std::size_t d, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<std::string> words;
  RowMatrix v(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    words.push_back("w" + std::to_string(i));
    for (std::size_t j = 0; j < d; ++j) {
      v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rng.uniform(-1, 1);
    }
  }
  return {std::move(words), std::move(v), 42};
}

std::vector<double> as_vector(std::span<const double> s) { return {s.begin(), s.end()}; }

}  // namespace

TEST(Export, OutputColumnsBecomeRows) {
  const ModelHyper hyper{3, 2, 2, false};
  auto p = init_params(hyper, 1);
  p.weights.output << 1, 2, 3, 4, 5, 6;
  const Vocabulary vocab({"x", "y", "z"});
  const auto t = export_embeddings(p, vocab);
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t.dim(), 2u);
  EXPECT_EQ(as_vector(t.vector("x")), (std::vector<double>{1, 4}));
  EXPECT_EQ(as_vector(t.vector("y")), (std::vector<double>{2, 5}));
  EXPECT_EQ(as_vector(t.vector("z")), (std::vector<double>{3, 6}));
}

TEST(Export, ExcludesBoundaryTokens) {
  const ModelHyper hyper{5, 3, 4, false};
  const auto p = init_params(hyper, 2);
  const Vocabulary vocab({"a", "b", "c", "d", "e"});
  for (auto source : {EmbeddingSource::Output, EmbeddingSource::Input}) {
    const auto t = export_embeddings(p, vocab, source);
    EXPECT_EQ(t.size(), 5u);
    EXPECT_FALSE(t.contains("<PAD_L1>"));
  }
  const auto in = export_embeddings(p, vocab, EmbeddingSource::Input);
  EXPECT_EQ(in.dim(), 3u);
  EXPECT_EQ(in.vector("c")[1], p.weights.input(2, 1));
}

TEST(Export, RejectsMismatchedVocabulary) {
  const auto p = init_params({5, 3, 4, false}, 2);
  EXPECT_THROW(export_embeddings(p, Vocabulary({"a", "b"})), std::invalid_argument);
}

TEST(Table, RejectsInconsistentInput) {
  EXPECT_THROW(EmbeddingTable({"a"}, rows_of({{1, 0}, {0, 1}})), std::invalid_argument);
  EXPECT_THROW(EmbeddingTable({"a", "a"}, rows_of({{1, 0}, {0, 1}})), std::invalid_argument);
  EXPECT_THROW(EmbeddingTable({"a"}, rows_of({{NAN, 0}})), std::invalid_argument);
  const EmbeddingTable t({"a"}, rows_of({{1, 0}}));
  EXPECT_THROW(t.vector("b"), std::out_of_range);
}

TEST(TextFormat, RoundTripAtSixDecimals) {
  const auto t = random_table(20, 5, 3);
  std::stringstream s;
  write_embeddings_text(t, s);
  EXPECT_EQ(s.str().substr(0, 5), "20 5\n");
  const auto back = read_embeddings_text(s);
  ASSERT_EQ(back.words(), t.words());
  EXPECT_LE((back.vectors() - t.vectors()).cwiseAbs().maxCoeff(), 5e-7);
  // Writing what was read reproduces the same text.
  std::stringstream again;
  write_embeddings_text(back, again);
  std::stringstream first;
  write_embeddings_text(t, first);
  EXPECT_EQ(again.str(), first.str());
}

TEST(TextFormat, RejectsMalformedFiles) {
  std::stringstream no_header("");
  EXPECT_THROW(read_embeddings_text(no_header), InputError);
  std::stringstream short_rows("2 2\na 1 2\n");
  EXPECT_THROW(read_embeddings_text(short_rows), InputError);
  std::stringstream wrong_width("1 2\na 1\n");
  EXPECT_THROW(read_embeddings_text(wrong_width), InputError);
  std::stringstream duplicate("2 1\na 1\na 2\n");
  EXPECT_THROW(read_embeddings_text(duplicate), InputError);
}

TEST(BinaryFormat, RoundTripIsExact) {
  auto t = random_table(30, 4, 4);
  std::stringstream s;
  write_embeddings_binary(t, s);
  const auto back = read_embeddings_binary(s);
  EXPECT_EQ(back.words(), t.words());
  EXPECT_EQ(back.vectors(), t.vectors());
  EXPECT_EQ(back.manifest_hash(), 42u);
}

TEST(BinaryFormat, KeepsUtf8Words) {
  const EmbeddingTable t({"olá", ":-)", "çé"}, rows_of({{1}, {2}, {3}}));
  std::stringstream s;
  write_embeddings_binary(t, s);
  EXPECT_EQ(read_embeddings_binary(s).words(), t.words());
}

TEST(BinaryFormat, RejectsTruncationAndBadMagic) {
  std::stringstream s;
  write_embeddings_binary(random_table(3, 2, 5), s);
  const auto bytes = s.str();
  std::stringstream cut(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(read_embeddings_binary(cut), InputError);
  std::stringstream text("3 2\n");
  EXPECT_THROW(read_embeddings_binary(text), InputError);
}

TEST(Cosine, HandValues) {
  const std::vector<double> x{1, 0}, y{0, 1}, d{1, 1}, z{3, -4};
  EXPECT_DOUBLE_EQ(cosine(z, z), 1.0);
  EXPECT_DOUBLE_EQ(cosine(x, y), 0.0);
  EXPECT_NEAR(cosine(d, x), std::sqrt(2.0) / 2, 1e-15);
  EXPECT_NEAR(cosine(d, x), 0.7071, 1e-4);
  const std::vector<double> minus{-3, 4};
  EXPECT_DOUBLE_EQ(cosine(z, minus), -1.0);
}

TEST(Cosine, Errors) {
  const std::vector<double> zero{0, 0}, x{1, 0}, three{1, 0, 0};
  EXPECT_THROW(cosine(zero, x), ZeroVectorError);
  EXPECT_THROW(cosine(x, zero), ZeroVectorError);
  EXPECT_THROW(cosine(x, three), std::invalid_argument);
}

TEST(Cosine, SymmetricScaleInvariantAndBounded) {
  SplitMix64 rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> u(7), v(7);
    for (auto& x : u) x = rng.uniform(-2, 2);
    for (auto& x : v) x = rng.uniform(-2, 2);
    const double c = cosine(u, v);
    EXPECT_NEAR(c, cosine(v, u), 1e-12);
    EXPECT_GE(c, -1.0);
    EXPECT_LE(c, 1.0);
    const double alpha = rng.uniform(0.01, 100);
    auto scaled = u;
    for (auto& x : scaled) x *= alpha;
    EXPECT_NEAR(cosine(scaled, v), c, 1e-12);
  }
}

TEST(Nearest, IdenticalVectorComesFirst) {
  const EmbeddingTable t({"a", "b", "c"}, rows_of({{1, 2}, {-1, 0}, {2, 4}}));
  const auto n = nearest(t, "a", 1);
  ASSERT_EQ(n.size(), 1u);
  EXPECT_EQ(n[0].word, "c");
  EXPECT_DOUBLE_EQ(n[0].cosine, 1.0);
}

TEST(Nearest, OrthogonalTiesBreakByWord) {
  const EmbeddingTable t({"q", "m", "b"}, rows_of({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}));
  const auto n = nearest(t, "q", 2);
  ASSERT_EQ(n.size(), 2u);
  EXPECT_EQ(n[0], (Neighbor{"b", 0.0}));
  EXPECT_EQ(n[1], (Neighbor{"m", 0.0}));
}

TEST(Nearest, KBounds) {
  const auto t = random_table(10, 3, 7);
  EXPECT_EQ(nearest(t, "w0", 9).size(), 9u);
  EXPECT_THROW(nearest(t, "w0", 10), std::invalid_argument);
  EXPECT_THROW(nearest(t, "w0", 0), std::invalid_argument);
}

TEST(Nearest, UnknownWordSuggestsSpellings) {
  const EmbeddingTable t({"casa", "caso", "cosa", "lisboa"}, rows_of({{1}, {2}, {3}, {4}}));
  try {
    nearest(t, "casx", 1);
    FAIL() << "expected out_of_range";
  } catch (const std::out_of_range& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("did you mean: casa caso"), std::string::npos) << what;
    EXPECT_EQ(what.find("lisboa"), std::string::npos);
  }
}

TEST(Nearest, SkipsZeroVectors) {
  const EmbeddingTable t({"a", "b", "z"}, rows_of({{1, 0}, {1, 1}, {0, 0}}));
  const auto n = nearest(t, "a", 2);
  ASSERT_EQ(n.size(), 1u);
  EXPECT_EQ(n[0].word, "b");
  EXPECT_THROW(nearest(t, "z", 1), ZeroVectorError);
}

TEST(Nearest, MatchesBruteForce) {
  const auto t = random_table(1000, 6, 8);
  for (std::size_t q : {0u, 17u, 999u}) {
    const auto& word = t.words()[q];
    std::vector<Neighbor> all;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (i == q) continue;
      all.push_back({t.words()[i], cosine(t.vector(q), t.vector(i))});
    }
    std::sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
      return a.cosine != b.cosine ? a.cosine > b.cosine : a.word < b.word;
    });
    all.resize(25);
    EXPECT_EQ(nearest(t, word, 25), all);
  }
}

TEST(Nearest, RankingSurvivesPositiveRescaling) {
  auto t = random_table(50, 4, 9);
  RowMatrix scaled = t.vectors();
  SplitMix64 rng(10);
  for (Eigen::Index r = 0; r < scaled.rows(); ++r) scaled.row(r) *= rng.uniform(0.1, 10);
  const EmbeddingTable s(t.words(), scaled);
  const auto a = nearest(t, "w3", 10);
  const auto b = nearest(s, "w3", 10);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].word, b[i].word);
    EXPECT_NEAR(a[i].cosine, b[i].cosine, 1e-12);
  }
}

TEST(EditDistance, CountsCodePoints) {
  EXPECT_EQ(edit_distance("olá", "ola"), 1u);
  EXPECT_EQ(edit_distance("", "abc"), 3u);
  EXPECT_EQ(edit_distance("kitten", "sitting"), 3u);
  EXPECT_EQ(edit_distance("same", "same"), 0u);
}
