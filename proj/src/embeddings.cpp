#include "tweetembed/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "binary_io.hpp"
#include "text_util.hpp"
#include "tweetembed/corpus.hpp"
#include "tweetembed/errors.hpp"

namespace tweetembed {

namespace {

constexpr std::string_view kBinaryMagic = "TWEMBVEC";
constexpr std::uint32_t kBinaryVersion = 1;
constexpr std::uint64_t kMaxRows = std::uint64_t{1} << 31;

double norm(std::span<const double> v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

EmbeddingTable::EmbeddingTable(std::vector<std::string> words, RowMatrix vectors,
                               std::uint64_t manifest_hash)
    : words_(std::move(words)), vectors_(std::move(vectors)), manifest_hash_(manifest_hash) {
  if (static_cast<std::size_t>(vectors_.rows()) != words_.size()) {
    throw std::invalid_argument("embedding table has " + std::to_string(words_.size()) +
                                " words but " + std::to_string(vectors_.rows()) + " vectors");
  }
  if (!vectors_.allFinite()) throw std::invalid_argument("embedding table has non-finite entries");
  index_.reserve(words_.size());
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (!index_.emplace(words_[i], i).second) {
      throw std::invalid_argument("duplicate embedding word '" + words_[i] + "'");
    }
  }
}

std::optional<std::size_t> EmbeddingTable::find(std::string_view word) const {
  const auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::span<const double> EmbeddingTable::vector(std::size_t row) const {
  return {vectors_.data() + row * dim(), dim()};
}

std::span<const double> EmbeddingTable::vector(std::string_view word) const {
  const auto row = find(word);
  if (!row) throw std::out_of_range("word '" + std::string(word) + "' not in embedding table");
  return vector(*row);
}

EmbeddingTable export_embeddings(const ModelParams& params, const Vocabulary& vocab,
                                 EmbeddingSource source, std::uint64_t manifest_hash) {
  if (vocab.size() != params.hyper.vocab_size) {
    throw std::invalid_argument("vocabulary of " + std::to_string(vocab.size()) +
                                " words does not match a model with |V| = " +
                                std::to_string(params.hyper.vocab_size));
  }
  const auto v = static_cast<Eigen::Index>(vocab.size());
  RowMatrix vectors;
  if (source == EmbeddingSource::Output) {
    vectors = params.weights.output.transpose();
  } else {
    vectors = params.weights.input.topRows(v);
  }
  return EmbeddingTable(vocab.words(), std::move(vectors), manifest_hash);
}

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw std::invalid_argument("cosine of vectors with lengths " + std::to_string(u.size()) +
                                " and " + std::to_string(v.size()));
  }
  const double nu = norm(u);
  const double nv = norm(v);
  if (nu == 0 || nv == 0) throw ZeroVectorError("cosine of a zero vector");
  double dot = 0;
  for (std::size_t i = 0; i < u.size(); ++i) dot += u[i] * v[i];
  return std::clamp(dot / (nu * nv), -1.0, 1.0);
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  const auto x = decode_utf8(a);
  const auto y = decode_utf8(b);
  std::vector<std::size_t> prev(y.size() + 1), cur(y.size() + 1);
  for (std::size_t j = 0; j <= y.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= x.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= y.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x[i - 1] == y[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[y.size()];
}

std::vector<Neighbor> nearest(const EmbeddingTable& table, std::string_view word, std::size_t k) {
  const auto query = table.find(word);
  if (!query) {
    std::string message = "word '" + std::string(word) + "' not in embedding table";
    std::vector<std::string> close;
    for (const auto& w : table.words()) {
      if (edit_distance(w, word) <= 1) close.push_back(w);
    }
    std::sort(close.begin(), close.end());
    if (!close.empty()) {
      message += "; did you mean:";
      for (const auto& w : close) message += " " + w;
    }
    throw std::out_of_range(message);
  }
  if (k < 1 || k >= table.size()) {
    throw std::invalid_argument("k must lie in [1, " + std::to_string(table.size()) + ")");
  }
  const auto q = table.vector(*query);
  std::vector<Neighbor> all;
  all.reserve(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (i == *query) continue;
    try {
      all.push_back({table.words()[i], cosine(q, table.vector(i))});
    } catch (const ZeroVectorError&) {
      if (norm(q) == 0) throw;
    }
  }
  const auto better = [](const Neighbor& a, const Neighbor& b) {
    if (a.cosine != b.cosine) return a.cosine > b.cosine;
    return a.word < b.word;
  };
  const auto keep = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(), better);
  all.resize(keep);
  return all;
}

void write_embeddings_text(const EmbeddingTable& table, std::ostream& out) {
  out << table.size() << ' ' << table.dim() << '\n';
  char buf[64];
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << table.words()[i];
    for (double x : table.vector(i)) {
      std::snprintf(buf, sizeof buf, " %.6f", x);
      out << buf;
    }
    out << '\n';
  }
}

EmbeddingTable read_embeddings_text(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("embedding file: missing header");
  std::size_t rows = 0;
  std::size_t dim = 0;
  {
    const auto f = detail::split_on(detail::strip_cr(line), ' ');
    if (f.size() != 2) throw InputError("embedding file: header must be '<rows> <dim>'");
    rows = detail::parse_u64(f[0], "embedding header");
    dim = detail::parse_u64(f[1], "embedding header");
    if (rows > kMaxRows || dim > kMaxRows) throw InputError("embedding file: header too large");
  }
  std::vector<std::string> words;
  words.reserve(rows);
  RowMatrix vectors(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dim));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!std::getline(in, line)) throw InputError("embedding file: fewer rows than declared");
    const auto ctx = detail::where("embedding file", r + 2);
    const auto f = detail::split_on(detail::strip_cr(line), ' ');
    if (f.size() != dim + 1) throw InputError(ctx + ": expected word and " + std::to_string(dim) + " values");
    words.emplace_back(f[0]);
    for (std::size_t c = 0; c < dim; ++c) {
      vectors(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          detail::parse_double(f[c + 1], ctx);
    }
  }
  try {
    return EmbeddingTable(std::move(words), std::move(vectors));
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("embedding file: ") + e.what());
  }
}

void write_embeddings_binary(const EmbeddingTable& table, std::ostream& out) {
  out.write(kBinaryMagic.data(), static_cast<std::streamsize>(kBinaryMagic.size()));
  detail::put_u32(out, kBinaryVersion);
  detail::put_u64(out, table.size());
  detail::put_u64(out, table.dim());
  detail::put_u64(out, table.manifest_hash());
  for (const auto& w : table.words()) {
    detail::put_u32(out, static_cast<std::uint32_t>(w.size()));
    out.write(w.data(), static_cast<std::streamsize>(w.size()));
  }
  for (std::size_t i = 0; i < table.size(); ++i) {
    for (double x : table.vector(i)) detail::put_f64(out, x);
  }
}

EmbeddingTable read_embeddings_binary(std::istream& in) {
  char magic[8];
  detail::get_bytes(in, magic, sizeof magic, "embedding binary");
  if (std::string_view(magic, sizeof magic) != kBinaryMagic) {
    throw InputError("not a binary embedding file");
  }
  if (detail::get_u32(in, "embedding binary") != kBinaryVersion) {
    throw InputError("unsupported binary embedding version");
  }
  const auto rows = detail::get_u64(in, "embedding binary");
  const auto dim = detail::get_u64(in, "embedding binary");
  const auto hash = detail::get_u64(in, "embedding binary");
  if (rows > kMaxRows || dim > kMaxRows) throw InputError("binary embedding header too large");
  std::vector<std::string> words(rows);
  for (auto& w : words) {
    const auto len = detail::get_u32(in, "embedding binary");
    w.resize(len);
    detail::get_bytes(in, w.data(), len, "embedding binary");
  }
  RowMatrix vectors(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dim));
  for (Eigen::Index r = 0; r < vectors.rows(); ++r) {
    for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
      vectors(r, c) = detail::get_f64(in, "embedding binary");
    }
  }
  try {
    return EmbeddingTable(std::move(words), std::move(vectors), hash);
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("binary embedding file: ") + e.what());
  }
}

}  // namespace tweetembed
