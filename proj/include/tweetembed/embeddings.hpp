#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tweetembed/dataset.hpp"
#include "tweetembed/model.hpp"

namespace tweetembed {

// Immutable word -> vector table.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  // Throws std::invalid_argument if the row count differs from the word
  // count, a word repeats, or an entry is not finite.
  EmbeddingTable(std::vector<std::string> words, RowMatrix vectors,
                 std::uint64_t manifest_hash = 0);

  std::size_t size() const { return words_.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(vectors_.cols()); }
  const std::vector<std::string>& words() const { return words_; }
  const RowMatrix& vectors() const { return vectors_; }
  std::uint64_t manifest_hash() const { return manifest_hash_; }

  std::optional<std::size_t> find(std::string_view word) const;
  bool contains(std::string_view word) const { return find(word).has_value(); }
  std::span<const double> vector(std::size_t row) const;
  // Throws std::out_of_range for an unknown word.
  std::span<const double> vector(std::string_view word) const;

 private:
  std::vector<std::string> words_;
  RowMatrix vectors_;
  std::uint64_t manifest_hash_ = 0;
  std::unordered_map<std::string, std::size_t> index_;
};

enum class EmbeddingSource {
  Output,  // columns of W_output (the default export)
  Input,   // vocabulary rows of W_input, for comparison
};

EmbeddingTable export_embeddings(const ModelParams& params, const Vocabulary& vocab,
                                 EmbeddingSource source = EmbeddingSource::Output,
                                 std::uint64_t manifest_hash = 0);

class ZeroVectorError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// u.v / (|u| |v|), clamped to [-1, 1]. Throws std::invalid_argument on a
// length mismatch and ZeroVectorError if either vector is all zeros.
double cosine(std::span<const double> u, std::span<const double> v);

struct Neighbor {
  std::string word;
  double cosine = 0;

  bool operator==(const Neighbor&) const = default;
};

// Exact top-k by cosine, excluding the query, ties by ascending word.
// Rows with a zero vector are skipped. An unknown word throws
// std::out_of_range whose message suggests table words within one edit.
std::vector<Neighbor> nearest(const EmbeddingTable& table, std::string_view word, std::size_t k);

// Code-point edit distance.
std::size_t edit_distance(std::string_view a, std::string_view b);

// "<|V|> <d>" then "word v1 ... vd" per line, six decimals.
void write_embeddings_text(const EmbeddingTable& table, std::ostream& out);
EmbeddingTable read_embeddings_text(std::istream& in);

// Little-endian binary sidecar, full precision:
//   "TWEMBVEC", u32 version (1), u64 |V|, u64 d, u64 manifest hash,
//   then per word: u32 byte length + UTF-8 bytes, then |V| x d float64 row-major.
void write_embeddings_binary(const EmbeddingTable& table, std::ostream& out);
EmbeddingTable read_embeddings_binary(std::istream& in);

}  // namespace tweetembed
