#pragma once

// Vocabulary selection, 5-gram filtering into training tuples, and seeded
// train/validation splits.

#include <array>
#include <compare>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tweetembed/corpus.hpp"

namespace tweetembed {

using TokenId = std::uint32_t;

// Words of the top-|V| dictionary prefix with ids equal to their rank. The
// four boundary tokens get the ids |V|..|V|+3 (kBoundaryTokens order); they
// may appear as context but never as a prediction target.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> words);

  std::size_t size() const { return words_.size(); }
  std::size_t context_size() const { return words_.size() + kBoundaryTokens.size(); }

  std::optional<TokenId> id_of(const std::string& word) const;
  // Like id_of, but also resolves boundary tokens to their reserved ids.
  std::optional<TokenId> context_id_of(const std::string& token) const;
  // Word or boundary token for any id below context_size().
  std::string_view token(TokenId id) const;

  const std::vector<std::string>& words() const { return words_; }
  // Fingerprint of the ordered word list.
  std::uint64_t fingerprint() const;

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, TokenId> ids_;
};

// Throws std::invalid_argument when size is zero or exceeds the dictionary.
Vocabulary select_vocabulary(const Dictionary& dict, std::size_t size);

struct TrainingTuple {
  // Positions i-2, i-1, i+1, i+2.
  std::array<TokenId, 4> context{};
  TokenId target = 0;

  auto operator<=>(const TrainingTuple&) const = default;
};

// One tuple per distinct qualifying 5-gram, in database order. A 5-gram
// qualifies when its center and all four context tokens are vocabulary
// words; with include_boundary, context tokens may also be padding.
std::vector<TrainingTuple> filter_ngrams(const NGramDatabase& db, const Vocabulary& vocab,
                                         bool include_boundary = false);

inline constexpr double kDefaultValidationRatio = 0.1;
inline constexpr std::uint64_t kDefaultSplitSeed = 13;

struct DatasetSplit {
  std::vector<TrainingTuple> train;
  std::vector<TrainingTuple> validation;
  std::uint64_t seed = kDefaultSplitSeed;
  double validation_ratio = kDefaultValidationRatio;
  double fraction = 1.0;

  bool operator==(const DatasetSplit&) const = default;
};

// Shuffles a copy of tuples with SplitMix64(derive_seed(seed, 1)) and
// Fisher-Yates. The first floor(ratio * n) tuples are validation (at least
// one, at most n - 1, when n >= 2) and the first floor(fraction * rest) of
// the remainder are train (at least one). Validation does not depend on
// fraction, and a smaller fraction yields a prefix of a larger one.
DatasetSplit split_dataset(std::span<const TrainingTuple> tuples, double validation_ratio,
                           double fraction, std::uint64_t seed);

struct DatasetFile {
  std::size_t vocab_size = 0;
  std::uint64_t vocab_fingerprint = 0;
  bool include_boundary = false;
  DatasetSplit split;

  bool operator==(const DatasetFile&) const = default;
};

// Text layout:
//   #tweetembed-dataset\tv1
//   #vocab_size=<n>\tvocab_fingerprint=<hex>\tseed=<n>\tvalidation_ratio=<r>\tfraction=<f>\tinclude_boundary=<0|1>
//   #train\t<count>
//   c1\tc2\tc4\tc5\ttarget      (count lines)
//   #validation\t<count>
//   c1\tc2\tc4\tc5\ttarget      (count lines)
void write_dataset(const DatasetFile& dataset, std::ostream& out);
DatasetFile read_dataset(std::istream& in);

}  // namespace tweetembed
