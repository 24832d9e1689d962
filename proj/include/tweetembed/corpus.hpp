#pragma once

// Raw tweets -> tokens -> padded 5-gram windows -> counted database and
// frequency-sorted dictionary.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tweetembed {

inline constexpr std::string_view kHandleToken = "T_HANDLE";
inline constexpr std::string_view kLinkToken = "LINK";

// Window padding, outer to inner on the left and inner to outer on the right.
inline constexpr std::string_view kPadLeftOuter = "<PAD_L1>";
inline constexpr std::string_view kPadLeftInner = "<PAD_L2>";
inline constexpr std::string_view kPadRightInner = "<PAD_R1>";
inline constexpr std::string_view kPadRightOuter = "<PAD_R2>";
inline constexpr std::array<std::string_view, 4> kBoundaryTokens = {
    kPadLeftOuter, kPadLeftInner, kPadRightInner, kPadRightOuter};

bool is_boundary_token(std::string_view token);

using TokenSequence = std::vector<std::string>;

// w[2] is the center word.
using NGram = std::array<std::string, 5>;

// Lower-cases UTF-8 text one code point at a time with the Unicode simple
// case mapping (locale independent). Malformed bytes become U+FFFD.
std::string fold_case(std::string_view utf8);

// Splits on Unicode white space. "@x..." becomes T_HANDLE and
// "http://..."/"https://..." (any case) becomes LINK; everything else is
// case-folded and kept as is, punctuation included. The literal tokens
// T_HANDLE and LINK pass through unchanged so that tokenizing the joined
// output again is a no-op.
TokenSequence tokenize_tweet(std::string_view raw);

// One window per token, centered on it, over
// <PAD_L1> <PAD_L2> tokens... <PAD_R1> <PAD_R2>.
std::vector<NGram> extract_5grams(const TokenSequence& tokens);

struct NGramDatabase {
  std::map<NGram, std::uint64_t> records;
  std::uint64_t total_tweets = 0;
  std::uint64_t total_tokens = 0;

  // Commutative and associative; shard counts merged in any order agree.
  void merge(const NGramDatabase& other);
  bool empty() const { return records.empty(); }
  std::size_t distinct() const { return records.size(); }

  bool operator==(const NGramDatabase&) const = default;
};

// Accumulates windows tweet by tweet. Hash-based while counting; finish()
// produces the ordered database.
class NGramCounter {
 public:
  NGramCounter();
  ~NGramCounter();
  NGramCounter(NGramCounter&&) noexcept;
  NGramCounter& operator=(NGramCounter&&) noexcept;

  void add_tweet(std::string_view raw);
  void add_tokens(const TokenSequence& tokens);
  NGramDatabase finish() &&;

 private:
  struct State;
  std::unique_ptr<State> state_;
};

// Counts every window of every tweet. With threads > 1 the stream is cut
// into contiguous shards, counted concurrently and merged.
NGramDatabase count_ngrams(std::span<const std::string> tweets, unsigned threads = 1);

struct DictionaryEntry {
  std::string word;
  std::uint64_t frequency = 0;

  bool operator==(const DictionaryEntry&) const = default;
};

// Rank = position. Frequency descending, ties by ascending byte order.
struct Dictionary {
  std::vector<DictionaryEntry> entries;

  std::size_t size() const { return entries.size(); }
  bool operator==(const Dictionary&) const = default;
};

// Word frequency = total count of records where the word is the center, so
// every corpus occurrence is counted once.
Dictionary build_dictionary(const NGramDatabase& db);

// Header "#total_tweets=<n>\t#total_tokens=<n>", then one
// "w1\tw2\tw3\tw4\tw5\tcount" line per record in lexicographic order.
void write_database(const NGramDatabase& db, std::ostream& out);
NGramDatabase read_database(std::istream& in);

// "word\tfrequency\trank" lines, rank ascending from 0.
void write_dictionary(const Dictionary& dict, std::ostream& out);
Dictionary read_dictionary(std::istream& in);

// UTF-8 code points of a string (malformed bytes become U+FFFD).
std::u32string decode_utf8(std::string_view utf8);

}  // namespace tweetembed
