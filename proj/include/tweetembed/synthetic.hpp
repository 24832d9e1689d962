#pragma once

// Seeded synthetic corpora for tests, demos and the acceptance suite.

#include <cstdint>
#include <string>
#include <vector>

#include "tweetembed/evaluation.hpp"

namespace tweetembed {

// A template language whose context determines the class of the center word.
// Classes form a fixed cycle; a tweet starts at a random class and walks the
// cycle one step per token, so the classes at i-2, i-1, i+1, i+2 identify the
// class at i. Inside a class, words are drawn from a Zipf law; with
// probability bigram_rate the word index is instead a fixed per-class
// permutation of the previous word's index, which gives a word-level signal
// that takes much more data to learn than the class cycle.
struct ClassLanguageConfig {
  std::size_t classes = 8;
  std::size_t words_per_class = 32;
  std::size_t tweets = 10000;
  std::size_t min_length = 8;
  std::size_t max_length = 16;
  double zipf_exponent = 1.0;  // 0 = uniform inside a class
  double bigram_rate = 0.0;
  std::uint64_t seed = 1;
};

struct ClassLanguage {
  std::vector<std::string> tweets;
  std::vector<GoldClass> classes;
};

ClassLanguage make_class_language(const ClassLanguageConfig& cfg);

// Tweets over a Zipf-distributed pseudo-word vocabulary. With decorate, some
// tokens get upper case, trailing punctuation, @handles and links, which
// exercises the normalization rules.
struct ZipfCorpusConfig {
  std::size_t vocabulary = 5000;
  double exponent = 1.0;
  std::size_t tweets = 1000;
  std::size_t min_length = 3;
  std::size_t max_length = 20;
  bool decorate = false;
  std::uint64_t seed = 1;
};

std::vector<std::string> make_zipf_corpus(const ZipfCorpusConfig& cfg);

// Deterministic pseudo-word for an index ("ba", "ce", ... "bace", ...).
std::string pseudo_word(std::size_t index);

}  // namespace tweetembed
