#include "tweetembed/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string_view>

#include "tweetembed/rng.hpp"

namespace tweetembed {

namespace {

class ZipfSampler {
 public:
  ZipfSampler(std::size_t n, double exponent) : cdf_(n) {
    double total = 0;
    for (std::size_t k = 0; k < n; ++k) {
      total += 1.0 / std::pow(static_cast<double>(k + 1), exponent);
      cdf_[k] = total;
    }
    for (double& c : cdf_) c /= total;
  }

  std::size_t operator()(SplitMix64& rng) const {
    const double u = rng.uniform();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
  }

 private:
  std::vector<double> cdf_;
};

constexpr std::array<std::string_view, 20> kSyllables = {
    "ba", "ce", "di", "fo", "gu", "la", "me", "ni", "po", "ru",
    "sa", "te", "vi", "zo", "ma", "ne", "lu", "ri", "to", "ca"};

std::size_t length_between(SplitMix64& rng, std::size_t lo, std::size_t hi) {
  return lo + rng.below(hi - lo + 1);
}

}  // namespace

std::string pseudo_word(std::size_t index) {
  std::string word;
  do {
    word += kSyllables[index % kSyllables.size()];
    index /= kSyllables.size();
  } while (index > 0);
  return word;
}

ClassLanguage make_class_language(const ClassLanguageConfig& cfg) {
  if (cfg.classes < 5) throw std::invalid_argument("class language needs at least 5 classes");
  if (cfg.words_per_class < 1 || cfg.min_length < 1 || cfg.max_length < cfg.min_length) {
    throw std::invalid_argument("invalid class language configuration");
  }
  ClassLanguage lang;
  for (std::size_t c = 0; c < cfg.classes; ++c) {
    GoldClass gc;
    gc.name = "class" + std::to_string(c);
    for (std::size_t w = 0; w < cfg.words_per_class; ++w) {
      gc.members.push_back("c" + std::to_string(c) + "w" + std::to_string(w));
    }
    lang.classes.push_back(std::move(gc));
  }

  SplitMix64 rng(derive_seed(cfg.seed, 7));
  // Cycle order of the classes.
  std::vector<std::size_t> cycle(cfg.classes);
  for (std::size_t c = 0; c < cfg.classes; ++c) cycle[c] = c;
  shuffle(std::span<std::size_t>(cycle), rng);

  // follow[c][j]: index in class c that follows index j of the previous class.
  std::vector<std::vector<std::size_t>> follow(cfg.classes,
                                               std::vector<std::size_t>(cfg.words_per_class));
  for (auto& f : follow) {
    for (std::size_t j = 0; j < f.size(); ++j) f[j] = j;
    shuffle(std::span<std::size_t>(f), rng);
  }

  const ZipfSampler within(cfg.words_per_class, cfg.zipf_exponent);
  lang.tweets.reserve(cfg.tweets);
  for (std::size_t t = 0; t < cfg.tweets; ++t) {
    const std::size_t length = length_between(rng, cfg.min_length, cfg.max_length);
    std::size_t pos = rng.below(cfg.classes);
    std::string tweet;
    std::size_t previous = 0;
    for (std::size_t i = 0; i < length; ++i) {
      const std::size_t c = cycle[pos];
      const bool follows = i > 0 && cfg.bigram_rate > 0 && rng.uniform() < cfg.bigram_rate;
      const std::size_t j = follows ? follow[c][previous] : within(rng);
      if (i > 0) tweet += ' ';
      tweet += lang.classes[c].members[j];
      previous = j;
      pos = (pos + 1) % cfg.classes;
    }
    lang.tweets.push_back(std::move(tweet));
  }
  return lang;
}

std::vector<std::string> make_zipf_corpus(const ZipfCorpusConfig& cfg) {
  if (cfg.vocabulary < 1 || cfg.min_length < 1 || cfg.max_length < cfg.min_length) {
    throw std::invalid_argument("invalid Zipf corpus configuration");
  }
  SplitMix64 rng(derive_seed(cfg.seed, 11));
  const ZipfSampler sampler(cfg.vocabulary, cfg.exponent);
  constexpr std::array<std::string_view, 5> kPunctuation = {"!", "?", ".", ",", "!!"};
  constexpr std::array<std::string_view, 4> kHandles = {"@joao", "@Maria_22", "@benfica",
                                                        "@PT_news"};
  constexpr std::array<std::string_view, 3> kLinks = {"http://t.co/abc", "https://Exemplo.pt/x",
                                                      "HTTP://sapo.pt"};
  std::vector<std::string> tweets;
  tweets.reserve(cfg.tweets);
  for (std::size_t t = 0; t < cfg.tweets; ++t) {
    const std::size_t length = length_between(rng, cfg.min_length, cfg.max_length);
    std::string tweet;
    for (std::size_t i = 0; i < length; ++i) {
      if (i > 0) tweet += ' ';
      std::string token = pseudo_word(sampler(rng));
      if (cfg.decorate) {
        const double u = rng.uniform();
        if (u < 0.04) {
          token = kHandles[rng.below(kHandles.size())];
        } else if (u < 0.06) {
          token = kLinks[rng.below(kLinks.size())];
        } else if (u < 0.14) {
          token[0] = static_cast<char>(token[0] - 'a' + 'A');
        } else if (u < 0.18) {
          token += kPunctuation[rng.below(kPunctuation.size())];
        }
      }
      tweet += token;
    }
    tweets.push_back(std::move(tweet));
  }
  return tweets;
}

}  // namespace tweetembed
