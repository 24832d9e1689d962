#include "tweetembed/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "text_util.hpp"
#include "tweetembed/errors.hpp"
#include "tweetembed/hashing.hpp"
#include "tweetembed/rng.hpp"

namespace tweetembed {

namespace {

// floor(ratio * n) with slack for products like 0.29 * 100 landing just
// under an integer.
std::size_t floor_share(double ratio, std::size_t n) {
  return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 1e-9));
}

void write_tuple(const TrainingTuple& t, std::ostream& out) {
  out << t.context[0] << '\t' << t.context[1] << '\t' << t.context[2] << '\t' << t.context[3]
      << '\t' << t.target << '\n';
}

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> words) : words_(std::move(words)) {
  ids_.reserve(words_.size());
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (is_boundary_token(words_[i])) {
      throw std::invalid_argument("vocabulary cannot contain boundary token " + words_[i]);
    }
    if (!ids_.emplace(words_[i], static_cast<TokenId>(i)).second) {
      throw std::invalid_argument("duplicate vocabulary word '" + words_[i] + "'");
    }
  }
}

std::optional<TokenId> Vocabulary::id_of(const std::string& word) const {
  const auto it = ids_.find(word);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::optional<TokenId> Vocabulary::context_id_of(const std::string& token) const {
  if (auto id = id_of(token)) return id;
  for (std::size_t b = 0; b < kBoundaryTokens.size(); ++b) {
    if (token == kBoundaryTokens[b]) return static_cast<TokenId>(words_.size() + b);
  }
  return std::nullopt;
}

std::string_view Vocabulary::token(TokenId id) const {
  if (id < words_.size()) return words_[id];
  const std::size_t b = id - words_.size();
  if (b < kBoundaryTokens.size()) return kBoundaryTokens[b];
  throw std::out_of_range("token id " + std::to_string(id) + " outside vocabulary of " +
                          std::to_string(words_.size()));
}

std::uint64_t Vocabulary::fingerprint() const {
  Fnv1a h;
  h.update_u64(words_.size());
  for (const auto& w : words_) {
    h.update(w);
    h.update("\n");
  }
  return h.digest();
}

Vocabulary select_vocabulary(const Dictionary& dict, std::size_t size) {
  if (size == 0) throw std::invalid_argument("vocabulary size must be positive");
  if (size > dict.size()) {
    throw std::invalid_argument("requested vocabulary size " + std::to_string(size) +
                                " exceeds dictionary size " + std::to_string(dict.size()));
  }
  std::vector<std::string> words;
  words.reserve(size);
  for (std::size_t i = 0; i < size; ++i) words.push_back(dict.entries[i].word);
  return Vocabulary(std::move(words));
}

std::vector<TrainingTuple> filter_ngrams(const NGramDatabase& db, const Vocabulary& vocab,
                                         bool include_boundary) {
  std::vector<TrainingTuple> tuples;
  const auto lookup = [&](const std::string& token) {
    return include_boundary ? vocab.context_id_of(token) : vocab.id_of(token);
  };
  for (const auto& [gram, count] : db.records) {
    const auto target = vocab.id_of(gram[2]);
    if (!target) continue;
    TrainingTuple t;
    t.target = *target;
    bool ok = true;
    constexpr std::array<std::size_t, 4> kContextSlots = {0, 1, 3, 4};
    for (std::size_t k = 0; k < 4 && ok; ++k) {
      const auto id = lookup(gram[kContextSlots[k]]);
      if (id) {
        t.context[k] = *id;
      } else {
        ok = false;
      }
    }
    if (ok) tuples.push_back(t);
  }
  return tuples;
}

DatasetSplit split_dataset(std::span<const TrainingTuple> tuples, double validation_ratio,
                           double fraction, std::uint64_t seed) {
  if (tuples.empty()) throw std::invalid_argument("cannot split an empty tuple list");
  if (!(validation_ratio > 0.0 && validation_ratio < 1.0)) {
    throw std::invalid_argument("validation ratio must lie in (0, 1), got " +
                                detail::format_double(validation_ratio));
  }
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("fraction must lie in (0, 1], got " +
                                detail::format_double(fraction));
  }
  std::vector<TrainingTuple> order(tuples.begin(), tuples.end());
  SplitMix64 rng(derive_seed(seed, 1));
  shuffle(std::span<TrainingTuple>(order), rng);

  const std::size_t n = order.size();
  std::size_t n_validation = 0;
  if (n >= 2) n_validation = std::clamp<std::size_t>(floor_share(validation_ratio, n), 1, n - 1);
  const std::size_t rest = n - n_validation;
  const std::size_t n_train = std::clamp<std::size_t>(floor_share(fraction, rest), 1, rest);

  DatasetSplit split;
  split.seed = seed;
  split.validation_ratio = validation_ratio;
  split.fraction = fraction;
  split.validation.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_validation));
  split.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_validation),
                     order.begin() + static_cast<std::ptrdiff_t>(n_validation + n_train));
  return split;
}

void write_dataset(const DatasetFile& dataset, std::ostream& out) {
  const auto& s = dataset.split;
  out << "#tweetembed-dataset\tv1\n";
  out << "#vocab_size=" << dataset.vocab_size
      << "\tvocab_fingerprint=" << to_hex(dataset.vocab_fingerprint) << "\tseed=" << s.seed
      << "\tvalidation_ratio=" << detail::format_double(s.validation_ratio)
      << "\tfraction=" << detail::format_double(s.fraction)
      << "\tinclude_boundary=" << (dataset.include_boundary ? 1 : 0) << '\n';
  out << "#train\t" << s.train.size() << '\n';
  for (const auto& t : s.train) write_tuple(t, out);
  out << "#validation\t" << s.validation.size() << '\n';
  for (const auto& t : s.validation) write_tuple(t, out);
}

DatasetFile read_dataset(std::istream& in) {
  DatasetFile dataset;
  std::string line;
  std::size_t line_no = 0;
  const auto next_line = [&]() -> std::string_view {
    if (!std::getline(in, line)) throw InputError("dataset: unexpected end of file");
    ++line_no;
    return detail::strip_cr(line);
  };
  if (next_line() != "#tweetembed-dataset\tv1") throw InputError("dataset: missing v1 signature");

  {
    const auto header = next_line();
    if (header.empty() || header.front() != '#') throw InputError("dataset: missing header line");
    const auto f = detail::split_tabs(header.substr(1));
    if (f.size() != 6) throw InputError("dataset: header must have 6 fields");
    const std::string ctx = "dataset header";
    dataset.vocab_size = detail::parse_u64(detail::expect_key(f[0], "vocab_size", ctx), ctx);
    dataset.vocab_fingerprint =
        detail::parse_u64(detail::expect_key(f[1], "vocab_fingerprint", ctx), ctx, 16);
    dataset.split.seed = detail::parse_u64(detail::expect_key(f[2], "seed", ctx), ctx);
    dataset.split.validation_ratio =
        detail::parse_double(detail::expect_key(f[3], "validation_ratio", ctx), ctx);
    dataset.split.fraction = detail::parse_double(detail::expect_key(f[4], "fraction", ctx), ctx);
    dataset.include_boundary =
        detail::parse_u64(detail::expect_key(f[5], "include_boundary", ctx), ctx) != 0;
  }

  const std::size_t context_limit = dataset.vocab_size + kBoundaryTokens.size();
  const auto read_section = [&](std::string_view name, std::vector<TrainingTuple>& tuples) {
    const auto head = detail::split_tabs(next_line());
    if (head.size() != 2 || head[0] != name) {
      throw InputError("dataset: expected section " + std::string(name));
    }
    const auto count = detail::parse_u64(head[1], "dataset section size");
    tuples.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
      const auto f = detail::split_tabs(next_line());
      const auto ctx = detail::where("dataset", line_no);
      if (f.size() != 5) throw InputError(ctx + ": expected 5 ids");
      TrainingTuple t;
      for (std::size_t k = 0; k < 4; ++k) {
        const auto id = detail::parse_u64(f[k], ctx);
        if (id >= context_limit) throw InputError(ctx + ": context id out of range");
        t.context[k] = static_cast<TokenId>(id);
      }
      const auto target = detail::parse_u64(f[4], ctx);
      if (target >= dataset.vocab_size) throw InputError(ctx + ": target id out of range");
      t.target = static_cast<TokenId>(target);
      tuples.push_back(t);
    }
  };
  read_section("#train", dataset.split.train);
  read_section("#validation", dataset.split.validation);
  return dataset;
}

}  // namespace tweetembed
