#include "tweetembed/corpus.hpp"

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <istream>
#include <memory>
#include <ostream>
#include <thread>
#include <unordered_map>

#include "text_util.hpp"
#include "tweetembed/errors.hpp"

namespace tweetembed {

using detail::split_tabs;
using detail::strip_cr;

namespace {

constexpr char32_t kReplacement = 0xFFFD;

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

// Calls visit(code_point, begin_offset, end_offset) for each code point.
template <typename Visit>
void for_each_code_point(std::string_view utf8, Visit&& visit) {
  const auto* s = reinterpret_cast<const std::uint8_t*>(utf8.data());
  const auto length = static_cast<std::int32_t>(utf8.size());
  std::int32_t i = 0;
  while (i < length) {
    const std::int32_t begin = i;
    UChar32 c;
    U8_NEXT(s, i, length, c);
    visit(c < 0 ? kReplacement : static_cast<char32_t>(c), static_cast<std::size_t>(begin),
          static_cast<std::size_t>(i));
  }
}

bool starts_with_ignoring_ascii_case(std::string_view text, std::string_view prefix) {
  if (text.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    char c = text[i];
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    if (c != prefix[i]) return false;
  }
  return true;
}

std::string normalize_token(std::string_view raw) {
  if (raw == kHandleToken || raw == kLinkToken) return std::string(raw);
  if (raw.size() > 1 && raw.front() == '@') return std::string(kHandleToken);
  if (starts_with_ignoring_ascii_case(raw, "http://") ||
      starts_with_ignoring_ascii_case(raw, "https://")) {
    return std::string(kLinkToken);
  }
  return fold_case(raw);
}

struct NGramHash {
  std::size_t operator()(const NGram& gram) const noexcept {
    std::size_t h = 0;
    for (const auto& token : gram) {
      h ^= std::hash<std::string>{}(token) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
  }
};

}  // namespace

bool is_boundary_token(std::string_view token) {
  return std::find(kBoundaryTokens.begin(), kBoundaryTokens.end(), token) != kBoundaryTokens.end();
}

std::u32string decode_utf8(std::string_view utf8) {
  std::u32string out;
  out.reserve(utf8.size());
  for_each_code_point(utf8, [&](char32_t cp, std::size_t, std::size_t) { out.push_back(cp); });
  return out;
}

std::string fold_case(std::string_view utf8) {
  std::string out;
  out.reserve(utf8.size());
  for_each_code_point(utf8, [&](char32_t cp, std::size_t, std::size_t) {
    append_utf8(out, static_cast<char32_t>(u_tolower(static_cast<UChar32>(cp))));
  });
  return out;
}

TokenSequence tokenize_tweet(std::string_view raw) {
  TokenSequence tokens;
  std::size_t token_begin = 0;
  bool in_token = false;
  for_each_code_point(raw, [&](char32_t cp, std::size_t begin, std::size_t) {
    const bool space = u_isUWhiteSpace(static_cast<UChar32>(cp));
    if (space && in_token) {
      tokens.push_back(normalize_token(raw.substr(token_begin, begin - token_begin)));
      in_token = false;
    } else if (!space && !in_token) {
      token_begin = begin;
      in_token = true;
    }
  });
  if (in_token) tokens.push_back(normalize_token(raw.substr(token_begin)));
  return tokens;
}

std::vector<NGram> extract_5grams(const TokenSequence& tokens) {
  std::vector<NGram> windows;
  windows.reserve(tokens.size());
  const auto at = [&](std::ptrdiff_t i) -> std::string {
    if (i == -2) return std::string(kPadLeftOuter);
    if (i == -1) return std::string(kPadLeftInner);
    const auto n = static_cast<std::ptrdiff_t>(tokens.size());
    if (i == n) return std::string(kPadRightInner);
    if (i == n + 1) return std::string(kPadRightOuter);
    return tokens[static_cast<std::size_t>(i)];
  };
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(tokens.size()); ++i) {
    windows.push_back({at(i - 2), at(i - 1), at(i), at(i + 1), at(i + 2)});
  }
  return windows;
}

void NGramDatabase::merge(const NGramDatabase& other) {
  for (const auto& [gram, count] : other.records) records[gram] += count;
  total_tweets += other.total_tweets;
  total_tokens += other.total_tokens;
}

struct NGramCounter::State {
  std::unordered_map<NGram, std::uint64_t, NGramHash> counts;
  std::uint64_t tweets = 0;
  std::uint64_t tokens = 0;
};

NGramCounter::NGramCounter() : state_(std::make_unique<State>()) {}
NGramCounter::~NGramCounter() = default;
NGramCounter::NGramCounter(NGramCounter&&) noexcept = default;
NGramCounter& NGramCounter::operator=(NGramCounter&&) noexcept = default;

void NGramCounter::add_tweet(std::string_view raw) { add_tokens(tokenize_tweet(raw)); }

void NGramCounter::add_tokens(const TokenSequence& tokens) {
  if (tokens.empty()) return;
  ++state_->tweets;
  state_->tokens += tokens.size();
  for (auto& gram : extract_5grams(tokens)) ++state_->counts[std::move(gram)];
}

NGramDatabase NGramCounter::finish() && {
  NGramDatabase db;
  db.total_tweets = state_->tweets;
  db.total_tokens = state_->tokens;
  for (auto& [gram, count] : state_->counts) db.records.emplace(gram, count);
  state_->counts.clear();
  return db;
}

NGramDatabase count_ngrams(std::span<const std::string> tweets, unsigned threads) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(tweets.size())));
  if (threads <= 1) {
    NGramCounter counter;
    for (const auto& tweet : tweets) counter.add_tweet(tweet);
    return std::move(counter).finish();
  }
  std::vector<NGramDatabase> shards(threads);
  std::vector<std::thread> workers;
  const std::size_t per = (tweets.size() + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t begin = std::min(tweets.size(), t * per);
    const std::size_t end = std::min(tweets.size(), begin + per);
    workers.emplace_back([&, t, begin, end] {
      NGramCounter counter;
      for (std::size_t i = begin; i < end; ++i) counter.add_tweet(tweets[i]);
      shards[t] = std::move(counter).finish();
    });
  }
  for (auto& w : workers) w.join();
  NGramDatabase db = std::move(shards.front());
  for (std::size_t t = 1; t < shards.size(); ++t) db.merge(shards[t]);
  return db;
}

Dictionary build_dictionary(const NGramDatabase& db) {
  std::unordered_map<std::string, std::uint64_t> freq;
  for (const auto& [gram, count] : db.records) {
    if (!is_boundary_token(gram[2])) freq[gram[2]] += count;
  }
  Dictionary dict;
  dict.entries.reserve(freq.size());
  for (auto& [word, count] : freq) dict.entries.push_back({word, count});
  std::sort(dict.entries.begin(), dict.entries.end(),
            [](const DictionaryEntry& a, const DictionaryEntry& b) {
              if (a.frequency != b.frequency) return a.frequency > b.frequency;
              return a.word < b.word;
            });
  return dict;
}

void write_database(const NGramDatabase& db, std::ostream& out) {
  out << "#total_tweets=" << db.total_tweets << "\t#total_tokens=" << db.total_tokens << '\n';
  for (const auto& [gram, count] : db.records) {
    for (const auto& token : gram) out << token << '\t';
    out << count << '\n';
  }
}

NGramDatabase read_database(std::istream& in) {
  NGramDatabase db;
  std::string line;
  if (!std::getline(in, line)) throw InputError("n-gram database: missing header");
  {
    const auto fields = split_tabs(strip_cr(line));
    constexpr std::string_view kTweets = "#total_tweets=";
    constexpr std::string_view kTokens = "#total_tokens=";
    if (fields.size() != 2 || !fields[0].starts_with(kTweets) || !fields[1].starts_with(kTokens)) {
      throw InputError("n-gram database: malformed header '" + line + "'");
    }
    db.total_tweets = detail::parse_u64(fields[0].substr(kTweets.size()), "n-gram database header");
    db.total_tokens = detail::parse_u64(fields[1].substr(kTokens.size()), "n-gram database header");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto trimmed = strip_cr(line);
    if (trimmed.empty()) continue;
    const auto fields = split_tabs(trimmed);
    if (fields.size() != 6) {
      throw InputError("n-gram database line " + std::to_string(line_no) + ": expected 6 fields");
    }
    NGram gram;
    for (std::size_t i = 0; i < 5; ++i) gram[i] = std::string(fields[i]);
    const auto count = detail::parse_u64(fields[5], detail::where("n-gram database", line_no));
    if (count == 0) {
      throw InputError("n-gram database line " + std::to_string(line_no) + ": zero count");
    }
    db.records[std::move(gram)] += count;
  }
  return db;
}

void write_dictionary(const Dictionary& dict, std::ostream& out) {
  for (std::size_t rank = 0; rank < dict.entries.size(); ++rank) {
    const auto& e = dict.entries[rank];
    out << e.word << '\t' << e.frequency << '\t' << rank << '\n';
  }
}

Dictionary read_dictionary(std::istream& in) {
  Dictionary dict;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto trimmed = strip_cr(line);
    if (trimmed.empty()) continue;
    const auto fields = split_tabs(trimmed);
    if (fields.size() != 3) {
      throw InputError("dictionary line " + std::to_string(line_no) + ": expected 3 fields");
    }
    const auto rank = detail::parse_u64(fields[2], detail::where("dictionary", line_no));
    if (rank != dict.entries.size()) {
      throw InputError("dictionary line " + std::to_string(line_no) + ": rank out of order");
    }
    dict.entries.push_back(
        {std::string(fields[0]), detail::parse_u64(fields[1], detail::where("dictionary", line_no))});
  }
  return dict;
}

}  // namespace tweetembed
