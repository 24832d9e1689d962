#pragma once

#include <stdexcept>
#include <string>

namespace tweetembed {

// Bad or missing input: unreadable files, malformed records, vocabulary
// mismatches. The CLI maps it to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training produced non-finite values or a loss blow-up. Exit code 3.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tweetembed
