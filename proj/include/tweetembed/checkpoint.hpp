#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "tweetembed/model.hpp"

namespace tweetembed {

struct Checkpoint {
  ModelParams params;
  std::uint64_t seed = 0;
  std::uint64_t vocab_fingerprint = 0;
  std::uint64_t epoch = 0;
};

// Binary layout, all integers and doubles little-endian:
//
//   offset  size  field
//   0       8     magic "TWEMBCKP"
//   8       4     format version (1)
//   12      8     |V|
//   20      8     d_in
//   28      8     d_ctx
//   36      1     sigmoid_logits (0/1)
//   37      8     seed
//   45      8     vocabulary fingerprint (FNV-1a, see Vocabulary::fingerprint)
//   53      8     epoch
//   61      ...   float64 arrays, each row-major:
//                 W_input (|V|+4) x d_in, W_ctx (4 d_in) x d_ctx, b_ctx d_ctx,
//                 W_output d_ctx x |V|, b_out |V|
void write_checkpoint(const Checkpoint& ckpt, std::ostream& out);
Checkpoint read_checkpoint(std::istream& in);

// Writes to a sibling temp file and renames it into place, so an interrupted
// write never replaces the previous checkpoint.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace tweetembed
