#include "tweetembed/checkpoint.hpp"

#include <fstream>
#include <string_view>

#include "binary_io.hpp"
#include "tweetembed/errors.hpp"

namespace tweetembed {

namespace {

constexpr std::string_view kMagic = "TWEMBCKP";
constexpr std::uint32_t kVersion = 1;
// Sanity cap on dimensions read from disk.
constexpr std::uint64_t kMaxDim = std::uint64_t{1} << 31;

template <typename M>
void put_matrix(std::ostream& out, const M& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) detail::put_f64(out, m(r, c));
  }
}

template <typename M>
void get_matrix(std::istream& in, M& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = detail::get_f64(in, "checkpoint");
  }
}

}  // namespace

void write_checkpoint(const Checkpoint& ckpt, std::ostream& out) {
  const auto& h = ckpt.params.hyper;
  const auto& w = ckpt.params.weights;
  out.write(kMagic.data(), static_cast<std::streamsize>(kMagic.size()));
  detail::put_u32(out, kVersion);
  detail::put_u64(out, h.vocab_size);
  detail::put_u64(out, h.input_dim);
  detail::put_u64(out, h.context_dim);
  out.put(h.sigmoid_logits ? 1 : 0);
  detail::put_u64(out, ckpt.seed);
  detail::put_u64(out, ckpt.vocab_fingerprint);
  detail::put_u64(out, ckpt.epoch);
  put_matrix(out, w.input);
  put_matrix(out, w.context);
  put_matrix(out, w.context_bias);
  put_matrix(out, w.output);
  put_matrix(out, w.output_bias);
}

Checkpoint read_checkpoint(std::istream& in) {
  char magic[8];
  detail::get_bytes(in, magic, sizeof magic, "checkpoint");
  if (std::string_view(magic, sizeof magic) != kMagic) throw InputError("not a checkpoint file");
  const auto version = detail::get_u32(in, "checkpoint");
  if (version != kVersion) {
    throw InputError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  auto& h = ckpt.params.hyper;
  h.vocab_size = detail::get_u64(in, "checkpoint");
  h.input_dim = detail::get_u64(in, "checkpoint");
  h.context_dim = detail::get_u64(in, "checkpoint");
  if (h.vocab_size == 0 || h.input_dim == 0 || h.context_dim == 0 || h.vocab_size > kMaxDim ||
      h.input_dim > kMaxDim || h.context_dim > kMaxDim) {
    throw InputError("checkpoint has invalid dimensions");
  }
  char flag = 0;
  detail::get_bytes(in, &flag, 1, "checkpoint");
  h.sigmoid_logits = flag != 0;
  ckpt.seed = detail::get_u64(in, "checkpoint");
  ckpt.vocab_fingerprint = detail::get_u64(in, "checkpoint");
  ckpt.epoch = detail::get_u64(in, "checkpoint");
  auto& w = ckpt.params.weights;
  w = Weights::zeros(h);
  get_matrix(in, w.input);
  get_matrix(in, w.context);
  get_matrix(in, w.context_bias);
  get_matrix(in, w.output);
  get_matrix(in, w.output_bias);
  if (in.peek() != std::char_traits<char>::eof()) {
    throw InputError("checkpoint has trailing bytes");
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    write_checkpoint(ckpt, out);
    out.flush();
    if (!out) throw InputError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

}  // namespace tweetembed
