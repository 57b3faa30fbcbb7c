#include "dntm/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace dntm {

namespace {

constexpr char kMagic[8] = {'D', 'N', 'T', 'M', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

// All multi-byte fields are little-endian regardless of host order.
void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double x) { put_u64(out, std::bit_cast<std::uint64_t>(x)); }

struct Reader {
  std::ifstream in;
  explicit Reader(const std::string& path) : in(path, std::ios::binary) {}

  void bytes(char* dst, std::size_t n) {
    in.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n)
      throw std::runtime_error("truncated checkpoint");
  }

  std::uint32_t u32() {
    unsigned char b[4];
    bytes(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }

  std::uint64_t u64() {
    unsigned char b[8];
    bytes(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }

  double f64() { return std::bit_cast<double>(u64()); }
};

}  // namespace

void save_checkpoint(const ModelParams& params, const Vocabulary& vocab, const std::string& path) {
  if (static_cast<std::int32_t>(vocab.size()) != params.vocab_size)
    throw std::invalid_argument("checkpoint: vocabulary size does not match parameters");
  if (!params.all_finite())
    throw std::invalid_argument("checkpoint: refusing to save non-finite parameters");

  std::string buf;
  buf.reserve(64 + params.embed.size() * 8 + params.proj.size() * 8 + params.bias.size() * 8);
  buf.append(kMagic, sizeof(kMagic));
  put_u32(buf, kVersion);
  put_u64(buf, static_cast<std::uint64_t>(params.vocab_size));
  put_u64(buf, static_cast<std::uint64_t>(params.embed_dim));
  put_u64(buf, static_cast<std::uint64_t>(params.num_topics));
  for (std::size_t w = 0; w < static_cast<std::size_t>(vocab.size()); ++w) {
    const std::string& word = vocab.word(static_cast<std::int32_t>(w));
    put_u32(buf, static_cast<std::uint32_t>(word.size()));
    buf.append(word);
    put_u64(buf, vocab.count(static_cast<std::int32_t>(w)));
  }
  for (double x : params.embed) put_f64(buf, x);
  for (double x : params.proj) put_f64(buf, x);
  for (double x : params.bias) put_f64(buf, x);

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + tmp);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw std::runtime_error("checkpoint write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw std::runtime_error("checkpoint rename failed: " + path + ": " + ec.message());
}

Checkpoint load_checkpoint(const std::string& path, const ExpectedDims& expect) {
  Reader r(path);
  if (!r.in) throw std::runtime_error("cannot open checkpoint: " + path);

  char magic[8];
  r.bytes(magic, 8);
  for (int i = 0; i < 8; ++i)
    if (magic[i] != kMagic[i]) throw std::runtime_error("not a checkpoint file (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != kVersion)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));

  const std::uint64_t v = r.u64();
  const std::uint64_t d = r.u64();
  const std::uint64_t k = r.u64();
  if (v < 1 || d < 1 || k < 1 || v > (1u << 30) || d > (1u << 20) || k > (1u << 20) ||
      v * d > (1ull << 34))
    throw std::runtime_error("corrupt checkpoint header (implausible dimensions)");

  auto check_dim = [](std::int64_t expected, std::uint64_t got, const char* name) {
    if (expected >= 0 && static_cast<std::uint64_t>(expected) != got)
      throw std::runtime_error("checkpoint dimension mismatch: " + std::string(name) + " is " +
                               std::to_string(got) + ", expected " + std::to_string(expected));
  };
  check_dim(expect.vocab_size, v, "vocabulary size");
  check_dim(expect.embed_dim, d, "embedding dimension");
  check_dim(expect.num_topics, k, "topic count");

  std::vector<std::string> words(v);
  std::vector<std::uint64_t> counts(v);
  for (std::uint64_t i = 0; i < v; ++i) {
    const std::uint32_t len = r.u32();
    if (len > (1u << 20)) throw std::runtime_error("corrupt checkpoint (implausible word length)");
    words[i].resize(len);
    if (len > 0) r.bytes(words[i].data(), len);
    counts[i] = r.u64();
  }

  Checkpoint ck;
  ck.vocab = Vocabulary(std::move(words), std::move(counts));
  ck.params.vocab_size = static_cast<std::int32_t>(v);
  ck.params.embed_dim = static_cast<std::int32_t>(d);
  ck.params.num_topics = static_cast<std::int32_t>(k);
  ck.params.embed.resize(v * d);
  ck.params.proj.resize(k * d);
  ck.params.bias.resize(k);
  for (auto& x : ck.params.embed) x = r.f64();
  for (auto& x : ck.params.proj) x = r.f64();
  for (auto& x : ck.params.bias) x = r.f64();

  if (r.in.peek() != std::ifstream::traits_type::eof())
    throw std::runtime_error("trailing data in checkpoint");
  if (!ck.params.all_finite())
    throw std::runtime_error("non-finite parameter in checkpoint");
  return ck;
}

}  // namespace dntm
