#include "ehr/rng.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstring>
#include <stdexcept>

namespace ehr {

namespace {
constexpr std::size_t kBufferSize = 4096;

std::array<std::uint8_t, 32> sha256(ByteView in) {
  std::array<std::uint8_t, 32> out{};
  unsigned int len = 0;
  if (EVP_Digest(in.data(), in.size(), out.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("rng: SHA-256 failed");
  }
  return out;
}
}  // namespace

struct Rng::Stream {
  struct CtxDeleter {
    void operator()(EVP_CIPHER_CTX* c) const { EVP_CIPHER_CTX_free(c); }
  };
  std::unique_ptr<EVP_CIPHER_CTX, CtxDeleter> ctx;
  std::array<std::uint8_t, kBufferSize> buffer{};
  std::size_t pos = kBufferSize;
};

Rng::Rng(std::uint64_t seed) {
  ByteWriter w;
  w.raw(to_bytes("ehr-rng-seed")).u64(seed);
  *this = Rng(ByteView(w.bytes()));
}

Rng::Rng(ByteView seed_material) : stream_(std::make_unique<Stream>()) {
  auto key = sha256(seed_material);
  std::array<std::uint8_t, 16> iv{};
  stream_->ctx.reset(EVP_CIPHER_CTX_new());
  if (!stream_->ctx ||
      EVP_EncryptInit_ex(stream_->ctx.get(), EVP_chacha20(), nullptr, key.data(),
                         iv.data()) != 1) {
    // Fatal: the generator has no meaningful fallback.
    throw std::runtime_error("rng: ChaCha20 init failed");
  }
}

Rng::~Rng() = default;
Rng::Rng(Rng&&) noexcept = default;
Rng& Rng::operator=(Rng&&) noexcept = default;

void Rng::refill() {
  std::array<std::uint8_t, kBufferSize> zeros{};
  int out_len = 0;
  if (EVP_EncryptUpdate(stream_->ctx.get(), stream_->buffer.data(), &out_len,
                        zeros.data(), static_cast<int>(zeros.size())) != 1 ||
      out_len != static_cast<int>(kBufferSize)) {
    throw std::runtime_error("rng: keystream generation failed");
  }
  stream_->pos = 0;
}

void Rng::fill(std::span<std::uint8_t> out) {
  std::size_t done = 0;
  while (done < out.size()) {
    if (stream_->pos == kBufferSize) refill();
    std::size_t n = std::min(out.size() - done, kBufferSize - stream_->pos);
    std::memcpy(out.data() + done, stream_->buffer.data() + stream_->pos, n);
    stream_->pos += n;
    done += n;
  }
}

Bytes Rng::bytes(std::size_t n) {
  Bytes out(n);
  fill(out);
  return out;
}

std::uint64_t Rng::next_u64() {
  std::array<std::uint8_t, 8> b{};
  fill(b);
  std::uint64_t v = 0;
  for (auto x : b) v = (v << 8) | x;
  return v;
}

std::uint64_t Rng::uniform(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("rng: uniform bound must be > 0");
  // Rejection sampling against the largest multiple of bound.
  const std::uint64_t limit = max() - (max() % bound);
  for (;;) {
    auto v = next_u64();
    if (v < limit) return v % bound;
  }
}

Rng Rng::fork(std::string_view label) {
  ByteWriter w;
  w.raw(bytes(32)).str16(label);
  return Rng(ByteView(w.bytes()));
}

}  // namespace ehr
