#include "fedforest/crypto.hpp"

#include <memory>
#include <stdexcept>

#include <openssl/evp.h>
#include <openssl/rand.h>

namespace fedforest {

namespace {

struct PkeyDeleter {
  void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
struct CtxDeleter {
  void operator()(EVP_MD_CTX* c) const { EVP_MD_CTX_free(c); }
};
using PkeyPtr = std::unique_ptr<EVP_PKEY, PkeyDeleter>;
using CtxPtr = std::unique_ptr<EVP_MD_CTX, CtxDeleter>;

PkeyPtr private_pkey(std::span<const std::uint8_t> seed) {
  if (seed.size() != 32) throw std::invalid_argument("ed25519: private key must be 32 bytes");
  PkeyPtr p(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr, seed.data(), seed.size()));
  if (!p) throw std::runtime_error("ed25519: failed to load private key");
  return p;
}

}  // namespace

Digest sha256(std::span<const std::uint8_t> data) {
  Digest out{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 || len != 32) {
    throw std::runtime_error("sha256: digest failure");
  }
  return out;
}

Digest sha256(const std::string& data) {
  return sha256(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(data.data()),
                                              data.size()));
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  s.reserve(bytes.size() * 2);
  for (std::uint8_t b : bytes) {
    s.push_back(digits[b >> 4]);
    s.push_back(digits[b & 0xf]);
  }
  return s;
}

std::vector<std::uint8_t> from_hex(const std::string& hex) {
  if (hex.size() % 2 != 0) throw std::invalid_argument("from_hex: odd length");
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw std::invalid_argument("from_hex: bad character");
  };
  std::vector<std::uint8_t> out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
  }
  return out;
}

KeyPair KeyPair::generate() {
  Digest seed{};
  if (RAND_bytes(seed.data(), static_cast<int>(seed.size())) != 1) {
    throw std::runtime_error("KeyPair::generate: RNG failure");
  }
  return from_seed(seed);
}

KeyPair KeyPair::from_seed(const Digest& seed) {
  PkeyPtr p = private_pkey(std::span<const std::uint8_t>(seed.data(), seed.size()));
  std::size_t publen = 32;
  KeyPair kp;
  kp.public_key.resize(publen);
  if (EVP_PKEY_get_raw_public_key(p.get(), kp.public_key.data(), &publen) != 1 || publen != 32) {
    throw std::runtime_error("KeyPair: failed to derive public key");
  }
  kp.private_key.assign(seed.begin(), seed.end());
  return kp;
}

std::vector<std::uint8_t> ed25519_sign(std::span<const std::uint8_t> private_key,
                                       std::span<const std::uint8_t> message) {
  PkeyPtr p = private_pkey(private_key);
  CtxPtr ctx(EVP_MD_CTX_new());
  if (!ctx || EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, p.get()) != 1) {
    throw std::runtime_error("ed25519_sign: init failure");
  }
  std::size_t siglen = 64;
  std::vector<std::uint8_t> sig(siglen);
  if (EVP_DigestSign(ctx.get(), sig.data(), &siglen, message.data(), message.size()) != 1) {
    throw std::runtime_error("ed25519_sign: sign failure");
  }
  sig.resize(siglen);
  return sig;
}

bool ed25519_verify(std::span<const std::uint8_t> public_key,
                    std::span<const std::uint8_t> message,
                    std::span<const std::uint8_t> signature) {
  if (public_key.size() != 32 || signature.size() != 64) return false;
  PkeyPtr p(EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr, public_key.data(),
                                        public_key.size()));
  if (!p) return false;
  CtxPtr ctx(EVP_MD_CTX_new());
  if (!ctx || EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, p.get()) != 1) {
    return false;
  }
  return EVP_DigestVerify(ctx.get(), signature.data(), signature.size(), message.data(),
                          message.size()) == 1;
}

}  // namespace fedforest
