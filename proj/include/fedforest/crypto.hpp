#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fedforest {

using Digest = std::array<std::uint8_t, 32>;

Digest sha256(std::span<const std::uint8_t> data);
Digest sha256(const std::string& data);

std::string to_hex(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> from_hex(const std::string& hex);

/// Ed25519 key pair. The private field is the 32-byte seed; public is the
/// 32-byte verification key.
struct KeyPair {
  std::vector<std::uint8_t> public_key;
  std::vector<std::uint8_t> private_key;

  static KeyPair generate();
  static KeyPair from_seed(const Digest& seed);
};

std::vector<std::uint8_t> ed25519_sign(std::span<const std::uint8_t> private_key,
                                       std::span<const std::uint8_t> message);
bool ed25519_verify(std::span<const std::uint8_t> public_key,
                    std::span<const std::uint8_t> message,
                    std::span<const std::uint8_t> signature);

}  // namespace fedforest
