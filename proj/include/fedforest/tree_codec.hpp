#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedforest/tree.hpp"

namespace fedforest {

struct CodecError : std::runtime_error {
  std::size_t offset;
  CodecError(const std::string& msg, std::size_t off)
      : std::runtime_error(msg + " (offset " + std::to_string(off) + ")"), offset(off) {}
};

/// Canonical encoding: magic "FFT1", id, feature count, then the node
/// structure in pre-order with little-endian fixed-width fields. Structurally
/// equal trees always produce identical bytes.
std::vector<std::uint8_t> serialize_tree(const DecisionTree& tree);

/// Inverse of serialize_tree. Throws CodecError with the byte offset on any
/// malformed input (bad magic, bad tag, out-of-range feature or score,
/// non-finite value, truncation, trailing bytes).
DecisionTree deserialize_tree(const std::vector<std::uint8_t>& bytes);

/// Human-readable dump for debugging; not canonical.
std::string tree_to_json(const DecisionTree& tree);

bool trees_equal(const DecisionTree& a, const DecisionTree& b);

}  // namespace fedforest
