#include "fedforest/tree_codec.hpp"

#include <cmath>
#include <cstring>

#include <nlohmann/json.hpp>

namespace fedforest {

namespace {

constexpr std::uint8_t kMagic[4] = {'F', 'F', 'T', '1'};
constexpr std::uint8_t kTagLeaf = 0;
constexpr std::uint8_t kTagInternal = 1;
constexpr std::size_t kMaxDecodeDepth = 1024;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 24));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

struct Reader {
  const std::vector<std::uint8_t>& buf;
  std::size_t pos = 0;

  std::uint8_t u8() {
    if (pos >= buf.size()) throw CodecError("tree decode: truncated input", pos);
    return buf[pos++];
  }
  std::uint32_t u32() {
    if (pos + 4 > buf.size()) throw CodecError("tree decode: truncated input", pos);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[pos + static_cast<std::size_t>(i)]) << (8 * i);
    pos += 4;
    return v;
  }
  double f64() {
    if (pos + 8 > buf.size()) throw CodecError("tree decode: truncated input", pos);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[pos + static_cast<std::size_t>(i)]) << (8 * i);
    pos += 8;
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
};

void encode_node(const DecisionTree& t, std::int32_t idx, std::vector<std::uint8_t>& out) {
  const TreeNode& n = t.nodes[static_cast<std::size_t>(idx)];
  if (n.is_leaf()) {
    out.push_back(kTagLeaf);
    put_f64(out, n.value);
  } else {
    out.push_back(kTagInternal);
    put_u32(out, static_cast<std::uint32_t>(n.feature));
    put_f64(out, n.value);
    encode_node(t, n.left, out);
    encode_node(t, n.right, out);
  }
}

std::int32_t decode_node(Reader& r, DecisionTree& t, std::size_t depth) {
  if (depth > kMaxDecodeDepth) throw CodecError("tree decode: nesting too deep", r.pos);
  const std::size_t tag_off = r.pos;
  const std::uint8_t tag = r.u8();
  const std::int32_t self = static_cast<std::int32_t>(t.nodes.size());
  t.nodes.emplace_back();
  if (tag == kTagLeaf) {
    const std::size_t off = r.pos;
    const double score = r.f64();
    if (!(score >= 0.0 && score <= 1.0)) throw CodecError("tree decode: leaf score outside [0,1]", off);
    t.nodes[static_cast<std::size_t>(self)].feature = -1;
    t.nodes[static_cast<std::size_t>(self)].value = score;
  } else if (tag == kTagInternal) {
    const std::size_t foff = r.pos;
    const std::uint32_t feature = r.u32();
    if (feature >= t.d) throw CodecError("tree decode: split feature out of range", foff);
    const std::size_t voff = r.pos;
    const double value = r.f64();
    if (!std::isfinite(value)) throw CodecError("tree decode: non-finite split value", voff);
    t.nodes[static_cast<std::size_t>(self)].feature = static_cast<std::int32_t>(feature);
    t.nodes[static_cast<std::size_t>(self)].value = value;
    const std::int32_t l = decode_node(r, t, depth + 1);
    t.nodes[static_cast<std::size_t>(self)].left = l;
    const std::int32_t rr = decode_node(r, t, depth + 1);
    t.nodes[static_cast<std::size_t>(self)].right = rr;
  } else {
    throw CodecError("tree decode: bad node tag", tag_off);
  }
  return self;
}

nlohmann::json node_to_json(const DecisionTree& t, std::int32_t idx) {
  const TreeNode& n = t.nodes[static_cast<std::size_t>(idx)];
  if (n.is_leaf()) return {{"score", n.value}};
  return {{"feature", n.feature},
          {"value", n.value},
          {"left", node_to_json(t, n.left)},
          {"right", node_to_json(t, n.right)}};
}

}  // namespace

std::vector<std::uint8_t> serialize_tree(const DecisionTree& tree) {
  if (tree.nodes.empty()) throw std::invalid_argument("serialize_tree: empty tree");
  std::vector<std::uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u32(out, tree.id.origin);
  put_u32(out, tree.id.counter);
  put_u32(out, tree.d);
  encode_node(tree, 0, out);
  return out;
}

DecisionTree deserialize_tree(const std::vector<std::uint8_t>& bytes) {
  Reader r{bytes};
  for (std::size_t i = 0; i < 4; ++i) {
    if (r.u8() != kMagic[i]) throw CodecError("tree decode: bad magic", i);
  }
  DecisionTree t;
  t.id.origin = r.u32();
  t.id.counter = r.u32();
  t.d = r.u32();
  if (t.d == 0) throw CodecError("tree decode: zero feature count", r.pos - 4);
  decode_node(r, t, 0);
  if (r.pos != bytes.size()) throw CodecError("tree decode: trailing bytes", r.pos);
  return t;
}

std::string tree_to_json(const DecisionTree& tree) {
  nlohmann::json j{{"id", {{"origin", tree.id.origin}, {"counter", tree.id.counter}}},
                   {"d", tree.d},
                   {"root", node_to_json(tree, 0)}};
  return j.dump();
}

bool trees_equal(const DecisionTree& a, const DecisionTree& b) {
  if (a.id != b.id || a.d != b.d || a.nodes.size() != b.nodes.size()) return false;
  for (std::size_t i = 0; i < a.nodes.size(); ++i) {
    const TreeNode &x = a.nodes[i], &y = b.nodes[i];
    if (x.feature != y.feature || x.left != y.left || x.right != y.right) return false;
    if (std::memcmp(&x.value, &y.value, 8) != 0) return false;
  }
  return true;
}

}  // namespace fedforest
