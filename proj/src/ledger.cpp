#include "fedforest/ledger.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace fedforest {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_bytes(std::vector<std::uint8_t>& out, std::span<const std::uint8_t> b) {
  put_u32(out, static_cast<std::uint32_t>(b.size()));
  out.insert(out.end(), b.begin(), b.end());
}

void put_string(std::vector<std::uint8_t>& out, const std::string& s) {
  put_bytes(out, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(s.data()),
                                               s.size()));
}

struct PayloadReader {
  const std::vector<std::uint8_t>& buf;
  std::size_t pos = 0;

  std::uint8_t u8() {
    if (pos >= buf.size()) throw LedgerError("payload decode: truncated");
    return buf[pos++];
  }
  std::uint32_t u32() {
    if (pos + 4 > buf.size()) throw LedgerError("payload decode: truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[pos + static_cast<std::size_t>(i)]) << (8 * i);
    pos += 4;
    return v;
  }
  std::vector<std::uint8_t> bytes() {
    const std::uint32_t len = u32();
    if (pos + len > buf.size()) throw LedgerError("payload decode: truncated");
    std::vector<std::uint8_t> out(buf.begin() + static_cast<std::ptrdiff_t>(pos),
                                  buf.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
    return out;
  }
  std::string str() {
    const std::vector<std::uint8_t> b = bytes();
    return std::string(b.begin(), b.end());
  }
  Digest digest() {
    if (pos + 32 > buf.size()) throw LedgerError("payload decode: truncated");
    Digest d{};
    std::copy_n(buf.begin() + static_cast<std::ptrdiff_t>(pos), 32, d.begin());
    pos += 32;
    return d;
  }
  void done() const {
    if (pos != buf.size()) throw LedgerError("payload decode: trailing bytes");
  }
};

}  // namespace

std::vector<std::uint8_t> encode_payload(const ImagePayload& p) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), p.artifact_digest.begin(), p.artifact_digest.end());
  put_string(out, p.scheme);
  put_bytes(out, p.author_pubkey);
  return out;
}

std::vector<std::uint8_t> encode_payload(const ProcessPayload& p) {
  std::vector<std::uint8_t> out;
  put_string(out, p.process_id);
  out.insert(out.end(), p.algorithm_digest.begin(), p.algorithm_digest.end());
  put_u32(out, static_cast<std::uint32_t>(p.consortium.size()));
  for (const auto& [node, pubkey] : p.consortium) {
    put_string(out, node);
    put_bytes(out, pubkey);
  }
  put_u32(out, p.current_iteration);
  out.push_back(static_cast<std::uint8_t>(p.status));
  return out;
}

std::vector<std::uint8_t> encode_payload(const ExecutionPayload& p) {
  std::vector<std::uint8_t> out;
  put_string(out, p.process_id);
  put_u32(out, p.round);
  out.push_back(static_cast<std::uint8_t>(p.op));
  out.insert(out.end(), p.payload_digest.begin(), p.payload_digest.end());
  return out;
}

std::vector<std::uint8_t> encode_payload(const ModelPayload& p) {
  std::vector<std::uint8_t> out;
  put_string(out, p.process_id);
  out.insert(out.end(), p.model_digest.begin(), p.model_digest.end());
  return out;
}

ImagePayload decode_image_payload(const std::vector<std::uint8_t>& bytes) {
  PayloadReader r{bytes};
  ImagePayload p;
  p.artifact_digest = r.digest();
  p.scheme = r.str();
  p.author_pubkey = r.bytes();
  r.done();
  return p;
}

ProcessPayload decode_process_payload(const std::vector<std::uint8_t>& bytes) {
  PayloadReader r{bytes};
  ProcessPayload p;
  p.process_id = r.str();
  p.algorithm_digest = r.digest();
  const std::uint32_t n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string node = r.str();
    std::vector<std::uint8_t> pk = r.bytes();
    p.consortium.emplace_back(std::move(node), std::move(pk));
  }
  p.current_iteration = r.u32();
  const std::uint8_t st = r.u8();
  if (st > 1) throw LedgerError("payload decode: bad process status");
  p.status = static_cast<ProcessStatus>(st);
  r.done();
  return p;
}

ExecutionPayload decode_execution_payload(const std::vector<std::uint8_t>& bytes) {
  PayloadReader r{bytes};
  ExecutionPayload p;
  p.process_id = r.str();
  p.round = r.u32();
  const std::uint8_t op = r.u8();
  if (op > 2) throw LedgerError("payload decode: bad execution op");
  p.op = static_cast<ExecOp>(op);
  p.payload_digest = r.digest();
  r.done();
  return p;
}

ModelPayload decode_model_payload(const std::vector<std::uint8_t>& bytes) {
  PayloadReader r{bytes};
  ModelPayload p;
  p.process_id = r.str();
  p.model_digest = r.digest();
  r.done();
  return p;
}

Digest record_hash(const LedgerRecord& r) {
  std::vector<std::uint8_t> buf;
  put_u64(buf, r.index);
  buf.insert(buf.end(), r.prev_hash.begin(), r.prev_hash.end());
  buf.push_back(static_cast<std::uint8_t>(r.type));
  put_bytes(buf, r.payload);
  put_string(buf, r.author);
  put_bytes(buf, r.signature);
  return sha256(buf);
}

namespace {

// Shared validation used both at append time and during replay verification.
// `authors` and `processes` are updated on success.
std::string validate_record(const LedgerRecord& r, const Digest& expect_prev, std::uint64_t expect_index,
                            std::map<std::string, std::vector<std::uint8_t>>& authors,
                            std::map<std::string, ProcessPayload>& processes) {
  if (r.index != expect_index) return "index not contiguous";
  if (r.prev_hash != expect_prev) return "previous-hash link broken";
  if (r.author.empty()) return "empty author";

  // Decode the payload; binding/consistency checks per record type.
  std::vector<std::uint8_t> signer_key;
  try {
    switch (r.type) {
      case RecordType::image: {
        const ImagePayload p = decode_image_payload(r.payload);
        if (p.scheme != "ed25519") return "unsupported signature scheme '" + p.scheme + "'";
        auto it = authors.find(r.author);
        if (it == authors.end()) {
          if (p.author_pubkey.size() != 32) return "bad embedded public key";
          signer_key = p.author_pubkey;
        } else {
          if (it->second != p.author_pubkey) return "author public key rebind attempt";
          signer_key = it->second;
        }
        break;
      }
      case RecordType::process: {
        const ProcessPayload p = decode_process_payload(r.payload);
        auto it = authors.find(r.author);
        if (it == authors.end()) return "process author has no registered key";
        signer_key = it->second;
        for (const auto& [node, pk] : p.consortium) {
          auto found = authors.find(node);
          if (found != authors.end() && found->second != pk) {
            return "consortium member key rebind attempt";
          }
          if (pk.size() != 32) return "bad consortium public key";
        }
        auto existing = processes.find(p.process_id);
        if (existing != processes.end()) {
          if (existing->second.status == ProcessStatus::completed &&
              p.status == ProcessStatus::running) {
            return "process status cannot move from completed back to running";
          }
        }
        break;
      }
      case RecordType::execution: {
        const ExecutionPayload p = decode_execution_payload(r.payload);
        auto proc = processes.find(p.process_id);
        if (proc == processes.end()) return "execution references unknown process";
        if (proc->second.status != ProcessStatus::running) return "execution on a non-running process";
        const auto& members = proc->second.consortium;
        const bool in_consortium = std::any_of(members.begin(), members.end(),
                                               [&](const auto& m) { return m.first == r.author; });
        if (!in_consortium) return "execution author not in consortium";
        auto it = authors.find(r.author);
        if (it == authors.end()) return "execution author has no registered key";
        signer_key = it->second;
        break;
      }
      case RecordType::model: {
        const ModelPayload p = decode_model_payload(r.payload);
        auto proc = processes.find(p.process_id);
        if (proc == processes.end()) return "model references unknown process";
        const auto& members = proc->second.consortium;
        const bool in_consortium = std::any_of(members.begin(), members.end(),
                                               [&](const auto& m) { return m.first == r.author; });
        if (!in_consortium) return "model author not in consortium";
        auto it = authors.find(r.author);
        if (it == authors.end()) return "model author has no registered key";
        signer_key = it->second;
        break;
      }
      default:
        return "unknown record type";
    }
  } catch (const LedgerError& e) {
    return e.what();
  }

  if (!ed25519_verify(signer_key, r.payload, r.signature)) return "signature verification failed";

  // Effects: register keys, update process state.
  if (r.type == RecordType::image) {
    const ImagePayload p = decode_image_payload(r.payload);
    authors.emplace(r.author, p.author_pubkey);
  } else if (r.type == RecordType::process) {
    const ProcessPayload p = decode_process_payload(r.payload);
    for (const auto& [node, pk] : p.consortium) authors.emplace(node, pk);
    processes[p.process_id] = p;
  }
  return "";
}

constexpr Digest kGenesisprev{};  // 32 zero bytes

}  // namespace

const LedgerRecord& Ledger::append_signed(RecordType type, std::vector<std::uint8_t> payload,
                                          const std::string& author,
                                          std::vector<std::uint8_t> signature) {
  LedgerRecord r;
  r.index = records_.size();
  r.prev_hash = records_.empty() ? kGenesisprev : records_.back().this_hash;
  r.type = type;
  r.payload = std::move(payload);
  r.author = author;
  r.signature = std::move(signature);

  const std::string err = validate_record(r, r.prev_hash, r.index, authors_, processes_);
  if (!err.empty()) throw LedgerError("ledger append rejected: " + err);
  r.this_hash = record_hash(r);
  records_.push_back(std::move(r));
  return records_.back();
}

const LedgerRecord& Ledger::register_image(std::span<const std::uint8_t> artifact,
                                           const std::string& author, const KeyPair& key) {
  ImagePayload p;
  p.artifact_digest = sha256(artifact);
  p.scheme = "ed25519";
  p.author_pubkey = key.public_key;
  std::vector<std::uint8_t> payload = encode_payload(p);
  std::vector<std::uint8_t> sig = ed25519_sign(key.private_key, payload);
  return append_signed(RecordType::image, std::move(payload), author, std::move(sig));
}

const LedgerRecord& Ledger::create_process(
    const std::string& process_id, const Digest& algorithm_digest,
    std::vector<std::pair<std::string, std::vector<std::uint8_t>>> consortium,
    const std::string& author, const KeyPair& key) {
  ProcessPayload p;
  p.process_id = process_id;
  p.algorithm_digest = algorithm_digest;
  p.consortium = std::move(consortium);
  p.current_iteration = 0;
  p.status = ProcessStatus::running;
  std::vector<std::uint8_t> payload = encode_payload(p);
  std::vector<std::uint8_t> sig = ed25519_sign(key.private_key, payload);
  return append_signed(RecordType::process, std::move(payload), author, std::move(sig));
}

const LedgerRecord& Ledger::update_process(const std::string& process_id, std::uint32_t iteration,
                                           ProcessStatus status, const std::string& author,
                                           const KeyPair& key) {
  auto it = processes_.find(process_id);
  if (it == processes_.end()) throw LedgerError("update_process: unknown process");
  ProcessPayload p = it->second;
  p.current_iteration = iteration;
  p.status = status;
  std::vector<std::uint8_t> payload = encode_payload(p);
  std::vector<std::uint8_t> sig = ed25519_sign(key.private_key, payload);
  return append_signed(RecordType::process, std::move(payload), author, std::move(sig));
}

const LedgerRecord& Ledger::append_execution_record(const std::string& process_id,
                                                    std::uint32_t round, ExecOp op,
                                                    const std::string& author,
                                                    const Digest& payload_digest,
                                                    const KeyPair& key) {
  ExecutionPayload p{process_id, round, op, payload_digest};
  std::vector<std::uint8_t> payload = encode_payload(p);
  std::vector<std::uint8_t> sig = ed25519_sign(key.private_key, payload);
  return append_signed(RecordType::execution, std::move(payload), author, std::move(sig));
}

const LedgerRecord& Ledger::append_model_record(const std::string& process_id,
                                                const Digest& model_digest,
                                                const std::string& author, const KeyPair& key) {
  ModelPayload p{process_id, model_digest};
  std::vector<std::uint8_t> payload = encode_payload(p);
  std::vector<std::uint8_t> sig = ed25519_sign(key.private_key, payload);
  return append_signed(RecordType::model, std::move(payload), author, std::move(sig));
}

std::optional<std::vector<std::uint8_t>> Ledger::public_key_of(const std::string& author) const {
  auto it = authors_.find(author);
  if (it == authors_.end()) return std::nullopt;
  return it->second;
}

std::optional<ProcessPayload> Ledger::process_state(const std::string& process_id) const {
  auto it = processes_.find(process_id);
  if (it == processes_.end()) return std::nullopt;
  return it->second;
}

ChainVerdict verify_chain(const std::vector<LedgerRecord>& records) {
  std::map<std::string, std::vector<std::uint8_t>> authors;
  std::map<std::string, ProcessPayload> processes;
  Digest prev = kGenesisprev;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const LedgerRecord& r = records[i];
    std::string err = validate_record(r, prev, i, authors, processes);
    if (err.empty() && record_hash(r) != r.this_hash) err = "record hash mismatch";
    if (!err.empty()) return {false, i, err};
    prev = r.this_hash;
  }
  return {true, 0, ""};
}

std::vector<LedgerRecord> audit_query(const std::vector<LedgerRecord>& records,
                                      const AuditFilter& filter) {
  std::vector<LedgerRecord> out;
  for (const LedgerRecord& r : records) {
    if (filter.type && r.type != *filter.type) continue;
    if (filter.author && r.author != *filter.author) continue;
    if (filter.process_id || filter.round || filter.artifact_digest) {
      std::optional<std::string> pid;
      std::optional<std::uint32_t> round;
      std::optional<Digest> digest;
      try {
        switch (r.type) {
          case RecordType::image: {
            const ImagePayload p = decode_image_payload(r.payload);
            digest = p.artifact_digest;
            break;
          }
          case RecordType::process: {
            const ProcessPayload p = decode_process_payload(r.payload);
            pid = p.process_id;
            digest = p.algorithm_digest;
            break;
          }
          case RecordType::execution: {
            const ExecutionPayload p = decode_execution_payload(r.payload);
            pid = p.process_id;
            round = p.round;
            digest = p.payload_digest;
            break;
          }
          case RecordType::model: {
            const ModelPayload p = decode_model_payload(r.payload);
            pid = p.process_id;
            digest = p.model_digest;
            break;
          }
        }
      } catch (const LedgerError&) {
        continue;  // undecodable payloads never match content filters
      }
      if (filter.process_id && pid != filter.process_id) continue;
      if (filter.round && round != filter.round) continue;
      if (filter.artifact_digest && digest != filter.artifact_digest) continue;
    }
    out.push_back(r);
  }
  return out;
}

std::vector<LedgerRecord> Ledger::query(const AuditFilter& filter) const {
  return audit_query(records_, filter);
}

std::vector<std::vector<std::uint64_t>> duplicate_execution_digests(
    const std::vector<LedgerRecord>& records) {
  std::map<std::string, std::vector<std::uint64_t>> by_digest;
  for (const LedgerRecord& r : records) {
    if (r.type != RecordType::execution) continue;
    try {
      const ExecutionPayload p = decode_execution_payload(r.payload);
      by_digest[to_hex(p.payload_digest)].push_back(r.index);
    } catch (const LedgerError&) {
    }
  }
  std::vector<std::vector<std::uint64_t>> groups;
  for (auto& [digest, indices] : by_digest) {
    if (indices.size() > 1) groups.push_back(std::move(indices));
  }
  return groups;
}

namespace {

const char* type_name(RecordType t) {
  switch (t) {
    case RecordType::image: return "image";
    case RecordType::process: return "process";
    case RecordType::execution: return "execution";
    case RecordType::model: return "model";
  }
  return "?";
}

RecordType type_from_name(const std::string& s) {
  if (s == "image") return RecordType::image;
  if (s == "process") return RecordType::process;
  if (s == "execution") return RecordType::execution;
  if (s == "model") return RecordType::model;
  throw LedgerError("unknown record type '" + s + "'");
}

}  // namespace

void save_ledger_jsonl(const std::vector<LedgerRecord>& records, std::ostream& out) {
  for (const LedgerRecord& r : records) {
    nlohmann::json j{{"index", r.index},
                     {"prev_hash", to_hex(r.prev_hash)},
                     {"type", type_name(r.type)},
                     {"payload", to_hex(r.payload)},
                     {"author", r.author},
                     {"signature", to_hex(r.signature)},
                     {"this_hash", to_hex(r.this_hash)}};
    out << j.dump() << "\n";
  }
}

void Ledger::save_jsonl(std::ostream& out) const { save_ledger_jsonl(records_, out); }

std::vector<LedgerRecord> load_ledger_jsonl(std::istream& in) {
  std::vector<LedgerRecord> records;
  std::string line;
  std::size_t lineno = 0;
  auto hex32 = [](const std::string& h, std::size_t lineno) {
    const std::vector<std::uint8_t> b = from_hex(h);
    if (b.size() != 32) throw LedgerError("ledger line " + std::to_string(lineno) + ": bad digest length");
    Digest d{};
    std::copy(b.begin(), b.end(), d.begin());
    return d;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw LedgerError("ledger line " + std::to_string(lineno) + ": bad JSON");
    LedgerRecord r;
    r.index = j.at("index").get<std::uint64_t>();
    r.prev_hash = hex32(j.at("prev_hash").get<std::string>(), lineno);
    r.type = type_from_name(j.at("type").get<std::string>());
    r.payload = from_hex(j.at("payload").get<std::string>());
    r.author = j.at("author").get<std::string>();
    r.signature = from_hex(j.at("signature").get<std::string>());
    r.this_hash = hex32(j.at("this_hash").get<std::string>(), lineno);
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace fedforest
