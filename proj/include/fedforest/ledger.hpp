#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedforest/crypto.hpp"

namespace fedforest {

enum class RecordType : std::uint8_t { image = 0, process = 1, execution = 2, model = 3 };
enum class ExecOp : std::uint8_t { fit = 0, share = 1, incident = 2 };
enum class ProcessStatus : std::uint8_t { running = 0, completed = 1 };

/// One hash-chained, signed entry. The signature covers the canonical payload
/// bytes (position-independent, so replays are valid new records and are
/// caught by the audit layer, not the chain layer); this_hash covers the
/// whole record including the signature.
struct LedgerRecord {
  std::uint64_t index = 0;
  Digest prev_hash{};
  RecordType type = RecordType::image;
  std::vector<std::uint8_t> payload;
  std::string author;
  std::vector<std::uint8_t> signature;
  Digest this_hash{};
};

struct ImagePayload {
  Digest artifact_digest{};
  std::string scheme;  // signature scheme name; makes chains self-describing
  std::vector<std::uint8_t> author_pubkey;
};

struct ProcessPayload {
  std::string process_id;
  Digest algorithm_digest{};
  std::vector<std::pair<std::string, std::vector<std::uint8_t>>> consortium;  // (node, pubkey)
  std::uint32_t current_iteration = 0;
  ProcessStatus status = ProcessStatus::running;
};

struct ExecutionPayload {
  std::string process_id;
  std::uint32_t round = 0;
  ExecOp op = ExecOp::fit;
  Digest payload_digest{};
};

struct ModelPayload {
  std::string process_id;
  Digest model_digest{};
};

std::vector<std::uint8_t> encode_payload(const ImagePayload&);
std::vector<std::uint8_t> encode_payload(const ProcessPayload&);
std::vector<std::uint8_t> encode_payload(const ExecutionPayload&);
std::vector<std::uint8_t> encode_payload(const ModelPayload&);
ImagePayload decode_image_payload(const std::vector<std::uint8_t>&);
ProcessPayload decode_process_payload(const std::vector<std::uint8_t>&);
ExecutionPayload decode_execution_payload(const std::vector<std::uint8_t>&);
ModelPayload decode_model_payload(const std::vector<std::uint8_t>&);

struct ChainVerdict {
  bool ok = true;
  std::uint64_t first_bad_index = 0;
  std::string reason;
};

struct AuditFilter {
  std::optional<Digest> artifact_digest;  // matches image artifact / execution payload / model digests
  std::optional<std::string> process_id;
  std::optional<std::string> author;
  std::optional<std::uint32_t> round;
  std::optional<RecordType> type;
};

struct LedgerError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Append-only in-process ledger shared by all simulated agents. Signatures
/// are checked before acceptance; author public keys bind on first
/// registration (image records self-register their author, process records
/// register the consortium) and can never be rebound.
class Ledger {
 public:
  const LedgerRecord& register_image(std::span<const std::uint8_t> artifact,
                                     const std::string& author, const KeyPair& key);
  const LedgerRecord& create_process(const std::string& process_id, const Digest& algorithm_digest,
                                     std::vector<std::pair<std::string, std::vector<std::uint8_t>>> consortium,
                                     const std::string& author, const KeyPair& key);
  const LedgerRecord& update_process(const std::string& process_id, std::uint32_t iteration,
                                     ProcessStatus status, const std::string& author,
                                     const KeyPair& key);
  const LedgerRecord& append_execution_record(const std::string& process_id, std::uint32_t round,
                                              ExecOp op, const std::string& author,
                                              const Digest& payload_digest, const KeyPair& key);
  const LedgerRecord& append_model_record(const std::string& process_id, const Digest& model_digest,
                                          const std::string& author, const KeyPair& key);

  /// Validation gate used by every append: checks chain position, payload
  /// decodability, author-key binding, process preconditions, and the
  /// signature. Throws LedgerError on rejection. Exposed so tests can attempt
  /// forged signatures directly.
  const LedgerRecord& append_signed(RecordType type, std::vector<std::uint8_t> payload,
                                    const std::string& author, std::vector<std::uint8_t> signature);

  const std::vector<LedgerRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  std::optional<std::vector<std::uint8_t>> public_key_of(const std::string& author) const;
  std::optional<ProcessPayload> process_state(const std::string& process_id) const;

  std::vector<LedgerRecord> query(const AuditFilter& filter) const;

  void save_jsonl(std::ostream& out) const;

 private:
  std::vector<LedgerRecord> records_;
  std::map<std::string, std::vector<std::uint8_t>> authors_;
  std::map<std::string, ProcessPayload> processes_;
};

/// Full replay: hash links, recomputed record hashes, author-key bindings and
/// every signature. Returns the first violating index.
ChainVerdict verify_chain(const std::vector<LedgerRecord>& records);

std::vector<LedgerRecord> load_ledger_jsonl(std::istream& in);
void save_ledger_jsonl(const std::vector<LedgerRecord>& records, std::ostream& out);

std::vector<LedgerRecord> audit_query(const std::vector<LedgerRecord>& records,
                                      const AuditFilter& filter);

/// Groups of execution-record indices sharing a payload digest (replay
/// flagging).
std::vector<std::vector<std::uint64_t>> duplicate_execution_digests(
    const std::vector<LedgerRecord>& records);

Digest record_hash(const LedgerRecord& r);

}  // namespace fedforest
