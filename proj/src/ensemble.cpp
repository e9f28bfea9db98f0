#include "fedforest/ensemble.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "fedforest/ranking.hpp"
#include "fedforest/tree_codec.hpp"

namespace fedforest {

bool Ensemble::contains(EstimatorId id) const {
  return std::any_of(members_.begin(), members_.end(),
                     [&](const TreePtr& t) { return t->id == id; });
}

std::vector<EstimatorId> Ensemble::member_ids() const {
  std::vector<EstimatorId> ids;
  ids.reserve(members_.size());
  for (const TreePtr& t : members_) ids.push_back(t->id);
  return ids;
}

std::size_t Ensemble::add(const std::vector<TreePtr>& incoming) {
  if (n_max_hint_ && members_.capacity() < *n_max_hint_) members_.reserve(*n_max_hint_);
  std::size_t inserted = 0;
  for (const TreePtr& t : incoming) {
    if (!t) throw std::invalid_argument("Ensemble::add: null tree");
    if (contains(t->id)) continue;  // re-delivery: the incumbent wins
    members_.push_back(t);
    ++inserted;
  }
  if (inserted > 0) cached_order_.reset();
  return inserted;
}

std::vector<std::size_t> Ensemble::ranked_order(const KernelOptions& ranker) const {
  const bool same_opts = cached_opts_.normalize == ranker.normalize &&
                         cached_opts_.feature_scale == ranker.feature_scale;
  if (cached_order_ && same_opts && cached_order_->size() == members_.size()) {
    return *cached_order_;
  }
  const GramMatrix g = gram(members_, ranker);
  const std::vector<EstimatorId> ids = p_greedy_rank(g, members_.size());
  std::map<EstimatorId, std::size_t> index_of;
  for (std::size_t i = 0; i < members_.size(); ++i) index_of[members_[i]->id] = i;
  std::vector<std::size_t> order;
  order.reserve(ids.size());
  for (EstimatorId id : ids) order.push_back(index_of.at(id));
  cached_order_ = order;
  cached_opts_ = ranker;
  return order;
}

std::vector<TreePtr> Ensemble::get_top(std::size_t k, const KernelOptions& ranker) const {
  std::vector<TreePtr> top;
  if (k == 0 || members_.empty()) return top;
  const std::vector<std::size_t> order = ranked_order(ranker);
  const std::size_t take = std::min(k, members_.size());
  top.reserve(take);
  for (std::size_t i = 0; i < take; ++i) top.push_back(members_[order[i]]);
  return top;
}

void Ensemble::crop(std::size_t k, const KernelOptions& ranker) {
  if (k < 1) throw std::invalid_argument("Ensemble::crop: k must be >= 1");
  std::vector<TreePtr> kept = get_top(k, ranker);
  members_ = std::move(kept);
  std::vector<std::size_t> identity(members_.size());
  for (std::size_t i = 0; i < identity.size(); ++i) identity[i] = i;
  cached_order_ = identity;
  cached_opts_ = ranker;
}

double Ensemble::predict(const FeatureVector& x, PredictMode mode) const {
  if (members_.empty()) {
    throw std::logic_error("Ensemble::predict: empty ensemble (fit before predicting)");
  }
  double acc = 0.0;
  for (const TreePtr& t : members_) {
    const double s = t->predict(x);
    acc += (mode == PredictMode::average) ? s : (s > 0.5 ? 1.0 : 0.0);
  }
  return acc / static_cast<double>(members_.size());
}

namespace {

void put_u32_stream(std::ostream& out, std::uint32_t v) {
  char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8), static_cast<char>(v >> 16),
               static_cast<char>(v >> 24)};
  out.write(b, 4);
}

std::uint32_t get_u32_stream(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::runtime_error("load_ensemble: truncated container");
  return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
         static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

constexpr char kEnsMagic[4] = {'F', 'E', 'N', 'S'};

}  // namespace

void save_ensemble(const Ensemble& e, std::ostream& out,
                   const std::vector<std::uint32_t>* creation_rounds) {
  nlohmann::json manifest;
  manifest["version"] = 1;
  nlohmann::json ids = nlohmann::json::array();
  for (const TreePtr& t : e.members()) {
    ids.push_back({{"origin", t->id.origin}, {"counter", t->id.counter}});
  }
  manifest["members"] = ids;
  if (creation_rounds) {
    if (creation_rounds->size() != e.size()) {
      throw std::invalid_argument("save_ensemble: creation_rounds size mismatch");
    }
    manifest["creation_rounds"] = *creation_rounds;
  }
  const std::string mbytes = manifest.dump();

  out.write(kEnsMagic, 4);
  put_u32_stream(out, static_cast<std::uint32_t>(mbytes.size()));
  out.write(mbytes.data(), static_cast<std::streamsize>(mbytes.size()));
  put_u32_stream(out, static_cast<std::uint32_t>(e.size()));
  for (const TreePtr& t : e.members()) {
    const std::vector<std::uint8_t> blob = serialize_tree(*t);
    put_u32_stream(out, static_cast<std::uint32_t>(blob.size()));
    out.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
  }
}

Ensemble load_ensemble(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != std::string(kEnsMagic, 4)) {
    throw std::runtime_error("load_ensemble: bad container magic");
  }
  const std::uint32_t mlen = get_u32_stream(in);
  std::string mbytes(mlen, '\0');
  in.read(mbytes.data(), static_cast<std::streamsize>(mlen));
  if (!in) throw std::runtime_error("load_ensemble: truncated manifest");
  const nlohmann::json manifest = nlohmann::json::parse(mbytes);

  const std::uint32_t count = get_u32_stream(in);
  std::vector<TreePtr> trees;
  trees.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t len = get_u32_stream(in);
    std::vector<std::uint8_t> blob(len);
    in.read(reinterpret_cast<char*>(blob.data()), static_cast<std::streamsize>(len));
    if (!in) throw std::runtime_error("load_ensemble: truncated tree blob");
    trees.push_back(std::make_shared<DecisionTree>(deserialize_tree(blob)));
  }
  if (manifest.contains("members") && manifest["members"].size() != trees.size()) {
    throw std::runtime_error("load_ensemble: manifest/member count mismatch");
  }
  Ensemble e;
  e.add(trees);
  return e;
}

std::vector<std::uint8_t> ensemble_to_bytes(const Ensemble& e,
                                            const std::vector<std::uint32_t>* creation_rounds) {
  std::ostringstream oss(std::ios::binary);
  save_ensemble(e, oss, creation_rounds);
  const std::string s = oss.str();
  return std::vector<std::uint8_t>(s.begin(), s.end());
}

}  // namespace fedforest
