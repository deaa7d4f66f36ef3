#include "pairforge/memory_bank.hpp"

#include <algorithm>

#include "pairforge/error.hpp"
#include "pairforge/kernels.hpp"

namespace pairforge {

MemoryBank::MemoryBank(std::size_t dim, std::size_t capacity, double tau) : dim_(dim), capacity_(capacity), tau_(tau) {
  if (dim == 0) throw ConfigError("memory bank dimension must be >= 1");
  if (capacity == 0) throw ConfigError("memory bank capacity must be >= 1");
}

bool MemoryBank::admit(MemoryEntry entry) {
  if (entry.embedding.size() != dim_) {
    throw IntegrityError("memory entry has dimension " + std::to_string(entry.embedding.size()) + ", bank expects " +
                         std::to_string(dim_));
  }
  if (!(entry.score >= tau_)) {
    ++stats_.rejected;
    return false;
  }
  std::vector<double> embedding = std::move(entry.embedding);
  entry.embedding.clear();
  if (size_ < capacity_) {
    // Still filling: head_ is 0 and rows are appended in order.
    embeddings_.insert(embeddings_.end(), embedding.begin(), embedding.end());
    meta_.push_back(std::move(entry));
    ++size_;
  } else {
    std::copy(embedding.begin(), embedding.end(), embeddings_.begin() + static_cast<std::ptrdiff_t>(head_ * dim_));
    meta_[head_] = std::move(entry);
    head_ = (head_ + 1) % capacity_;
    ++stats_.evicted;
  }
  ++stats_.admitted;
  return true;
}

std::vector<double> MemoryBank::similarities(std::span<const double> query, bool parallel) const {
  if (query.size() != dim_) {
    throw IntegrityError("query has dimension " + std::to_string(query.size()) + ", bank expects " +
                         std::to_string(dim_));
  }
  auto physical = parallel ? kernels::cosine_scan_parallel(query, embeddings_, dim_)
                           : kernels::cosine_scan_serial(query, embeddings_, dim_);
  std::vector<double> logical(size_);
  for (std::size_t i = 0; i < size_; ++i) logical[i] = physical[slot(i)];
  return logical;
}

std::vector<std::size_t> MemoryBank::query_entries(std::span<const double> query, std::size_t n) const {
  if (n == 0) throw PreconditionError("query size n must be >= 1");
  auto scores = similarities(query);
  return kernels::top_n(scores, n);
}

std::vector<AgentPair> MemoryBank::query_pool(std::span<const double> query, std::size_t n) const {
  std::vector<AgentPair> pool;
  for (auto i : query_entries(query, n)) {
    auto pair = meta_[slot(i)].pair;
    if (std::find(pool.begin(), pool.end(), pair) == pool.end()) pool.push_back(pair);
  }
  return pool;
}

std::vector<MemoryEntry> MemoryBank::entries() const {
  std::vector<MemoryEntry> out;
  out.reserve(size_);
  for (std::size_t i = 0; i < size_; ++i) {
    const auto s = slot(i);
    MemoryEntry e = meta_[s];
    e.embedding.assign(embeddings_.begin() + static_cast<std::ptrdiff_t>(s * dim_),
                       embeddings_.begin() + static_cast<std::ptrdiff_t>((s + 1) * dim_));
    out.push_back(std::move(e));
  }
  return out;
}

std::map<AgentPair, std::size_t> MemoryBank::per_pair_counts() const {
  std::map<AgentPair, std::size_t> counts;
  for (std::size_t i = 0; i < size_; ++i) ++counts[meta_[i].pair];
  return counts;
}

Json MemoryBank::to_json() const {
  Json entries = Json::array();
  for (const auto& e : this->entries()) {
    entries.push_back({{"embedding", e.embedding},
                       {"pair", e.pair.to_string()},
                       {"score", e.score},
                       {"seed_id", e.seed_id},
                       {"admitted_at", e.admitted_at}});
  }
  return {{"dim", dim_},
          {"capacity", capacity_},
          {"tau", tau_},
          {"stats", {{"admitted", stats_.admitted}, {"rejected", stats_.rejected}, {"evicted", stats_.evicted}}},
          {"entries", entries}};
}

MemoryBank MemoryBank::from_json(const Json& j) {
  try {
    MemoryBank bank(j.at("dim").get<std::size_t>(), j.at("capacity").get<std::size_t>(), j.at("tau").get<double>());
    for (const auto& e : j.at("entries")) {
      MemoryEntry entry{e.at("embedding").get<std::vector<double>>(), AgentPair::parse(e.at("pair").get<std::string>()),
                        e.at("score").get<double>(), e.at("seed_id").get<std::string>(),
                        e.at("admitted_at").get<std::uint64_t>()};
      if (!bank.admit(std::move(entry))) throw ParseError("memory bank entry below threshold");
    }
    if (bank.size() != j.at("entries").size()) throw ParseError("memory bank holds more entries than its capacity");
    const auto& s = j.at("stats");
    bank.stats_ = {s.at("admitted").get<std::uint64_t>(), s.at("rejected").get<std::uint64_t>(),
                   s.at("evicted").get<std::uint64_t>()};
    return bank;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("memory bank: ") + e.what());
  }
}

bool MemoryBank::operator==(const MemoryBank& other) const {
  return dim_ == other.dim_ && capacity_ == other.capacity_ && tau_ == other.tau_ && stats_ == other.stats_ &&
         entries() == other.entries();
}

}  // namespace pairforge
