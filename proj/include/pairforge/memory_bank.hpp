#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pairforge/dataset.hpp"

namespace pairforge {

struct MemoryEntry {
  std::vector<double> embedding;
  AgentPair pair;
  double score = 0.0;
  std::string seed_id;
  std::uint64_t admitted_at = 0;

  bool operator==(const MemoryEntry&) const = default;
};

struct BankStats {
  std::uint64_t admitted = 0;
  std::uint64_t rejected = 0;
  std::uint64_t evicted = 0;

  bool operator==(const BankStats&) const = default;
};

/// Embeddings of instructions whose winning candidate scored at least tau,
/// each tagged with the pair that produced it. Bounded FIFO: when full, the
/// oldest entry makes room for the new one. Queries are exact cosine scans.
class MemoryBank {
 public:
  MemoryBank(std::size_t dim, std::size_t capacity, double tau);

  std::size_t dim() const { return dim_; }
  std::size_t capacity() const { return capacity_; }
  double tau() const { return tau_; }
  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  const BankStats& stats() const { return stats_; }

  /// Stores the entry iff entry.score >= tau. Returns whether it was stored.
  /// Throws IntegrityError on a dimension mismatch.
  bool admit(MemoryEntry entry);

  /// Distinct pairs attached to the n entries most cosine-similar to
  /// `query`, best first. Equal similarities rank the older entry first.
  std::vector<AgentPair> query_pool(std::span<const double> query, std::size_t n) const;
  /// Same ranking, returned as indices into entries() (oldest = 0).
  std::vector<std::size_t> query_entries(std::span<const double> query, std::size_t n) const;
  /// Similarity of `query` to every entry, oldest first. `parallel` selects
  /// the OpenMP kernel.
  std::vector<double> similarities(std::span<const double> query, bool parallel = true) const;

  /// Entries oldest first.
  std::vector<MemoryEntry> entries() const;
  std::map<AgentPair, std::size_t> per_pair_counts() const;

  Json to_json() const;
  static MemoryBank from_json(const Json& j);

  bool operator==(const MemoryBank& other) const;

 private:
  std::size_t slot(std::size_t logical) const { return (head_ + logical) % capacity_; }

  std::size_t dim_;
  std::size_t capacity_;
  double tau_;
  // Ring buffer: embeddings_ holds capacity_ rows, meta_ the other fields.
  std::vector<double> embeddings_;
  std::vector<MemoryEntry> meta_;  // embedding member left empty
  std::size_t head_ = 0;
  std::size_t size_ = 0;
  BankStats stats_;
};

}  // namespace pairforge
