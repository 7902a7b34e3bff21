#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wdht/codec.hpp"

namespace wdht {

struct Neighbor {
  uint64_t id = 0;
  uint32_t distance = 0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

uint32_t hamming_distance(const HashCode& a, const HashCode& b);
uint32_t hamming_distance(std::span<const uint64_t> a,
                          std::span<const uint64_t> b);

// Exact linear-scan index over a packed code database. Ranking is total:
// distance ascending, then database row ascending, so results reproduce
// across runs and thread counts.
class HammingIndex {
 public:
  explicit HammingIndex(CodeMatrix codes);
  HammingIndex(CodeMatrix codes, std::vector<uint64_t> ids);

  size_t count() const { return codes_.count(); }
  uint32_t bits() const { return codes_.bits(); }
  const CodeMatrix& codes() const { return codes_; }
  const std::vector<uint64_t>& ids() const { return ids_; }

  // Top min(K, count) neighbors of one query.
  std::vector<Neighbor> query_topk(const HashCode& query, size_t k) const;

  // Per-query rankings, truncated to k (k = count gives full rankings).
  // Queries are independent; threads > 1 splits them across workers.
  std::vector<std::vector<Neighbor>> rank_all(const CodeMatrix& queries,
                                              size_t k,
                                              unsigned threads = 1) const;

 private:
  CodeMatrix codes_;
  std::vector<uint64_t> ids_;
};

}  // namespace wdht
