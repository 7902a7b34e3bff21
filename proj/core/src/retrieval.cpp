#include "wdht/retrieval.hpp"

#include <algorithm>
#include <bit>
#include <numeric>
#include <thread>

#include "wdht/errors.hpp"

namespace wdht {

uint32_t hamming_distance(std::span<const uint64_t> a,
                          std::span<const uint64_t> b) {
  uint32_t dist = 0;
  for (size_t w = 0; w < a.size(); ++w) {
    dist += static_cast<uint32_t>(std::popcount(a[w] ^ b[w]));
  }
  return dist;
}

uint32_t hamming_distance(const HashCode& a, const HashCode& b) {
  if (a.bits != b.bits) {
    throw DataError("hamming distance between codes of different widths: " +
                    std::to_string(a.bits) + " vs " + std::to_string(b.bits));
  }
  return hamming_distance(std::span<const uint64_t>(a.words),
                          std::span<const uint64_t>(b.words));
}

HammingIndex::HammingIndex(CodeMatrix codes) : codes_(std::move(codes)) {
  ids_.resize(codes_.count());
  std::iota(ids_.begin(), ids_.end(), uint64_t{0});
}

HammingIndex::HammingIndex(CodeMatrix codes, std::vector<uint64_t> ids)
    : codes_(std::move(codes)), ids_(std::move(ids)) {
  if (ids_.size() != codes_.count()) {
    throw DataError("id list length " + std::to_string(ids_.size()) +
                    " does not match code count " +
                    std::to_string(codes_.count()));
  }
}

std::vector<Neighbor> HammingIndex::query_topk(const HashCode& query,
                                               size_t k) const {
  if (query.bits != codes_.bits()) {
    throw DataError("query width " + std::to_string(query.bits) +
                    " does not match database width " +
                    std::to_string(codes_.bits()));
  }
  if (k == 0) throw ConfigError("query_topk requires k >= 1");

  const size_t n = codes_.count();
  const std::span<const uint64_t> q(query.words);

  // (distance, row) pairs; row index doubles as the tie-breaker.
  std::vector<std::pair<uint32_t, uint64_t>> scored(n);
  for (size_t i = 0; i < n; ++i) {
    scored[i] = {hamming_distance(q, codes_.row(i)), i};
  }

  const size_t keep = std::min(k, n);
  std::partial_sort(scored.begin(), scored.begin() + keep, scored.end());

  std::vector<Neighbor> out(keep);
  for (size_t i = 0; i < keep; ++i) {
    out[i] = {ids_[scored[i].second], scored[i].first};
  }
  return out;
}

std::vector<std::vector<Neighbor>> HammingIndex::rank_all(
    const CodeMatrix& queries, size_t k, unsigned threads) const {
  if (queries.bits() != codes_.bits()) {
    throw DataError("query width " + std::to_string(queries.bits()) +
                    " does not match database width " +
                    std::to_string(codes_.bits()));
  }
  std::vector<std::vector<Neighbor>> results(queries.count());
  auto run_range = [&](size_t lo, size_t hi) {
    for (size_t qi = lo; qi < hi; ++qi) {
      results[qi] = query_topk(queries.code(qi), k);
    }
  };
  if (threads <= 1 || queries.count() < 2) {
    run_range(0, queries.count());
    return results;
  }
  const size_t nq = queries.count();
  const unsigned workers =
      static_cast<unsigned>(std::min<size_t>(threads, nq));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned t = 0; t < workers; ++t) {
    const size_t lo = nq * t / workers;
    const size_t hi = nq * (t + 1) / workers;
    pool.emplace_back(run_range, lo, hi);
  }
  for (auto& th : pool) th.join();
  return results;
}

}  // namespace wdht
