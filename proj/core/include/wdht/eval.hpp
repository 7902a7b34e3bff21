#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wdht/datastore.hpp"
#include "wdht/retrieval.hpp"

namespace wdht {

// Ground-truth relevance: 1 iff the sorted label id sets intersect.
bool relevant(const std::vector<uint32_t>& query_labels,
              const std::vector<uint32_t>& db_labels);

// AP over a 0/1 relevance list already truncated to the top K:
//   sum_i precision@i * rel_i / (#relevant within top K), 0 when none.
double average_precision_at_k(const std::vector<uint8_t>& relevance);

// Mean AP over queries; rankings give database ids (rows of db_labels) and
// are truncated to k here.
double map_at_k(const std::vector<std::vector<Neighbor>>& rankings,
                const LabelMatrix& query_labels, const LabelMatrix& db_labels,
                size_t k);

struct PRPoint {
  double recall = 0.0;
  double precision = 0.0;
};

inline constexpr size_t kPrPoints = 1000;

// Precision interpolated at 1000 uniform recall levels t/1000, t = 1..1000:
// precision at the smallest rank whose recall reaches the level, averaged
// over queries that have at least one relevant database item. Requires full
// rankings (every query ranks the whole database).
std::vector<PRPoint> pr_curve(const std::vector<std::vector<Neighbor>>& rankings,
                              const LabelMatrix& query_labels,
                              const LabelMatrix& db_labels);

// CSV "recall,precision", one row per level.
void save_pr_curve(const std::string& path, const std::vector<PRPoint>& curve);

}  // namespace wdht
