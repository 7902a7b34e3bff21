#include "wdht/eval.hpp"

#include <algorithm>
#include <fstream>

#include "wdht/errors.hpp"

namespace wdht {

bool relevant(const std::vector<uint32_t>& query_labels,
              const std::vector<uint32_t>& db_labels) {
  auto a = query_labels.begin();
  auto b = db_labels.begin();
  while (a != query_labels.end() && b != db_labels.end()) {
    if (*a == *b) return true;
    if (*a < *b) ++a; else ++b;
  }
  return false;
}

double average_precision_at_k(const std::vector<uint8_t>& relevance) {
  if (relevance.empty()) throw ConfigError("average precision needs K >= 1");
  double score = 0.0;
  size_t hits = 0;
  for (size_t i = 0; i < relevance.size(); ++i) {
    if (relevance[i]) {
      ++hits;
      score += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  }
  return hits == 0 ? 0.0 : score / static_cast<double>(hits);
}

double map_at_k(const std::vector<std::vector<Neighbor>>& rankings,
                const LabelMatrix& query_labels, const LabelMatrix& db_labels,
                size_t k) {
  if (rankings.empty()) throw DataError("mAP over an empty query set");
  if (rankings.size() != query_labels.count()) {
    throw DataError("ranking count does not match query label count");
  }
  double sum = 0.0;
  for (size_t q = 0; q < rankings.size(); ++q) {
    const auto& ranking = rankings[q];
    const size_t depth = std::min(k, ranking.size());
    std::vector<uint8_t> rel(depth);
    for (size_t i = 0; i < depth; ++i) {
      const uint64_t id = ranking[i].id;
      if (id >= db_labels.count()) {
        throw DataError("ranked id " + std::to_string(id) +
                        " outside database labels");
      }
      rel[i] = relevant(query_labels.rows[q], db_labels.rows[id]) ? 1 : 0;
    }
    sum += average_precision_at_k(rel);
  }
  return sum / static_cast<double>(rankings.size());
}

std::vector<PRPoint> pr_curve(const std::vector<std::vector<Neighbor>>& rankings,
                              const LabelMatrix& query_labels,
                              const LabelMatrix& db_labels) {
  if (rankings.empty()) throw DataError("PR curve over an empty query set");
  if (rankings.size() != query_labels.count()) {
    throw DataError("ranking count does not match query label count");
  }

  std::vector<double> precision_sum(kPrPoints, 0.0);
  size_t counted_queries = 0;

  for (size_t q = 0; q < rankings.size(); ++q) {
    const auto& ranking = rankings[q];
    if (ranking.size() != db_labels.count()) {
      throw DataError("PR curve needs full rankings over the database");
    }
    // 1-based ranks of the relevant items, in ranking order.
    std::vector<size_t> relevant_ranks;
    for (size_t i = 0; i < ranking.size(); ++i) {
      if (relevant(query_labels.rows[q], db_labels.rows[ranking[i].id])) {
        relevant_ranks.push_back(i + 1);
      }
    }
    const size_t total = relevant_ranks.size();
    if (total == 0) continue;  // no relevant items: excluded from the average

    ++counted_queries;
    for (size_t t = 1; t <= kPrPoints; ++t) {
      // Smallest rank reaching recall t/1000 is the rank of relevant item
      // number ceil(t * total / 1000).
      const size_t needed = (t * total + kPrPoints - 1) / kPrPoints;
      const size_t rank = relevant_ranks[needed - 1];
      precision_sum[t - 1] +=
          static_cast<double>(needed) / static_cast<double>(rank);
    }
  }

  if (counted_queries == 0) {
    throw DataError("every query has zero relevant database items");
  }

  std::vector<PRPoint> curve(kPrPoints);
  for (size_t t = 1; t <= kPrPoints; ++t) {
    curve[t - 1].recall = static_cast<double>(t) / kPrPoints;
    curve[t - 1].precision =
        precision_sum[t - 1] / static_cast<double>(counted_queries);
  }
  return curve;
}

void save_pr_curve(const std::string& path, const std::vector<PRPoint>& curve) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  out.precision(17);
  out << "recall,precision\n";
  for (const auto& point : curve) {
    out << point.recall << ',' << point.precision << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace wdht
