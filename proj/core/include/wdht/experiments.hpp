#pragma once

#include <cstdint>
#include <vector>

#include "wdht/datastore.hpp"
#include "wdht/eval.hpp"
#include "wdht/hashnet.hpp"

namespace wdht {

// Train, encode database + queries, rank and score one configuration.
double evaluate_map(const NetworkParams& params, const Matrix& db_features,
                    const LabelMatrix& db_labels, const Matrix& query_features,
                    const LabelMatrix& query_labels, size_t eval_k,
                    unsigned threads = 1);

struct AggregationCell {
  Aggregation mode = Aggregation::kMean;
  size_t bits = 0;
  double map = 0.0;
};

// One trained model per (mode, bits) combination, all under hyper.seed, each
// scored by mAP@eval_k on the query split.
std::vector<AggregationCell> compare_aggregations(
    const TaggedDataset& data, const DatasetSplit& data_split,
    const LayerDims& base_dims, const HyperParams& hyper,
    const std::vector<Aggregation>& modes, const std::vector<size_t>& bit_widths,
    size_t eval_k);

struct GridSearchResult {
  std::vector<double> lambda2_values;
  std::vector<double> lambda3_values;
  // map[i * lambda3_values.size() + j] scores (lambda2_values[i],
  // lambda3_values[j]).
  std::vector<double> map;
  size_t best_lambda2_index = 0;
  size_t best_lambda3_index = 0;
  double best_map = 0.0;

  double cell(size_t i, size_t j) const {
    return map[i * lambda3_values.size() + j];
  }
};

// Exhaustive (lambda2, lambda3) sweep with lambda1 pinned at 1.0. Each cell
// trains on the fit portion of an internal split and is scored by validation
// mAP@eval_k; ties prefer smaller lambda3, then smaller lambda2.
GridSearchResult grid_search(const TaggedDataset& data, Aggregation aggregation,
                             const std::vector<double>& lambda2_values,
                             const std::vector<double>& lambda3_values,
                             double validation_fraction, const LayerDims& dims,
                             const HyperParams& base_hyper, size_t eval_k);

}  // namespace wdht
