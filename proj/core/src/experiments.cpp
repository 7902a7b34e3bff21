#include "wdht/experiments.hpp"

#include "wdht/errors.hpp"

namespace wdht {

double evaluate_map(const NetworkParams& params, const Matrix& db_features,
                    const LabelMatrix& db_labels, const Matrix& query_features,
                    const LabelMatrix& query_labels, size_t eval_k,
                    unsigned threads) {
  const CodeMatrix db_codes = encode(params, db_features);
  const CodeMatrix query_codes = encode(params, query_features);
  const HammingIndex index(db_codes);
  const auto rankings = index.rank_all(query_codes, eval_k, threads);
  return map_at_k(rankings, query_labels, db_labels, eval_k);
}

namespace {

// Trains one wdht-mode model on the train split and returns validation /
// query mAP. Samples whose tags are entirely out of vocabulary are dropped
// from training and from the retrieval database alike.
double train_and_score(const TaggedDataset& data,
                       const std::vector<size_t>& train_ids,
                       const std::vector<size_t>& query_ids,
                       Aggregation aggregation, const LayerDims& dims,
                       const HyperParams& hyper, size_t eval_k) {
  const auto train_tags = gather_tags(data.tags, train_ids);
  const TagStats stats = compute_tag_stats(train_tags);
  const AggregatedCorpus corpus =
      aggregate_corpus(train_tags, data.embeddings, stats, aggregation);
  if (corpus.kept.empty()) {
    throw DataError("no training sample has an in-vocabulary tag");
  }

  std::vector<size_t> usable(corpus.kept.size());
  for (size_t i = 0; i < corpus.kept.size(); ++i) {
    usable[i] = train_ids[corpus.kept[i]];
  }
  const Matrix train_features = gather_rows(data.features, usable);
  const LabelMatrix db_labels = gather_labels(data.labels, usable);
  const Matrix query_features = gather_rows(data.features, query_ids);
  const LabelMatrix query_labels = gather_labels(data.labels, query_ids);

  const TrainResult trained =
      train_wdht(train_features, corpus.vectors, dims, hyper);
  return evaluate_map(trained.params, train_features, db_labels, query_features,
                      query_labels, eval_k);
}

}  // namespace

std::vector<AggregationCell> compare_aggregations(
    const TaggedDataset& data, const DatasetSplit& data_split,
    const LayerDims& base_dims, const HyperParams& hyper,
    const std::vector<Aggregation>& modes, const std::vector<size_t>& bit_widths,
    size_t eval_k) {
  if (modes.empty() || bit_widths.empty()) {
    throw ConfigError("aggregation comparison needs at least one mode and one bit width");
  }
  std::vector<AggregationCell> table;
  table.reserve(modes.size() * bit_widths.size());
  for (const Aggregation mode : modes) {
    for (const size_t bits : bit_widths) {
      LayerDims dims = base_dims;
      dims.bits = bits;
      AggregationCell cell;
      cell.mode = mode;
      cell.bits = bits;
      cell.map = train_and_score(data, data_split.train_ids,
                                 data_split.query_ids, mode, dims, hyper,
                                 eval_k);
      table.push_back(cell);
    }
  }
  return table;
}

GridSearchResult grid_search(const TaggedDataset& data, Aggregation aggregation,
                             const std::vector<double>& lambda2_values,
                             const std::vector<double>& lambda3_values,
                             double validation_fraction, const LayerDims& dims,
                             const HyperParams& base_hyper, size_t eval_k) {
  if (lambda2_values.empty() || lambda3_values.empty()) {
    throw ConfigError("grid search needs non-empty lambda grids");
  }

  const DatasetSplit val_split =
      split(data.count(), validation_fraction, base_hyper.seed);

  GridSearchResult result;
  result.lambda2_values = lambda2_values;
  result.lambda3_values = lambda3_values;
  result.map.resize(lambda2_values.size() * lambda3_values.size());

  bool first = true;
  for (size_t i = 0; i < lambda2_values.size(); ++i) {
    for (size_t j = 0; j < lambda3_values.size(); ++j) {
      HyperParams hyper = base_hyper;
      hyper.lambda1 = 1.0;
      hyper.lambda2 = lambda2_values[i];
      hyper.lambda3 = lambda3_values[j];
      const double score =
          train_and_score(data, val_split.train_ids, val_split.query_ids,
                          aggregation, dims, hyper, eval_k);
      result.map[i * lambda3_values.size() + j] = score;

      // Ties prefer the smaller lambda3, then the smaller lambda2.
      const bool better =
          first || score > result.best_map ||
          (score == result.best_map &&
           (lambda3_values[j] < lambda3_values[result.best_lambda3_index] ||
            (lambda3_values[j] == lambda3_values[result.best_lambda3_index] &&
             lambda2_values[i] < lambda2_values[result.best_lambda2_index])));
      if (better) {
        result.best_map = score;
        result.best_lambda2_index = i;
        result.best_lambda3_index = j;
        first = false;
      }
    }
  }
  return result;
}

}  // namespace wdht
