#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wdht/matrix.hpp"
#include "wdht/tagvec.hpp"

namespace wdht {

// Feature file: magic "WDHT", version u32 LE = 1, rows u64 LE, cols u64 LE,
// then rows*cols IEEE-754 f32 LE row-major. Values are promoted to double in
// memory.
void save_features(const std::string& path, const Matrix& features);
Matrix load_features(const std::string& path);

// Per-sample ground-truth label id sets; evaluation-only.
struct LabelMatrix {
  uint32_t vocab_size = 0;
  std::vector<std::vector<uint32_t>> rows;  // each sorted ascending

  size_t count() const { return rows.size(); }
};

// Text format: optional first line "#labels <vocab_size>", then one line of
// space-separated non-negative label ids per sample (empty line = no labels).
LabelMatrix load_labels(const std::string& path);
void save_labels(const std::string& path, const LabelMatrix& labels);

struct DatasetSplit {
  std::vector<size_t> train_ids;
  std::vector<size_t> query_ids;
  std::vector<size_t> database_ids;  // equal to train_ids: the training set
                                     // doubles as the retrieval database
};

// Uniform random disjoint query/database split, deterministic given seed.
DatasetSplit split(size_t count, double query_fraction, uint64_t seed);

struct SyntheticSpec {
  size_t clusters = 4;
  size_t per_cluster = 500;
  size_t feature_dim = 32;
  double feature_noise = 0.25;
  size_t tags_per_cluster = 50;  // vocabulary size per cluster
  size_t tags_per_sample = 8;
  size_t embed_dim = 16;
  double embed_noise = 0.1;
  double tag_noise = 0.0;  // fraction of tags re-drawn from other clusters
  uint64_t seed = 1;
};

// A feature matrix with aligned tag sets and labels plus the embedding table
// used to interpret the tags.
struct TaggedDataset {
  Matrix features;
  std::vector<TagSet> tags;
  LabelMatrix labels;
  WordEmbeddingTable embeddings;

  size_t count() const { return features.rows(); }
};

// Clustered toy dataset: cluster c gets a feature centroid on axis c and a
// disjoint tag vocabulary whose vectors sit near an embedding-space centroid
// on axis c; label = cluster id. Deterministic given spec.seed.
TaggedDataset synth_generate(const SyntheticSpec& spec);

// Row/record selection helpers for applying a DatasetSplit.
Matrix gather_rows(const Matrix& m, const std::vector<size_t>& ids);
LabelMatrix gather_labels(const LabelMatrix& labels,
                          const std::vector<size_t>& ids);
std::vector<TagSet> gather_tags(const std::vector<TagSet>& tags,
                                const std::vector<size_t>& ids);

}  // namespace wdht
