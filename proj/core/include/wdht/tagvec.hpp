#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "wdht/matrix.hpp"

namespace wdht {

// Token -> d-dimensional vector lookup. Tokens are normalized (trimmed,
// lowercased) on insertion and on lookup; duplicates keep the first row.
class WordEmbeddingTable {
 public:
  WordEmbeddingTable() = default;
  explicit WordEmbeddingTable(size_t dim) : dim_(dim) {}

  size_t dim() const { return dim_; }
  size_t size() const { return entries_.size(); }

  // Returns false if the (normalized) token is already present.
  bool insert(const std::string& token, Vector vec);
  const Vector* find(const std::string& token) const;
  bool contains(const std::string& token) const { return find(token) != nullptr; }

  // Normalized tokens in insertion order; keeps file output deterministic.
  const std::vector<std::string>& tokens() const { return order_; }

 private:
  size_t dim_ = 0;
  std::unordered_map<std::string, Vector> entries_;
  std::vector<std::string> order_;
};

// Ordered tag list for one sample; duplicates are kept.
struct TagSet {
  std::vector<std::string> tags;

  size_t count() const { return tags.size(); }
};

// Corpus-wide tag counts: total_tags counts every stored occurrence,
// images_with_tag counts distinct samples containing the tag.
struct TagStats {
  uint64_t total_tags = 0;
  std::unordered_map<std::string, uint64_t> images_with_tag;
};

struct AggregatedTagVector {
  Vector w;
  size_t sample_id = 0;
  // False when the sample had zero in-vocabulary tags; callers drop such
  // samples from training.
  bool valid = false;
};

enum class Aggregation { kMean, kTf, kItf };

Aggregation parse_aggregation(const std::string& name);
std::string to_string(Aggregation mode);

std::string normalize_token(const std::string& raw);

// Text format: optional first line "<vocab_count> <dim>", then one
// "<token> <v1> ... <vdim>" row per line.
WordEmbeddingTable load_embedding_table(const std::string& path);
void save_embedding_table(const std::string& path,
                          const WordEmbeddingTable& table);

// One line per sample, whitespace-separated tokens; an empty line is an empty
// tag set. Tokens are normalized on load.
std::vector<TagSet> load_tags(const std::string& path);
void save_tags(const std::string& path, const std::vector<TagSet>& tags);

TagStats compute_tag_stats(const std::vector<TagSet>& corpus);

// Weighted average of the in-vocabulary tag vectors, m = in-vocabulary count:
//   mean: w = (1/m) sum v
//   tf:   w = (1/m) sum (n(tag)/N) v
//   itf:  w = (1/m) sum ln(N/n(tag)) v
// Returns an invalid vector when every tag is out of vocabulary.
AggregatedTagVector aggregate(const TagSet& tagset,
                              const WordEmbeddingTable& table,
                              const TagStats& stats, Aggregation mode,
                              size_t sample_id = 0);

// Mean squared distance of the in-vocabulary tag vectors from their mean;
// diagnostic for how spread out a sample's tags are in embedding space.
double tag_vector_variance(const TagSet& tagset,
                           const WordEmbeddingTable& table);

// Corpus-level aggregation. Samples whose tags are all out of vocabulary are
// dropped; `kept` maps the rows of `vectors` back to original sample ids.
struct AggregatedCorpus {
  Matrix vectors;  // [kept.size() x dim]
  std::vector<size_t> kept;
  std::vector<size_t> dropped;
};

AggregatedCorpus aggregate_corpus(const std::vector<TagSet>& tags,
                                  const WordEmbeddingTable& table,
                                  const TagStats& stats, Aggregation mode);

}  // namespace wdht
