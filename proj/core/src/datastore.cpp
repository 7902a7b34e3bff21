#include "wdht/datastore.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "wdht/binio.hpp"
#include "wdht/errors.hpp"
#include "wdht/rng.hpp"

namespace wdht {

namespace {
constexpr uint32_t kFeatureVersion = 1;
constexpr char kFeatureMagic[] = "WDHT";
}  // namespace

void save_features(const std::string& path, const Matrix& features) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  binio::write_magic(out, kFeatureMagic);
  binio::write_u32(out, kFeatureVersion);
  binio::write_u64(out, features.rows());
  binio::write_u64(out, features.cols());
  for (size_t i = 0; i < features.size(); ++i) {
    binio::write_f32(out, static_cast<float>(features.data()[i]));
  }
  if (!out) throw DataError("write failed: " + path);
}

Matrix load_features(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path);
  binio::expect_magic(in, kFeatureMagic, path);
  const uint32_t version = binio::read_u32(in, path + " version");
  if (version != kFeatureVersion) {
    throw DataError("unsupported feature file version " +
                    std::to_string(version) + " in " + path);
  }
  const uint64_t rows = binio::read_u64(in, path + " rows");
  const uint64_t cols = binio::read_u64(in, path + " cols");
  if (cols == 0 || rows > (uint64_t{1} << 40) || cols > (uint64_t{1} << 32)) {
    throw DataError("implausible matrix shape " + std::to_string(rows) + "x" +
                    std::to_string(cols) + " in " + path);
  }
  Matrix m(rows, cols);
  for (size_t i = 0; i < m.size(); ++i) {
    m.data()[i] = static_cast<double>(binio::read_f32(in, path + " payload"));
  }
  return m;
}

LabelMatrix load_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open: " + path);
  LabelMatrix labels;
  bool vocab_declared = false;
  std::string line;
  size_t line_no = 0;
  uint32_t max_id = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("#labels", 0) == 0) {
      std::istringstream iss(line.substr(7));
      if (!(iss >> labels.vocab_size)) {
        throw DataError("bad '#labels' header in " + path);
      }
      vocab_declared = true;
      continue;
    }
    std::vector<uint32_t> row;
    std::istringstream iss(line);
    std::string tok;
    while (iss >> tok) {
      uint32_t id = 0;
      const auto [ptr, ec] =
          std::from_chars(tok.data(), tok.data() + tok.size(), id);
      if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
        throw DataError("bad label id '" + tok + "' at " + path + ":" +
                        std::to_string(line_no));
      }
      if (vocab_declared && id >= labels.vocab_size) {
        throw DataError("label id " + std::to_string(id) +
                        " exceeds declared vocabulary " +
                        std::to_string(labels.vocab_size) + " at " + path + ":" +
                        std::to_string(line_no));
      }
      max_id = std::max(max_id, id);
      row.push_back(id);
    }
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    labels.rows.push_back(std::move(row));
  }
  if (!vocab_declared) {
    labels.vocab_size = labels.rows.empty() ? 0 : max_id + 1;
  }
  return labels;
}

void save_labels(const std::string& path, const LabelMatrix& labels) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << "#labels " << labels.vocab_size << '\n';
  for (const auto& row : labels.rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out << ' ';
      out << row[i];
    }
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

DatasetSplit split(size_t count, double query_fraction, uint64_t seed) {
  if (!(query_fraction > 0.0 && query_fraction < 1.0)) {
    throw ConfigError("query fraction must be in (0, 1)");
  }
  const size_t query_count = static_cast<size_t>(
      std::llround(static_cast<double>(count) * query_fraction));
  if (query_count == 0 || query_count >= count) {
    throw ConfigError("query fraction " + std::to_string(query_fraction) +
                      " leaves an empty split for " + std::to_string(count) +
                      " samples");
  }
  std::vector<size_t> ids(count);
  std::iota(ids.begin(), ids.end(), size_t{0});
  Rng rng(seed);
  rng.shuffle(ids);

  DatasetSplit out;
  out.query_ids.assign(ids.begin(), ids.begin() + query_count);
  out.train_ids.assign(ids.begin() + query_count, ids.end());
  std::sort(out.query_ids.begin(), out.query_ids.end());
  std::sort(out.train_ids.begin(), out.train_ids.end());
  out.database_ids = out.train_ids;
  return out;
}

TaggedDataset synth_generate(const SyntheticSpec& spec) {
  if (spec.clusters < 2) {
    throw ConfigError("synthetic data needs at least 2 clusters");
  }
  if (spec.per_cluster == 0 || spec.tags_per_cluster == 0 ||
      spec.tags_per_sample == 0) {
    throw ConfigError("synthetic spec sizes must be positive");
  }
  if (spec.feature_dim < spec.clusters || spec.embed_dim < spec.clusters) {
    throw ConfigError("feature_dim and embed_dim must be >= clusters");
  }
  if (spec.feature_noise < 0.0 || spec.embed_noise < 0.0 ||
      spec.tag_noise < 0.0 || spec.tag_noise > 1.0) {
    throw ConfigError("synthetic noise parameters out of range");
  }

  // Separation constants; noise defaults are small in comparison, which keeps
  // the clusters linearly separable.
  constexpr double kFeatureScale = 4.0;
  constexpr double kEmbedScale = 1.0;

  Rng rng(spec.seed);
  TaggedDataset out;

  out.embeddings = WordEmbeddingTable(spec.embed_dim);
  for (size_t c = 0; c < spec.clusters; ++c) {
    for (size_t t = 0; t < spec.tags_per_cluster; ++t) {
      Vector vec(spec.embed_dim, 0.0);
      vec[c] = kEmbedScale;
      for (double& v : vec) v += rng.normal(0.0, spec.embed_noise);
      out.embeddings.insert("c" + std::to_string(c) + "t" + std::to_string(t),
                            std::move(vec));
    }
  }

  const size_t total = spec.clusters * spec.per_cluster;
  out.features = Matrix(total, spec.feature_dim);
  out.tags.resize(total);
  out.labels.vocab_size = static_cast<uint32_t>(spec.clusters);
  out.labels.rows.resize(total);

  size_t row = 0;
  for (size_t c = 0; c < spec.clusters; ++c) {
    for (size_t s = 0; s < spec.per_cluster; ++s, ++row) {
      auto feat = out.features.row(row);
      feat[c] = kFeatureScale;
      for (double& v : feat) v += rng.normal(0.0, spec.feature_noise);

      auto& tagset = out.tags[row];
      for (size_t t = 0; t < spec.tags_per_sample; ++t) {
        size_t tag_cluster = c;
        if (spec.tag_noise > 0.0 && rng.uniform() < spec.tag_noise) {
          // Draw from another cluster's vocabulary.
          size_t other = static_cast<size_t>(rng.below(spec.clusters - 1));
          if (other >= c) ++other;
          tag_cluster = other;
        }
        const size_t idx = static_cast<size_t>(rng.below(spec.tags_per_cluster));
        tagset.tags.push_back("c" + std::to_string(tag_cluster) + "t" +
                              std::to_string(idx));
      }
      out.labels.rows[row] = {static_cast<uint32_t>(c)};
    }
  }
  return out;
}

Matrix gather_rows(const Matrix& m, const std::vector<size_t>& ids) {
  Matrix out(ids.size(), m.cols());
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= m.rows()) {
      throw DataError("row id " + std::to_string(ids[i]) + " out of range");
    }
    auto src = m.row(ids[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

LabelMatrix gather_labels(const LabelMatrix& labels,
                          const std::vector<size_t>& ids) {
  LabelMatrix out;
  out.vocab_size = labels.vocab_size;
  out.rows.reserve(ids.size());
  for (size_t id : ids) {
    if (id >= labels.rows.size()) {
      throw DataError("label row id " + std::to_string(id) + " out of range");
    }
    out.rows.push_back(labels.rows[id]);
  }
  return out;
}

std::vector<TagSet> gather_tags(const std::vector<TagSet>& tags,
                                const std::vector<size_t>& ids) {
  std::vector<TagSet> out;
  out.reserve(ids.size());
  for (size_t id : ids) {
    if (id >= tags.size()) {
      throw DataError("tag row id " + std::to_string(id) + " out of range");
    }
    out.push_back(tags[id]);
  }
  return out;
}

}  // namespace wdht
