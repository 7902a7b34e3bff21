#include "wdht/tagvec.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "wdht/errors.hpp"

namespace wdht {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream iss(line);
  std::string tok;
  while (iss >> tok) out.push_back(std::move(tok));
  return out;
}

double parse_double(const std::string& tok, const std::string& context) {
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
    throw DataError("bad number '" + tok + "' in " + context);
  }
  return value;
}

bool is_count_header(const std::vector<std::string>& fields) {
  if (fields.size() != 2) return false;
  for (const auto& f : fields) {
    if (f.empty() ||
        !std::all_of(f.begin(), f.end(),
                     [](unsigned char c) { return std::isdigit(c); })) {
      return false;
    }
  }
  return true;
}

}  // namespace

std::string normalize_token(const std::string& raw) {
  size_t begin = 0;
  size_t end = raw.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(raw[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(raw[end - 1]))) --end;
  std::string out = raw.substr(begin, end - begin);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

Aggregation parse_aggregation(const std::string& name) {
  if (name == "mean") return Aggregation::kMean;
  if (name == "tf") return Aggregation::kTf;
  if (name == "itf") return Aggregation::kItf;
  throw ConfigError("unknown aggregation mode '" + name +
                    "' (expected mean, tf or itf)");
}

std::string to_string(Aggregation mode) {
  switch (mode) {
    case Aggregation::kMean: return "mean";
    case Aggregation::kTf: return "tf";
    case Aggregation::kItf: return "itf";
  }
  return "?";
}

bool WordEmbeddingTable::insert(const std::string& token, Vector vec) {
  auto norm = normalize_token(token);
  const bool fresh = entries_.emplace(norm, std::move(vec)).second;
  if (fresh) order_.push_back(std::move(norm));
  return fresh;
}

const Vector* WordEmbeddingTable::find(const std::string& token) const {
  const auto it = entries_.find(normalize_token(token));
  return it == entries_.end() ? nullptr : &it->second;
}

WordEmbeddingTable load_embedding_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open: " + path);

  WordEmbeddingTable table;
  size_t dim = 0;
  std::string line;
  size_t line_no = 0;
  bool first_content_line = true;

  while (std::getline(in, line)) {
    ++line_no;
    auto fields = split_ws(line);
    if (fields.empty()) continue;

    if (first_content_line && is_count_header(fields)) {
      // "<vocab_count> <dim>" header; the declared dim constrains the rows.
      dim = static_cast<size_t>(
          parse_double(fields[1], path + ":" + std::to_string(line_no)));
      first_content_line = false;
      continue;
    }
    first_content_line = false;

    if (fields.size() < 2) {
      throw DataError("malformed row at " + path + ":" + std::to_string(line_no) +
                      ": expected '<token> <v1> ...'");
    }
    const size_t row_dim = fields.size() - 1;
    if (dim == 0) {
      dim = row_dim;
    } else if (row_dim != dim) {
      throw DataError("inconsistent dimension at " + path + ":" +
                      std::to_string(line_no) + ": got " +
                      std::to_string(row_dim) + ", expected " +
                      std::to_string(dim));
    }
    Vector vec(row_dim);
    for (size_t i = 0; i < row_dim; ++i) {
      vec[i] = parse_double(fields[i + 1],
                            path + ":" + std::to_string(line_no));
    }
    if (table.size() == 0) table = WordEmbeddingTable(dim);
    table.insert(fields[0], std::move(vec));  // duplicates keep the first row
  }

  if (table.size() == 0) throw DataError("empty embedding table: " + path);
  return table;
}

void save_embedding_table(const std::string& path,
                          const WordEmbeddingTable& table) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << table.size() << ' ' << table.dim() << '\n';
  out.precision(17);
  for (const auto& token : table.tokens()) {
    out << token;
    for (double v : *table.find(token)) out << ' ' << v;
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

std::vector<TagSet> load_tags(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open: " + path);
  std::vector<TagSet> corpus;
  std::string line;
  while (std::getline(in, line)) {
    TagSet set;
    for (auto& tok : split_ws(line)) {
      auto norm = normalize_token(tok);
      if (!norm.empty()) set.tags.push_back(std::move(norm));
    }
    corpus.push_back(std::move(set));
  }
  return corpus;
}

void save_tags(const std::string& path, const std::vector<TagSet>& tags) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  for (const auto& set : tags) {
    for (size_t i = 0; i < set.tags.size(); ++i) {
      if (i) out << ' ';
      out << set.tags[i];
    }
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

TagStats compute_tag_stats(const std::vector<TagSet>& corpus) {
  if (corpus.empty()) throw DataError("empty tag corpus");
  TagStats stats;
  for (const auto& set : corpus) {
    stats.total_tags += set.tags.size();
    std::unordered_set<std::string> seen;
    for (const auto& tag : set.tags) {
      // A tag repeated within one sample counts once toward its image count.
      if (seen.insert(tag).second) ++stats.images_with_tag[tag];
    }
  }
  return stats;
}

AggregatedTagVector aggregate(const TagSet& tagset,
                              const WordEmbeddingTable& table,
                              const TagStats& stats, Aggregation mode,
                              size_t sample_id) {
  AggregatedTagVector out;
  out.sample_id = sample_id;
  out.w.assign(table.dim(), 0.0);

  if (mode != Aggregation::kMean && stats.total_tags == 0) {
    throw DataError("tf/itf aggregation requires corpus stats with N > 0");
  }

  size_t in_vocab = 0;
  for (const auto& tag : tagset.tags) {
    const Vector* vec = table.find(tag);
    if (vec == nullptr) continue;
    ++in_vocab;

    double weight = 1.0;
    if (mode != Aggregation::kMean) {
      const auto it = stats.images_with_tag.find(normalize_token(tag));
      if (it == stats.images_with_tag.end()) {
        throw DataError("tag '" + tag + "' missing from corpus stats");
      }
      const double n = static_cast<double>(it->second);
      const double total = static_cast<double>(stats.total_tags);
      weight = mode == Aggregation::kTf ? n / total : std::log(total / n);
    }
    for (size_t i = 0; i < out.w.size(); ++i) out.w[i] += weight * (*vec)[i];
  }

  if (in_vocab == 0) return out;  // valid stays false; caller drops the sample

  const double inv_m = 1.0 / static_cast<double>(in_vocab);
  for (double& v : out.w) v *= inv_m;
  out.valid = true;
  return out;
}

AggregatedCorpus aggregate_corpus(const std::vector<TagSet>& tags,
                                  const WordEmbeddingTable& table,
                                  const TagStats& stats, Aggregation mode) {
  AggregatedCorpus out;
  std::vector<Vector> rows;
  for (size_t i = 0; i < tags.size(); ++i) {
    AggregatedTagVector agg = aggregate(tags[i], table, stats, mode, i);
    if (agg.valid) {
      out.kept.push_back(i);
      rows.push_back(std::move(agg.w));
    } else {
      out.dropped.push_back(i);
    }
  }
  out.vectors = Matrix(rows.size(), table.dim());
  for (size_t i = 0; i < rows.size(); ++i) {
    std::copy(rows[i].begin(), rows[i].end(), out.vectors.row(i).begin());
  }
  return out;
}

double tag_vector_variance(const TagSet& tagset,
                           const WordEmbeddingTable& table) {
  std::vector<const Vector*> vecs;
  for (const auto& tag : tagset.tags) {
    if (const Vector* v = table.find(tag)) vecs.push_back(v);
  }
  if (vecs.empty()) {
    throw DataError("tag variance undefined: no in-vocabulary tags");
  }
  Vector mean(table.dim(), 0.0);
  for (const Vector* v : vecs) {
    for (size_t i = 0; i < mean.size(); ++i) mean[i] += (*v)[i];
  }
  for (double& m : mean) m /= static_cast<double>(vecs.size());

  double acc = 0.0;
  for (const Vector* v : vecs) acc += squared_distance(*v, mean);
  return acc / static_cast<double>(vecs.size());
}

}  // namespace wdht
