#include "cli.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wdht/codec.hpp"
#include "wdht/datastore.hpp"
#include "wdht/errors.hpp"
#include "wdht/eval.hpp"
#include "wdht/experiments.hpp"
#include "wdht/hashnet.hpp"
#include "wdht/retrieval.hpp"
#include "wdht/tagvec.hpp"

namespace fs = std::filesystem;

namespace wdht::cli {
namespace {

struct Config {
  HyperParams hyper;
  std::string aggregation = "mean";
  std::string loss_mode = "wdht";
  size_t bits = 32;
  size_t fc3_dim = 256;
  size_t embed_dim = 0;  // 0 = derive from the tag vectors / embedding table
  std::string eval_k = "100";
  unsigned threads = 1;
  std::string output_dir = ".";
  std::string config_path;
};

double parse_double(const std::string& text, const std::string& what) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || p != text.data() + text.size()) {
    throw ConfigError("bad value '" + text + "' for " + what);
  }
  return v;
}

uint64_t parse_u64(const std::string& text, const std::string& what) {
  uint64_t v = 0;
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || p != text.data() + text.size()) {
    throw ConfigError("bad value '" + text + "' for " + what);
  }
  return v;
}

template <typename T, typename Parse>
std::vector<T> parse_list(const std::string& text, const std::string& what,
                          Parse parse) {
  std::vector<T> out;
  std::string item;
  std::istringstream iss(text);
  while (std::getline(iss, item, ',')) {
    if (!item.empty()) out.push_back(parse(item, what));
  }
  if (out.empty()) throw ConfigError("empty list for " + what);
  return out;
}

std::vector<size_t> parse_size_list(const std::string& text,
                                    const std::string& what) {
  return parse_list<size_t>(text, what, [](const std::string& s, const std::string& w) {
    return static_cast<size_t>(parse_u64(s, w));
  });
}

std::vector<double> parse_double_list(const std::string& text,
                                      const std::string& what) {
  return parse_list<double>(text, what, parse_double);
}

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Applies one "key = value" config-file entry. Must stay in sync with
// add_common_options below.
void apply_key(Config& cfg, const std::string& key, const std::string& value) {
  if (key == "lambda1") cfg.hyper.lambda1 = parse_double(value, key);
  else if (key == "lambda2") cfg.hyper.lambda2 = parse_double(value, key);
  else if (key == "lambda3") cfg.hyper.lambda3 = parse_double(value, key);
  else if (key == "lambda4") cfg.hyper.lambda4 = parse_double(value, key);
  else if (key == "margin_hinge") cfg.hyper.margin_hinge = parse_double(value, key);
  else if (key == "margin_contrastive") cfg.hyper.margin_contrastive = parse_double(value, key);
  else if (key == "learning_rate") cfg.hyper.learning_rate = parse_double(value, key);
  else if (key == "momentum") cfg.hyper.momentum = parse_double(value, key);
  else if (key == "batch_size") cfg.hyper.batch_size = parse_u64(value, key);
  else if (key == "epochs") cfg.hyper.epochs = parse_u64(value, key);
  else if (key == "seed") cfg.hyper.seed = parse_u64(value, key);
  else if (key == "aggregation") cfg.aggregation = value;
  else if (key == "loss_mode") cfg.loss_mode = value;
  else if (key == "bits") cfg.bits = parse_u64(value, key);
  else if (key == "fc3_dim") cfg.fc3_dim = parse_u64(value, key);
  else if (key == "embed_dim") cfg.embed_dim = parse_u64(value, key);
  else if (key == "eval_k") cfg.eval_k = value;
  else if (key == "threads") cfg.threads = static_cast<unsigned>(parse_u64(value, key));
  else if (key == "output_dir") cfg.output_dir = value;
  else throw ConfigError("unknown key '" + key + "'");
}

void add_common_options(CLI::App* cmd, Config& cfg) {
  cmd->add_option("--config", cfg.config_path,
                  "key = value config file; command-line flags override it");
  cmd->add_option("--lambda1", cfg.hyper.lambda1, "pairwise similarity loss weight")
      ->capture_default_str();
  cmd->add_option("--lambda2", cfg.hyper.lambda2, "tag-embedding hinge loss weight")
      ->capture_default_str();
  cmd->add_option("--lambda3", cfg.hyper.lambda3, "quantization loss weight")
      ->capture_default_str();
  cmd->add_option("--lambda4", cfg.hyper.lambda4, "contrastive loss weight (binary_tag mode)")
      ->capture_default_str();
  cmd->add_option("--margin_hinge", cfg.hyper.margin_hinge, "margin of the ranking hinge loss")
      ->capture_default_str();
  cmd->add_option("--margin_contrastive", cfg.hyper.margin_contrastive,
                  "margin of the contrastive loss")
      ->capture_default_str();
  cmd->add_option("--learning_rate", cfg.hyper.learning_rate, "SGD learning rate")
      ->capture_default_str();
  cmd->add_option("--momentum", cfg.hyper.momentum, "SGD momentum coefficient")
      ->capture_default_str();
  cmd->add_option("--batch_size", cfg.hyper.batch_size, "mini-batch size")
      ->capture_default_str();
  cmd->add_option("--epochs", cfg.hyper.epochs, "training epochs")
      ->capture_default_str();
  cmd->add_option("--seed", cfg.hyper.seed, "seed for every random draw")
      ->capture_default_str();
  cmd->add_option("--aggregation", cfg.aggregation, "tag aggregation: mean, tf or itf")
      ->capture_default_str();
  cmd->add_option("--loss_mode", cfg.loss_mode, "training objective: wdht or binary_tag")
      ->capture_default_str();
  cmd->add_option("--bits", cfg.bits, "hash code width in bits")
      ->capture_default_str();
  cmd->add_option("--fc3_dim", cfg.fc3_dim, "width of the shared FC3 layer")
      ->capture_default_str();
  cmd->add_option("--embed_dim", cfg.embed_dim,
                  "tag-embedding head width (0 = derive from the tag vectors)")
      ->capture_default_str();
  cmd->add_option("--eval_k", cfg.eval_k, "comma-separated mAP cutoffs")
      ->capture_default_str();
  cmd->add_option("--threads", cfg.threads, "worker threads for retrieval/evaluation")
      ->capture_default_str();
  cmd->add_option("--output_dir", cfg.output_dir, "directory for default output paths")
      ->capture_default_str();
}

void load_config_file(const CLI::App* cmd, Config& cfg) {
  std::ifstream in(cfg.config_path);
  if (!in) throw ConfigError("cannot open config file: " + cfg.config_path);
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.resize(hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("expected 'key = value' at " + cfg.config_path + ":" +
                        std::to_string(line_no));
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("empty key at " + cfg.config_path + ":" +
                        std::to_string(line_no));
    }
    // A flag given on the command line wins over the file value.
    bool overridden = false;
    try {
      overridden = cmd->count("--" + key) > 0;
    } catch (const CLI::OptionNotFound&) {
      throw ConfigError("unknown key '" + key + "' in " + cfg.config_path);
    }
    if (!overridden) apply_key(cfg, key, value);
  }
}

fs::path default_out(const Config& cfg, const std::string& name) {
  return fs::path(cfg.output_dir) / name;
}

void ensure_parent_dir(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

void ensure_counts(size_t features, size_t tags, size_t labels,
                   bool have_labels) {
  if (features != tags || (have_labels && features != labels)) {
    std::string msg = "inconsistent sample counts: features=" +
                      std::to_string(features) + ", tags=" + std::to_string(tags);
    if (have_labels) msg += ", labels=" + std::to_string(labels);
    throw DataError(msg);
  }
}

// --- subcommand bodies ----------------------------------------------------

int cmd_aggregate(const Config& cfg, const std::string& embeddings_path,
                  const std::string& tags_path, std::string out_path,
                  std::string report_path) {
  if (out_path.empty()) out_path = default_out(cfg, "tag_vectors.fvec").string();
  if (report_path.empty()) report_path = default_out(cfg, "dropped_samples.txt").string();

  const WordEmbeddingTable table = load_embedding_table(embeddings_path);
  const std::vector<TagSet> tagsets = load_tags(tags_path);
  if (tagsets.empty()) throw DataError("no samples in " + tags_path);
  const TagStats stats = compute_tag_stats(tagsets);
  const Aggregation mode = parse_aggregation(cfg.aggregation);

  const AggregatedCorpus corpus = aggregate_corpus(tagsets, table, stats, mode);
  if (corpus.kept.empty()) {
    throw DataError("every sample has only out-of-vocabulary tags");
  }

  ensure_parent_dir(out_path);
  save_features(out_path, corpus.vectors);
  ensure_parent_dir(report_path);
  std::ofstream report(report_path);
  if (!report) throw DataError("cannot open for writing: " + report_path);
  for (size_t id : corpus.dropped) report << id << '\n';

  if (!corpus.dropped.empty()) {
    std::cerr << "warning: dropped " << corpus.dropped.size()
              << " samples with no in-vocabulary tags\n";
  }
  std::cout << "wrote " << corpus.kept.size() << " tag vectors (dim "
            << table.dim() << ", " << to_string(mode) << ") to " << out_path
            << "\n";
  return 0;
}

int cmd_train(const Config& cfg, const std::string& features_path,
              const std::string& tag_vectors_path, const std::string& tags_path,
              const std::string& embeddings_path, std::string model_out,
              std::string loss_out) {
  if (model_out.empty()) model_out = default_out(cfg, "model.wdhm").string();
  if (loss_out.empty()) loss_out = default_out(cfg, "loss_history.csv").string();

  Matrix features = load_features(features_path);
  const LossMode mode = parse_loss_mode(cfg.loss_mode);

  LayerDims dims;
  dims.input_dim = features.cols();
  dims.fc3_dim = cfg.fc3_dim;
  dims.bits = cfg.bits;

  TrainResult result;
  if (mode == LossMode::kWdht) {
    Matrix tag_vectors;
    if (!tag_vectors_path.empty()) {
      tag_vectors = load_features(tag_vectors_path);
      if (tag_vectors.rows() != features.rows()) {
        throw DataError("tag vector count " + std::to_string(tag_vectors.rows()) +
                        " does not match feature count " +
                        std::to_string(features.rows()));
      }
    } else if (!tags_path.empty() && !embeddings_path.empty()) {
      const WordEmbeddingTable table = load_embedding_table(embeddings_path);
      const std::vector<TagSet> tagsets = load_tags(tags_path);
      ensure_counts(features.rows(), tagsets.size(), 0, false);
      const TagStats stats = compute_tag_stats(tagsets);
      const AggregatedCorpus corpus =
          aggregate_corpus(tagsets, table, stats, parse_aggregation(cfg.aggregation));
      if (corpus.kept.empty()) {
        throw DataError("every sample has only out-of-vocabulary tags");
      }
      if (!corpus.dropped.empty()) {
        std::cerr << "warning: dropped " << corpus.dropped.size()
                  << " samples with no in-vocabulary tags\n";
        features = gather_rows(features, corpus.kept);
      }
      tag_vectors = corpus.vectors;
    } else {
      throw ConfigError(
          "wdht mode needs --tag-vectors, or --embeddings together with --tags");
    }
    dims.embed_dim = cfg.embed_dim != 0 ? cfg.embed_dim : tag_vectors.cols();
    if (dims.embed_dim != tag_vectors.cols()) {
      throw ConfigError("embed_dim " + std::to_string(cfg.embed_dim) +
                        " does not match tag vector dim " +
                        std::to_string(tag_vectors.cols()));
    }
    result = train_wdht(features, tag_vectors, dims, cfg.hyper);
  } else {
    if (tags_path.empty()) throw ConfigError("binary_tag mode needs --tags");
    const std::vector<TagSet> tagsets = load_tags(tags_path);
    ensure_counts(features.rows(), tagsets.size(), 0, false);
    // H2 is unused by this objective; keep it minimal unless configured.
    dims.embed_dim = cfg.embed_dim != 0 ? cfg.embed_dim : 1;
    result = train_binary_tag(features, tagsets, dims, cfg.hyper);
  }

  ensure_parent_dir(model_out);
  save_checkpoint(model_out, result.params);
  ensure_parent_dir(loss_out);
  save_loss_history(loss_out, result.history);

  std::cout << "trained " << to_string(mode) << " model (" << dims.bits
            << " bits) over " << features.rows() << " samples\n";
  if (!result.history.empty()) {
    std::cout << "first epoch loss " << result.history.front().mean.total
              << ", final epoch loss " << result.history.back().mean.total
              << "\n";
  }
  std::cout << "checkpoint: " << model_out << "\nloss history: " << loss_out
            << "\n";
  return 0;
}

int cmd_encode(const Config& cfg, const std::string& model_path,
               const std::string& features_path, std::string out_path) {
  if (out_path.empty()) out_path = default_out(cfg, "codes.wdhc").string();
  const NetworkParams params = load_checkpoint(model_path);
  const Matrix features = load_features(features_path);
  const CodeMatrix codes = encode(params, features);
  ensure_parent_dir(out_path);
  save_codes(out_path, codes);
  std::cout << "encoded " << codes.count() << " samples at " << codes.bits()
            << " bits to " << out_path << "\n";
  return 0;
}

int cmd_query(const Config& cfg, const std::string& db_path,
              const std::string& queries_path, size_t topk,
              std::string out_path) {
  if (out_path.empty()) out_path = default_out(cfg, "results.tsv").string();
  const CodeMatrix db = load_codes(db_path);
  const CodeMatrix queries = load_codes(queries_path);
  const HammingIndex index(db);
  const auto rankings = index.rank_all(queries, topk, cfg.threads);

  ensure_parent_dir(out_path);
  std::ofstream out(out_path);
  if (!out) throw DataError("cannot open for writing: " + out_path);
  for (size_t qi = 0; qi < rankings.size(); ++qi) {
    for (size_t r = 0; r < rankings[qi].size(); ++r) {
      out << qi << '\t' << r + 1 << '\t' << rankings[qi][r].id << '\t'
          << rankings[qi][r].distance << '\n';
    }
  }
  if (!out) throw DataError("write failed: " + out_path);
  std::cout << "wrote top-" << topk << " results for " << rankings.size()
            << " queries to " << out_path << "\n";
  return 0;
}

int cmd_eval(const Config& cfg, const std::string& db_codes_path,
             const std::string& query_codes_path,
             const std::string& db_labels_path,
             const std::string& query_labels_path, std::string report_path,
             std::string pr_path) {
  if (report_path.empty()) report_path = default_out(cfg, "eval_report.csv").string();
  if (pr_path.empty()) pr_path = default_out(cfg, "pr_curve.csv").string();

  const CodeMatrix db = load_codes(db_codes_path);
  const CodeMatrix queries = load_codes(query_codes_path);
  const LabelMatrix db_labels = load_labels(db_labels_path);
  const LabelMatrix query_labels = load_labels(query_labels_path);
  if (db_labels.count() != db.count()) {
    throw DataError("database labels count " + std::to_string(db_labels.count()) +
                    " does not match code count " + std::to_string(db.count()));
  }
  if (query_labels.count() != queries.count()) {
    throw DataError("query labels count " + std::to_string(query_labels.count()) +
                    " does not match code count " +
                    std::to_string(queries.count()));
  }

  const HammingIndex index(db);
  const auto rankings = index.rank_all(queries, db.count(), cfg.threads);

  const std::vector<size_t> cutoffs = parse_size_list(cfg.eval_k, "eval_k");
  ensure_parent_dir(report_path);
  std::ofstream report(report_path);
  if (!report) throw DataError("cannot open for writing: " + report_path);
  report.precision(17);
  report << "bits,mode,K,mAP\n";
  for (size_t k : cutoffs) {
    const double score = map_at_k(rankings, query_labels, db_labels, k);
    report << db.bits() << ',' << cfg.loss_mode << ',' << k << ',' << score
           << '\n';
    std::cout << "mAP@" << k << " = " << score << "\n";
  }

  const auto curve = pr_curve(rankings, query_labels, db_labels);
  ensure_parent_dir(pr_path);
  save_pr_curve(pr_path, curve);
  std::cout << "report: " << report_path << "\npr curve: " << pr_path << "\n";
  return 0;
}

int cmd_synth(const Config& cfg, SyntheticSpec spec, double query_fraction,
              std::string out_dir) {
  if (out_dir.empty()) out_dir = cfg.output_dir;
  spec.seed = cfg.hyper.seed;
  const TaggedDataset data = synth_generate(spec);
  const DatasetSplit parts = split(data.count(), query_fraction, spec.seed);

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  save_features((dir / "train_features.fvec").string(),
                gather_rows(data.features, parts.train_ids));
  save_tags((dir / "train_tags.txt").string(),
            gather_tags(data.tags, parts.train_ids));
  save_labels((dir / "train_labels.txt").string(),
              gather_labels(data.labels, parts.train_ids));
  save_features((dir / "query_features.fvec").string(),
                gather_rows(data.features, parts.query_ids));
  save_tags((dir / "query_tags.txt").string(),
            gather_tags(data.tags, parts.query_ids));
  save_labels((dir / "query_labels.txt").string(),
              gather_labels(data.labels, parts.query_ids));
  save_embedding_table((dir / "embeddings.txt").string(), data.embeddings);

  std::cout << "synthetic dataset: " << parts.train_ids.size() << " train / "
            << parts.query_ids.size() << " query samples, "
            << spec.clusters << " clusters, in " << out_dir << "\n";
  return 0;
}

int cmd_gradcheck(size_t seeds, double tolerance, size_t batch_size) {
  LayerDims dims;
  dims.input_dim = 8;
  dims.fc3_dim = 6;
  dims.bits = 4;
  dims.embed_dim = 5;
  const GradCheckReport report =
      gradient_check(seeds, tolerance, dims, batch_size);
  std::printf("%s max_rel_err=%.3e cases=%zu tolerance=%.1e\n",
              report.pass ? "PASS" : "FAIL", report.max_rel_err, report.cases,
              report.tolerance);
  return report.pass ? 0 : 3;
}

int cmd_gridsearch(const Config& cfg, const std::string& features_path,
                   const std::string& tags_path,
                   const std::string& embeddings_path,
                   const std::string& labels_path,
                   const std::string& lambda2_list,
                   const std::string& lambda3_list, double validation_fraction,
                   std::string grid_out) {
  if (grid_out.empty()) grid_out = default_out(cfg, "grid.csv").string();

  TaggedDataset data;
  data.features = load_features(features_path);
  data.tags = load_tags(tags_path);
  data.embeddings = load_embedding_table(embeddings_path);
  data.labels = load_labels(labels_path);
  ensure_counts(data.features.rows(), data.tags.size(), data.labels.count(),
                true);

  LayerDims dims;
  dims.input_dim = data.features.cols();
  dims.fc3_dim = cfg.fc3_dim;
  dims.bits = cfg.bits;
  dims.embed_dim = cfg.embed_dim != 0 ? cfg.embed_dim : data.embeddings.dim();

  const auto lambda2s = parse_double_list(lambda2_list, "lambda2 grid");
  const auto lambda3s = parse_double_list(lambda3_list, "lambda3 grid");
  const size_t eval_k = parse_size_list(cfg.eval_k, "eval_k").front();

  const GridSearchResult result =
      grid_search(data, parse_aggregation(cfg.aggregation), lambda2s, lambda3s,
                  validation_fraction, dims, cfg.hyper, eval_k);

  ensure_parent_dir(grid_out);
  std::ofstream out(grid_out);
  if (!out) throw DataError("cannot open for writing: " + grid_out);
  out.precision(17);
  out << "lambda2,lambda3,mAP\n";
  for (size_t i = 0; i < lambda2s.size(); ++i) {
    for (size_t j = 0; j < lambda3s.size(); ++j) {
      out << lambda2s[i] << ',' << lambda3s[j] << ',' << result.cell(i, j)
          << '\n';
    }
  }
  std::cout << "best cell: lambda2=" << lambda2s[result.best_lambda2_index]
            << " lambda3=" << lambda3s[result.best_lambda3_index]
            << " mAP@" << eval_k << "=" << result.best_map << "\n"
            << "grid: " << grid_out << "\n";
  return 0;
}

int run_impl(int argc, const char* const* argv) {
  CLI::App app{"Weakly supervised image hashing from tag embeddings"};
  app.require_subcommand(1);

  Config cfg;
  std::string features, tags, embeddings, labels, tag_vectors, model;
  std::string db_codes, query_codes, db_labels, query_labels;
  std::string out, report, model_out, loss_out, pr_out, grid_out;
  size_t topk = 100;
  SyntheticSpec spec;
  double query_fraction = 0.1;
  size_t gc_seeds = 20;
  double gc_tolerance = 1e-4;
  size_t gc_batch = 3;
  std::string lambda2_list = "0.01,0.1,1.0,10.0,100.0";
  std::string lambda3_list = "0.01,0.1,1.0,10.0,100.0";
  double validation_fraction = 0.2;

  auto* agg = app.add_subcommand(
      "aggregate", "Aggregate each sample's tags into one embedding vector");
  add_common_options(agg, cfg);
  agg->add_option("--embeddings", embeddings, "embedding table (text)")->required();
  agg->add_option("--tags", tags, "tags file, one sample per line")->required();
  agg->add_option("--out", out, "output tag-vector file (FVEC)");
  agg->add_option("--report", report, "dropped-samples report");

  auto* train = app.add_subcommand("train", "Train the hashing head");
  add_common_options(train, cfg);
  train->add_option("--features", features, "feature matrix (FVEC)")->required();
  train->add_option("--tag-vectors", tag_vectors,
                    "precomputed tag vectors (FVEC), row-aligned with features");
  train->add_option("--tags", tags, "tags file (aggregated on the fly, or used"
                    " directly in binary_tag mode)");
  train->add_option("--embeddings", embeddings, "embedding table (text)");
  train->add_option("--model-out", model_out, "checkpoint output path");
  train->add_option("--loss-out", loss_out, "loss history CSV path");

  auto* enc = app.add_subcommand("encode", "Produce hash codes from features");
  add_common_options(enc, cfg);
  enc->add_option("--model", model, "checkpoint path")->required();
  enc->add_option("--features", features, "feature matrix (FVEC)")->required();
  enc->add_option("--out", out, "output codes file");

  auto* query = app.add_subcommand("query", "Rank database codes per query");
  add_common_options(query, cfg);
  query->add_option("--db-codes", db_codes, "database codes file")->required();
  query->add_option("--query-codes", query_codes, "query codes file")->required();
  query->add_option("--k", topk, "results per query")->capture_default_str();
  query->add_option("--out", out, "output TSV path");

  auto* eval = app.add_subcommand("eval", "mAP and precision-recall evaluation");
  add_common_options(eval, cfg);
  eval->add_option("--db-codes", db_codes, "database codes file")->required();
  eval->add_option("--query-codes", query_codes, "query codes file")->required();
  eval->add_option("--db-labels", db_labels, "database labels file")->required();
  eval->add_option("--query-labels", query_labels, "query labels file")->required();
  eval->add_option("--report", report, "report CSV path");
  eval->add_option("--pr-out", pr_out, "PR curve CSV path");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic clustered dataset");
  add_common_options(synth, cfg);
  synth->add_option("--out", out, "output directory (default: output_dir)");
  synth->add_option("--clusters", spec.clusters)->capture_default_str();
  synth->add_option("--per-cluster", spec.per_cluster)->capture_default_str();
  synth->add_option("--feature-dim", spec.feature_dim)->capture_default_str();
  synth->add_option("--feature-noise", spec.feature_noise)->capture_default_str();
  synth->add_option("--tags-per-cluster", spec.tags_per_cluster)->capture_default_str();
  synth->add_option("--tags-per-sample", spec.tags_per_sample)->capture_default_str();
  synth->add_option("--synth-embed-dim", spec.embed_dim)->capture_default_str();
  synth->add_option("--embed-noise", spec.embed_noise)->capture_default_str();
  synth->add_option("--tag-noise", spec.tag_noise,
                    "fraction of tags drawn from other clusters")
      ->capture_default_str();
  synth->add_option("--query-fraction", query_fraction)->capture_default_str();

  auto* gradcheck = app.add_subcommand(
      "gradcheck", "Verify analytic gradients against central differences");
  add_common_options(gradcheck, cfg);
  gradcheck->add_option("--seeds", gc_seeds)->capture_default_str();
  gradcheck->add_option("--tolerance", gc_tolerance)->capture_default_str();
  gradcheck->add_option("--batch", gc_batch)->capture_default_str();

  auto* grid = app.add_subcommand(
      "gridsearch", "Sweep (lambda2, lambda3) against a validation split");
  add_common_options(grid, cfg);
  grid->add_option("--features", features, "feature matrix (FVEC)")->required();
  grid->add_option("--tags", tags, "tags file")->required();
  grid->add_option("--embeddings", embeddings, "embedding table (text)")->required();
  grid->add_option("--labels", labels, "labels file")->required();
  grid->add_option("--lambda2-grid", lambda2_list, "comma-separated lambda2 values")
      ->capture_default_str();
  grid->add_option("--lambda3-grid", lambda3_list, "comma-separated lambda3 values")
      ->capture_default_str();
  grid->add_option("--validation-fraction", validation_fraction)
      ->capture_default_str();
  grid->add_option("--grid-out", grid_out, "grid CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  CLI::App* active = app.get_subcommands().front();
  if (!cfg.config_path.empty()) load_config_file(active, cfg);

  if (active == agg) return cmd_aggregate(cfg, embeddings, tags, out, report);
  if (active == train) {
    return cmd_train(cfg, features, tag_vectors, tags, embeddings, model_out,
                     loss_out);
  }
  if (active == enc) return cmd_encode(cfg, model, features, out);
  if (active == query) return cmd_query(cfg, db_codes, query_codes, topk, out);
  if (active == eval) {
    return cmd_eval(cfg, db_codes, query_codes, db_labels, query_labels, report,
                    pr_out);
  }
  if (active == synth) return cmd_synth(cfg, spec, query_fraction, out);
  if (active == gradcheck) return cmd_gradcheck(gc_seeds, gc_tolerance, gc_batch);
  if (active == grid) {
    return cmd_gridsearch(cfg, features, tags, embeddings, labels, lambda2_list,
                          lambda3_list, validation_fraction, grid_out);
  }
  return 1;
}

}  // namespace

int run(int argc, const char* const* argv) {
  try {
    return run_impl(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace wdht::cli
