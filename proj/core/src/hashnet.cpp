#include "wdht/hashnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include "wdht/binio.hpp"
#include "wdht/errors.hpp"
#include "wdht/rng.hpp"

namespace wdht {

namespace {

constexpr uint32_t kCheckpointVersion = 1;
constexpr char kCheckpointMagic[] = "WDHM";

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_dims(const LayerDims& dims) {
  if (dims.input_dim == 0 || dims.fc3_dim == 0 || dims.bits == 0 ||
      dims.embed_dim == 0) {
    throw ConfigError("all layer sizes must be positive");
  }
}

void check_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DataError(std::string("shape mismatch in ") + what);
  }
}

// Row norms for the cosine targets; a zero-norm tag vector has no direction.
Vector row_norms_checked(const Matrix& w) {
  Vector norms(w.rows());
  for (size_t i = 0; i < w.rows(); ++i) {
    norms[i] = std::sqrt(squared_norm(w.row(i)));
    if (norms[i] == 0.0) {
      throw DataError("zero-norm tag vector at batch row " + std::to_string(i));
    }
  }
  return norms;
}

// Similar-pair fraction over all ordered pairs, clamped so a uniform batch
// does not zero out either loss branch.
double similar_fraction(const Matrix& similarity) {
  const size_t k = similarity.rows();
  double sum = 0.0;
  for (size_t i = 0; i < similarity.size(); ++i) sum += similarity.data()[i];
  const double beta = sum / (static_cast<double>(k) * static_cast<double>(k));
  return std::clamp(beta, 0.01, 0.99);
}

void check_similarity(const Matrix& similarity, size_t k) {
  if (similarity.rows() != k || similarity.cols() != k) {
    throw DataError("similarity matrix must be k x k");
  }
  for (size_t i = 0; i < k; ++i) {
    for (size_t j = 0; j < k; ++j) {
      const double s = similarity(i, j);
      if (s != 0.0 && s != 1.0) {
        throw DataError("similarity matrix entries must be 0 or 1");
      }
      if (similarity(j, i) != s) {
        throw DataError("similarity matrix must be symmetric");
      }
    }
  }
}

}  // namespace

LossMode parse_loss_mode(const std::string& name) {
  if (name == "wdht") return LossMode::kWdht;
  if (name == "binary_tag") return LossMode::kBinaryTag;
  throw ConfigError("unknown loss mode '" + name +
                    "' (expected wdht or binary_tag)");
}

std::string to_string(LossMode mode) {
  return mode == LossMode::kWdht ? "wdht" : "binary_tag";
}

void validate(const HyperParams& hyper) {
  if (hyper.lambda1 < 0 || hyper.lambda2 < 0 || hyper.lambda3 < 0 ||
      hyper.lambda4 < 0) {
    throw ConfigError("loss weights must be nonnegative");
  }
  if (hyper.learning_rate <= 0) throw ConfigError("learning rate must be positive");
  if (hyper.momentum < 0 || hyper.momentum >= 1) {
    throw ConfigError("momentum must be in [0, 1)");
  }
  if (hyper.batch_size == 0) throw ConfigError("batch size must be positive");
  if (hyper.batch_size < 2 && (hyper.lambda1 > 0 || hyper.lambda4 > 0)) {
    throw ConfigError("pairwise losses need batch size >= 2");
  }
}

MomentumState::MomentumState(const LayerDims& dims)
    : w_fc3(dims.fc3_dim, dims.input_dim),
      b_fc3(dims.fc3_dim, 0.0),
      w_h1(dims.bits, dims.fc3_dim),
      b_h1(dims.bits, 0.0),
      w_h2(dims.embed_dim, dims.fc3_dim),
      b_h2(dims.embed_dim, 0.0) {}

NetworkParams init_glorot(const LayerDims& dims, uint64_t seed) {
  check_dims(dims);
  NetworkParams params;
  params.dims = dims;
  params.w_fc3 = Matrix(dims.fc3_dim, dims.input_dim);
  params.b_fc3.assign(dims.fc3_dim, 0.0);
  params.w_h1 = Matrix(dims.bits, dims.fc3_dim);
  params.b_h1.assign(dims.bits, 0.0);
  params.w_h2 = Matrix(dims.embed_dim, dims.fc3_dim);
  params.b_h2.assign(dims.embed_dim, 0.0);

  Rng rng(seed);
  auto fill = [&rng](Matrix& w) {
    const double stddev =
        std::sqrt(2.0 / static_cast<double>(w.cols() + w.rows()));
    for (size_t i = 0; i < w.size(); ++i) w.data()[i] = rng.normal(0.0, stddev);
  };
  fill(params.w_fc3);
  fill(params.w_h1);
  fill(params.w_h2);
  return params;
}

ForwardActivations forward(const NetworkParams& params,
                           const Matrix& features) {
  const LayerDims& dims = params.dims;
  if (features.cols() != dims.input_dim) {
    throw DataError("feature dim " + std::to_string(features.cols()) +
                    " does not match network input dim " +
                    std::to_string(dims.input_dim));
  }
  if (!features.all_finite()) throw NumericError("non-finite input features");

  const size_t k = features.rows();
  ForwardActivations acts;
  acts.fc3_pre = Matrix(k, dims.fc3_dim);
  acts.fc3_out = Matrix(k, dims.fc3_dim);
  acts.h1_pre = Matrix(k, dims.bits);
  acts.h1_out = Matrix(k, dims.bits);
  acts.h2_pre = Matrix(k, dims.embed_dim);
  acts.h2_out = Matrix(k, dims.embed_dim);

  for (size_t i = 0; i < k; ++i) {
    const auto x = features.row(i);
    for (size_t c = 0; c < dims.fc3_dim; ++c) {
      const double z = dot(params.w_fc3.row(c), x) + params.b_fc3[c];
      acts.fc3_pre(i, c) = z;
      acts.fc3_out(i, c) = z > 0.0 ? z : 0.0;
    }
    const auto a = acts.fc3_out.row(i);
    for (size_t b = 0; b < dims.bits; ++b) {
      const double z = dot(params.w_h1.row(b), a) + params.b_h1[b];
      acts.h1_pre(i, b) = z;
      acts.h1_out(i, b) = sigmoid(z);
    }
    for (size_t e = 0; e < dims.embed_dim; ++e) {
      const double z = dot(params.w_h2.row(e), a) + params.b_h2[e];
      acts.h2_pre(i, e) = z;
      acts.h2_out(i, e) = std::tanh(z);
    }
  }
  return acts;
}

double loss_pairwise(const Matrix& h1, const Matrix& tag_vectors) {
  if (h1.rows() != tag_vectors.rows()) {
    throw DataError("pairwise loss: batch sizes differ");
  }
  const size_t k = h1.rows();
  const double bits = static_cast<double>(h1.cols());
  const Vector norms = row_norms_checked(tag_vectors);

  double loss = 0.0;
  for (size_t i = 0; i < k; ++i) {
    for (size_t j = 0; j < k; ++j) {
      const double dist = squared_distance(h1.row(i), h1.row(j)) / bits;
      const double cos =
          dot(tag_vectors.row(i), tag_vectors.row(j)) / (norms[i] * norms[j]);
      const double err = dist - 0.5 * (1.0 - cos);
      loss += err * err;
    }
  }
  return loss;
}

double loss_hinge(const Matrix& h2, const Matrix& tag_vectors, double margin) {
  check_same_shape(h2, tag_vectors, "hinge loss");
  const size_t k = h2.rows();
  double loss = 0.0;
  for (size_t n = 0; n < k; ++n) {
    const double own = dot(tag_vectors.row(n), h2.row(n));
    for (size_t j = 0; j < k; ++j) {
      if (j == n) continue;
      const double arg = margin + dot(tag_vectors.row(j), h2.row(n)) - own;
      if (arg > 0.0) loss += arg;
    }
  }
  return loss;
}

double loss_quantization(const Matrix& h1) {
  const double bits = static_cast<double>(h1.cols());
  double loss = 0.0;
  for (size_t i = 0; i < h1.size(); ++i) {
    const double dev = h1.data()[i] - 0.5;
    loss -= dev * dev / bits;
  }
  return loss;
}

double loss_contrastive(const Matrix& h1, const Matrix& similarity,
                        double margin) {
  const size_t k = h1.rows();
  check_similarity(similarity, k);
  const double bits = static_cast<double>(h1.cols());
  const double beta = similar_fraction(similarity);

  double loss = 0.0;
  for (size_t i = 0; i < k; ++i) {
    for (size_t j = 0; j < k; ++j) {
      const double dist = squared_distance(h1.row(i), h1.row(j)) / bits;
      if (similarity(i, j) != 0.0) {
        loss += (1.0 - beta) * dist;
      } else {
        const double gap = margin - dist;
        if (gap > 0.0) loss += beta * gap * gap;
      }
    }
  }
  return loss;
}

double total_loss(const LossValues& losses, const HyperParams& hyper,
                  LossMode mode) {
  if (mode == LossMode::kWdht) {
    return hyper.lambda1 * losses.l1 + hyper.lambda2 * losses.l2 +
           hyper.lambda3 * losses.l3;
  }
  return hyper.lambda3 * losses.l3 + hyper.lambda4 * losses.l4;
}

LossValues compute_losses(const ForwardActivations& acts,
                          const TrainBatch& batch, const HyperParams& hyper) {
  LossValues losses;
  // Components with zero weight are skipped (and reported as 0) so that a
  // disabled loss can never fail validation or contribute gradient.
  if (batch.mode == LossMode::kWdht) {
    if (hyper.lambda1 != 0.0) {
      losses.l1 = loss_pairwise(acts.h1_out, batch.tag_vectors);
    }
    if (hyper.lambda2 != 0.0) {
      losses.l2 = loss_hinge(acts.h2_out, batch.tag_vectors, hyper.margin_hinge);
    }
    if (hyper.lambda3 != 0.0) losses.l3 = loss_quantization(acts.h1_out);
  } else {
    if (hyper.lambda3 != 0.0) losses.l3 = loss_quantization(acts.h1_out);
    if (hyper.lambda4 != 0.0) {
      losses.l4 = loss_contrastive(acts.h1_out, batch.similarity,
                                   hyper.margin_contrastive);
    }
  }
  losses.total = total_loss(losses, hyper, batch.mode);
  return losses;
}

GradientSet backward(const NetworkParams& params,
                     const ForwardActivations& acts, const TrainBatch& batch,
                     const HyperParams& hyper) {
  const LayerDims& dims = params.dims;
  const size_t k = batch.features.rows();
  if (acts.h1_out.rows() != k || batch.features.cols() != dims.input_dim) {
    throw DataError("backward: activations do not match batch");
  }

  const Matrix& h1 = acts.h1_out;
  const Matrix& h2 = acts.h2_out;
  const double bits = static_cast<double>(dims.bits);

  // d(total)/d(h1_out), d(total)/d(h2_out), already weighted by lambdas.
  Matrix dh1(k, dims.bits);
  Matrix dh2(k, dims.embed_dim);
  LossValues losses;

  if (batch.mode == LossMode::kWdht) {
    const Matrix& w = batch.tag_vectors;
    if (hyper.lambda1 != 0.0) {
      const Vector norms = row_norms_checked(w);
      for (size_t i = 0; i < k; ++i) {
        for (size_t j = 0; j < k; ++j) {
          const double dist = squared_distance(h1.row(i), h1.row(j)) / bits;
          const double cos = dot(w.row(i), w.row(j)) / (norms[i] * norms[j]);
          const double err = dist - 0.5 * (1.0 - cos);
          losses.l1 += err * err;
          const double coef = hyper.lambda1 * 2.0 * err * (2.0 / bits);
          for (size_t x = 0; x < dims.bits; ++x) {
            const double g = coef * (h1(i, x) - h1(j, x));
            dh1(i, x) += g;
            dh1(j, x) -= g;
          }
        }
      }
    }
    if (hyper.lambda2 != 0.0) {
      check_same_shape(h2, w, "hinge loss");
      for (size_t n = 0; n < k; ++n) {
        const double own = dot(w.row(n), h2.row(n));
        for (size_t j = 0; j < k; ++j) {
          if (j == n) continue;
          const double arg = hyper.margin_hinge + dot(w.row(j), h2.row(n)) - own;
          if (arg > 0.0) {
            losses.l2 += arg;
            for (size_t e = 0; e < dims.embed_dim; ++e) {
              dh2(n, e) += hyper.lambda2 * (w(j, e) - w(n, e));
            }
          }
        }
      }
    }
  } else if (hyper.lambda4 != 0.0) {
    const Matrix& similarity = batch.similarity;
    check_similarity(similarity, k);
    const double beta = similar_fraction(similarity);
    for (size_t i = 0; i < k; ++i) {
      for (size_t j = 0; j < k; ++j) {
        const double dist = squared_distance(h1.row(i), h1.row(j)) / bits;
        double coef = 0.0;
        if (similarity(i, j) != 0.0) {
          losses.l4 += (1.0 - beta) * dist;
          coef = hyper.lambda4 * (1.0 - beta) * (2.0 / bits);
        } else {
          const double gap = hyper.margin_contrastive - dist;
          if (gap > 0.0) {
            losses.l4 += beta * gap * gap;
            coef = -hyper.lambda4 * beta * 2.0 * gap * (2.0 / bits);
          }
        }
        if (coef != 0.0) {
          for (size_t x = 0; x < dims.bits; ++x) {
            const double g = coef * (h1(i, x) - h1(j, x));
            dh1(i, x) += g;
            dh1(j, x) -= g;
          }
        }
      }
    }
  }

  if (hyper.lambda3 != 0.0) {
    for (size_t i = 0; i < k; ++i) {
      for (size_t x = 0; x < dims.bits; ++x) {
        const double dev = h1(i, x) - 0.5;
        losses.l3 -= dev * dev / bits;
        dh1(i, x) += hyper.lambda3 * (-2.0 / bits) * dev;
      }
    }
  }
  losses.total = total_loss(losses, hyper, batch.mode);

  GradientSet grads;
  grads.w_fc3 = Matrix(dims.fc3_dim, dims.input_dim);
  grads.b_fc3.assign(dims.fc3_dim, 0.0);
  grads.w_h1 = Matrix(dims.bits, dims.fc3_dim);
  grads.b_h1.assign(dims.bits, 0.0);
  grads.w_h2 = Matrix(dims.embed_dim, dims.fc3_dim);
  grads.b_h2.assign(dims.embed_dim, 0.0);
  grads.losses = losses;

  Vector dz1(dims.fc3_dim), dz2(dims.bits), dz3(dims.embed_dim);
  Vector da(dims.fc3_dim);
  for (size_t i = 0; i < k; ++i) {
    const auto a = acts.fc3_out.row(i);
    const auto x = batch.features.row(i);

    for (size_t b = 0; b < dims.bits; ++b) {
      const double s = h1(i, b);
      dz2[b] = dh1(i, b) * s * (1.0 - s);
      grads.b_h1[b] += dz2[b];
      auto wrow = grads.w_h1.row(b);
      for (size_t c = 0; c < dims.fc3_dim; ++c) wrow[c] += dz2[b] * a[c];
    }
    for (size_t e = 0; e < dims.embed_dim; ++e) {
      const double t = h2(i, e);
      dz3[e] = dh2(i, e) * (1.0 - t * t);
      grads.b_h2[e] += dz3[e];
      auto wrow = grads.w_h2.row(e);
      for (size_t c = 0; c < dims.fc3_dim; ++c) wrow[c] += dz3[e] * a[c];
    }

    std::fill(da.begin(), da.end(), 0.0);
    for (size_t b = 0; b < dims.bits; ++b) {
      if (dz2[b] == 0.0) continue;
      const auto wrow = params.w_h1.row(b);
      for (size_t c = 0; c < dims.fc3_dim; ++c) da[c] += dz2[b] * wrow[c];
    }
    for (size_t e = 0; e < dims.embed_dim; ++e) {
      if (dz3[e] == 0.0) continue;
      const auto wrow = params.w_h2.row(e);
      for (size_t c = 0; c < dims.fc3_dim; ++c) da[c] += dz3[e] * wrow[c];
    }

    for (size_t c = 0; c < dims.fc3_dim; ++c) {
      dz1[c] = acts.fc3_pre(i, c) > 0.0 ? da[c] : 0.0;
      grads.b_fc3[c] += dz1[c];
      if (dz1[c] == 0.0) continue;
      auto wrow = grads.w_fc3.row(c);
      for (size_t d = 0; d < dims.input_dim; ++d) wrow[d] += dz1[c] * x[d];
    }
  }
  return grads;
}

GradientSet finite_diff_grad(const NetworkParams& params,
                             const TrainBatch& batch, const HyperParams& hyper,
                             double step) {
  NetworkParams probe = params;
  const auto eval = [&]() {
    return compute_losses(forward(probe, batch.features), batch, hyper).total;
  };

  GradientSet grads;
  grads.w_fc3 = Matrix(params.dims.fc3_dim, params.dims.input_dim);
  grads.b_fc3.assign(params.dims.fc3_dim, 0.0);
  grads.w_h1 = Matrix(params.dims.bits, params.dims.fc3_dim);
  grads.b_h1.assign(params.dims.bits, 0.0);
  grads.w_h2 = Matrix(params.dims.embed_dim, params.dims.fc3_dim);
  grads.b_h2.assign(params.dims.embed_dim, 0.0);
  grads.losses = compute_losses(forward(probe, batch.features), batch, hyper);

  auto probe_views = tensor_views(probe);
  auto grad_views = tensor_views(grads);
  for (size_t t = 0; t < probe_views.size(); ++t) {
    for (size_t i = 0; i < probe_views[t].size(); ++i) {
      double& p = probe_views[t][i];
      const double saved = p;
      p = saved + step;
      const double plus = eval();
      p = saved - step;
      const double minus = eval();
      p = saved;
      grad_views[t][i] = (plus - minus) / (2.0 * step);
    }
  }
  return grads;
}

void sgd_momentum_step(NetworkParams& params, MomentumState& state,
                       const GradientSet& grads, const HyperParams& hyper) {
  auto p = tensor_views(params);
  auto v = tensor_views(state);
  auto g = tensor_views(grads);
  for (size_t t = 0; t < p.size(); ++t) {
    if (p[t].size() != g[t].size()) {
      throw DataError("gradient shape does not match parameters");
    }
    for (size_t i = 0; i < p[t].size(); ++i) {
      v[t][i] = hyper.momentum * v[t][i] + g[t][i];
      p[t][i] -= hyper.learning_rate * v[t][i];
    }
  }
}

GradCheckReport gradient_check(size_t seeds, double tolerance,
                               const LayerDims& dims, size_t batch_size) {
  GradCheckReport report;
  report.tolerance = tolerance;

  // One entry per loss configuration: each component alone, the joint
  // objectives, and the binary-tag mode.
  struct Case {
    LossMode mode;
    double l1, l2, l3, l4;
  };
  const Case cases[] = {
      {LossMode::kWdht, 1.0, 0.0, 0.0, 0.0},
      {LossMode::kWdht, 0.0, 1.0, 0.0, 0.0},
      {LossMode::kWdht, 0.0, 0.0, 1.0, 0.0},
      {LossMode::kWdht, 1.0, 10.0, 1.0, 0.0},
      {LossMode::kBinaryTag, 0.0, 0.0, 1.0, 1.0},
  };

  for (size_t seed = 1; seed <= seeds; ++seed) {
    for (size_t c = 0; c < std::size(cases); ++c) {
      HyperParams hyper;
      hyper.lambda1 = cases[c].l1;
      hyper.lambda2 = cases[c].l2;
      hyper.lambda3 = cases[c].l3;
      hyper.lambda4 = cases[c].l4;
      hyper.seed = seed;

      const NetworkParams params =
          init_glorot(dims, seed * 1000 + c);
      Rng rng(seed * 7777 + c * 101);

      TrainBatch batch;
      batch.mode = cases[c].mode;
      batch.features = Matrix(batch_size, dims.input_dim);
      for (size_t i = 0; i < batch.features.size(); ++i) {
        batch.features.data()[i] = rng.uniform(-1.0, 1.0);
      }
      if (batch.mode == LossMode::kWdht) {
        batch.tag_vectors = Matrix(batch_size, dims.embed_dim);
        for (size_t i = 0; i < batch.tag_vectors.size(); ++i) {
          batch.tag_vectors.data()[i] = rng.normal();
        }
      } else {
        batch.similarity = Matrix(batch_size, batch_size);
        for (size_t i = 0; i < batch_size; ++i) {
          batch.similarity(i, i) = 1.0;
          for (size_t j = i + 1; j < batch_size; ++j) {
            const double s = rng.uniform() < 0.5 ? 1.0 : 0.0;
            batch.similarity(i, j) = batch.similarity(j, i) = s;
          }
        }
      }

      const ForwardActivations acts = forward(params, batch.features);
      const GradientSet analytic = backward(params, acts, batch, hyper);
      const GradientSet numeric = finite_diff_grad(params, batch, hyper);

      const auto a_views = tensor_views(analytic);
      const auto n_views = tensor_views(numeric);
      for (size_t t = 0; t < a_views.size(); ++t) {
        for (size_t i = 0; i < a_views[t].size(); ++i) {
          const double a = a_views[t][i];
          const double f = n_views[t][i];
          const double rel =
              std::abs(a - f) / std::max({1.0, std::abs(a), std::abs(f)});
          report.max_rel_err = std::max(report.max_rel_err, rel);
        }
      }
      ++report.cases;
    }
  }
  report.pass = report.max_rel_err <= tolerance;
  return report;
}

namespace {
template <typename Params, typename Span>
std::vector<Span> views_of(Params& p) {
  return {Span{p.w_fc3.data(), p.w_fc3.size()}, Span{p.b_fc3},
          Span{p.w_h1.data(), p.w_h1.size()},  Span{p.b_h1},
          Span{p.w_h2.data(), p.w_h2.size()},  Span{p.b_h2}};
}
}  // namespace

std::vector<std::span<double>> tensor_views(NetworkParams& params) {
  return views_of<NetworkParams, std::span<double>>(params);
}
std::vector<std::span<const double>> tensor_views(const NetworkParams& params) {
  return views_of<const NetworkParams, std::span<const double>>(params);
}
std::vector<std::span<double>> tensor_views(GradientSet& grads) {
  return views_of<GradientSet, std::span<double>>(grads);
}
std::vector<std::span<const double>> tensor_views(const GradientSet& grads) {
  return views_of<const GradientSet, std::span<const double>>(grads);
}
std::vector<std::span<double>> tensor_views(MomentumState& state) {
  return views_of<MomentumState, std::span<double>>(state);
}

Matrix tag_similarity(const std::vector<TagSet>& tags) {
  const size_t k = tags.size();
  // Intern tokens, then intersect sorted id sets pairwise.
  std::unordered_map<std::string, int> vocab;
  std::vector<std::vector<int>> ids(k);
  for (size_t i = 0; i < k; ++i) {
    for (const auto& tag : tags[i].tags) {
      const auto [it, _] = vocab.emplace(tag, static_cast<int>(vocab.size()));
      ids[i].push_back(it->second);
    }
    std::sort(ids[i].begin(), ids[i].end());
    ids[i].erase(std::unique(ids[i].begin(), ids[i].end()), ids[i].end());
  }

  Matrix s(k, k);
  for (size_t i = 0; i < k; ++i) {
    s(i, i) = 1.0;
    for (size_t j = i + 1; j < k; ++j) {
      bool shared = false;
      auto a = ids[i].begin();
      auto b = ids[j].begin();
      while (a != ids[i].end() && b != ids[j].end()) {
        if (*a == *b) { shared = true; break; }
        if (*a < *b) ++a; else ++b;
      }
      s(i, j) = s(j, i) = shared ? 1.0 : 0.0;
    }
  }
  return s;
}

namespace {

struct BatchSupervision {
  const Matrix* tag_vectors = nullptr;           // kWdht
  const std::vector<TagSet>* tag_sets = nullptr; // kBinaryTag
};

TrainResult train_impl(const Matrix& features, const LayerDims& dims,
                       const HyperParams& hyper, LossMode mode,
                       const BatchSupervision& supervision) {
  validate(hyper);
  const size_t n = features.rows();
  if (n < hyper.batch_size) {
    throw DataError("training needs at least batch_size (" +
                    std::to_string(hyper.batch_size) + ") samples, got " +
                    std::to_string(n));
  }
  if (features.cols() != dims.input_dim) {
    throw DataError("feature dim does not match configured input dim");
  }
  if (mode == LossMode::kWdht) {
    const Matrix& w = *supervision.tag_vectors;
    if (w.rows() != n) throw DataError("tag vector count does not match features");
    if (w.cols() != dims.embed_dim) {
      throw DataError("tag vector dim does not match configured embed dim");
    }
    if (!w.all_finite()) throw NumericError("non-finite tag vectors");
    if (hyper.lambda1 > 0.0) row_norms_checked(w);
  } else if (supervision.tag_sets->size() != n) {
    throw DataError("tag set count does not match features");
  }

  TrainResult result;
  result.params = init_glorot(dims, hyper.seed);
  MomentumState state(dims);
  // Separate stream from the init draw so epochs reshuffle independently.
  Rng shuffle_rng(hyper.seed ^ 0xD1B54A32D192ED03ULL);

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});

  for (size_t epoch = 1; epoch <= hyper.epochs; ++epoch) {
    shuffle_rng.shuffle(order);

    LossValues sums;
    size_t batches = 0;
    for (size_t start = 0; start < n; start += hyper.batch_size) {
      const size_t count = std::min(hyper.batch_size, n - start);
      if (count == 1 && hyper.batch_size > 1) continue;  // no pairs to form

      TrainBatch batch;
      batch.mode = mode;
      batch.features = Matrix(count, dims.input_dim);
      for (size_t i = 0; i < count; ++i) {
        auto src = features.row(order[start + i]);
        std::copy(src.begin(), src.end(), batch.features.row(i).begin());
      }
      if (mode == LossMode::kWdht) {
        batch.tag_vectors = Matrix(count, dims.embed_dim);
        for (size_t i = 0; i < count; ++i) {
          auto src = supervision.tag_vectors->row(order[start + i]);
          std::copy(src.begin(), src.end(), batch.tag_vectors.row(i).begin());
        }
      } else {
        std::vector<TagSet> batch_tags(count);
        for (size_t i = 0; i < count; ++i) {
          batch_tags[i] = (*supervision.tag_sets)[order[start + i]];
        }
        batch.similarity = tag_similarity(batch_tags);
      }

      const ForwardActivations acts = forward(result.params, batch.features);
      const GradientSet grads = backward(result.params, acts, batch, hyper);
      if (!std::isfinite(grads.losses.total)) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch));
      }
      sgd_momentum_step(result.params, state, grads, hyper);

      sums.l1 += grads.losses.l1;
      sums.l2 += grads.losses.l2;
      sums.l3 += grads.losses.l3;
      sums.l4 += grads.losses.l4;
      sums.total += grads.losses.total;
      ++batches;
    }

    EpochLoss entry;
    entry.epoch = epoch;
    if (batches > 0) {
      const double inv = 1.0 / static_cast<double>(batches);
      entry.mean = {sums.l1 * inv, sums.l2 * inv, sums.l3 * inv, sums.l4 * inv,
                    sums.total * inv};
    }
    result.history.push_back(entry);
  }
  return result;
}

}  // namespace

TrainResult train_wdht(const Matrix& features, const Matrix& tag_vectors,
                       const LayerDims& dims, const HyperParams& hyper) {
  BatchSupervision supervision;
  supervision.tag_vectors = &tag_vectors;
  return train_impl(features, dims, hyper, LossMode::kWdht, supervision);
}

TrainResult train_binary_tag(const Matrix& features,
                             const std::vector<TagSet>& tags,
                             const LayerDims& dims, const HyperParams& hyper) {
  BatchSupervision supervision;
  supervision.tag_sets = &tags;
  return train_impl(features, dims, hyper, LossMode::kBinaryTag, supervision);
}

CodeMatrix encode(const NetworkParams& params, const Matrix& features) {
  const LayerDims& dims = params.dims;
  if (features.cols() != dims.input_dim) {
    throw DataError("feature dim " + std::to_string(features.cols()) +
                    " does not match checkpoint input dim " +
                    std::to_string(dims.input_dim));
  }
  if (!features.all_finite()) throw NumericError("non-finite input features");

  CodeMatrix codes(features.rows(), static_cast<uint32_t>(dims.bits));
  Vector a(dims.fc3_dim);
  Vector h1(dims.bits);
  for (size_t i = 0; i < features.rows(); ++i) {
    const auto x = features.row(i);
    for (size_t c = 0; c < dims.fc3_dim; ++c) {
      const double z = dot(params.w_fc3.row(c), x) + params.b_fc3[c];
      a[c] = z > 0.0 ? z : 0.0;
    }
    for (size_t b = 0; b < dims.bits; ++b) {
      h1[b] = sigmoid(dot(params.w_h1.row(b), a) + params.b_h1[b]);
    }
    codes.set_row(i, binarize(h1));
  }
  return codes;
}

void save_checkpoint(const std::string& path, const NetworkParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  binio::write_magic(out, kCheckpointMagic);
  binio::write_u32(out, kCheckpointVersion);
  binio::write_u32(out, static_cast<uint32_t>(params.dims.input_dim));
  binio::write_u32(out, static_cast<uint32_t>(params.dims.fc3_dim));
  binio::write_u32(out, static_cast<uint32_t>(params.dims.bits));
  binio::write_u32(out, static_cast<uint32_t>(params.dims.embed_dim));
  for (const auto view : tensor_views(params)) {
    for (double v : view) binio::write_f32(out, static_cast<float>(v));
  }
  if (!out) throw DataError("write failed: " + path);
}

NetworkParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path);
  binio::expect_magic(in, kCheckpointMagic, path);
  const uint32_t version = binio::read_u32(in, path + " version");
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version) +
                    " in " + path);
  }
  LayerDims dims;
  dims.input_dim = binio::read_u32(in, path + " input_dim");
  dims.fc3_dim = binio::read_u32(in, path + " fc3_dim");
  dims.bits = binio::read_u32(in, path + " bits");
  dims.embed_dim = binio::read_u32(in, path + " embed_dim");
  check_dims(dims);

  NetworkParams params;
  params.dims = dims;
  params.w_fc3 = Matrix(dims.fc3_dim, dims.input_dim);
  params.b_fc3.assign(dims.fc3_dim, 0.0);
  params.w_h1 = Matrix(dims.bits, dims.fc3_dim);
  params.b_h1.assign(dims.bits, 0.0);
  params.w_h2 = Matrix(dims.embed_dim, dims.fc3_dim);
  params.b_h2.assign(dims.embed_dim, 0.0);
  for (auto view : tensor_views(params)) {
    for (double& v : view) {
      v = static_cast<double>(binio::read_f32(in, path + " tensor data"));
    }
  }
  return params;
}

void save_loss_history(const std::string& path,
                       const std::vector<EpochLoss>& history) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  out.precision(17);
  out << "epoch,L1,L2,L3,L4,total\n";
  for (const auto& entry : history) {
    out << entry.epoch << ',' << entry.mean.l1 << ',' << entry.mean.l2 << ','
        << entry.mean.l3 << ',' << entry.mean.l4 << ',' << entry.mean.total
        << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace wdht
