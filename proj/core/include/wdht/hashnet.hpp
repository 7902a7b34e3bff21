#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wdht/codec.hpp"
#include "wdht/matrix.hpp"
#include "wdht/tagvec.hpp"

namespace wdht {

// Trainable head on top of precomputed image features:
//   features -> FC3 (ReLU) -> H1 (sigmoid, one unit per hash bit)
//                          -> H2 (tanh, one unit per tag-embedding dim)
// H1 drives the pairwise similarity and quantization losses and is the only
// head used at inference; H2 carries the tag-embedding ranking loss.

struct LayerDims {
  size_t input_dim = 4096;
  size_t fc3_dim = 256;
  size_t bits = 32;
  size_t embed_dim = 300;
};

// Loss selection: kWdht trains on aggregated tag vectors
// (lambda1*L1 + lambda2*L2 + lambda3*L3); kBinaryTag trains on share-a-tag
// pair similarity (lambda3*L3 + lambda4*L4).
enum class LossMode { kWdht, kBinaryTag };

LossMode parse_loss_mode(const std::string& name);
std::string to_string(LossMode mode);

struct NetworkParams {
  LayerDims dims;
  Matrix w_fc3;  // [fc3_dim x input_dim]
  Vector b_fc3;  // [fc3_dim]
  Matrix w_h1;   // [bits x fc3_dim]
  Vector b_h1;   // [bits]
  Matrix w_h2;   // [embed_dim x fc3_dim]
  Vector b_h2;   // [embed_dim]
};

struct HyperParams {
  double lambda1 = 1.0;
  double lambda2 = 10.0;
  double lambda3 = 1.0;
  double lambda4 = 1.0;
  double margin_hinge = 0.1;        // ranking loss (L2)
  double margin_contrastive = 1.0;  // contrastive loss (L4)
  double learning_rate = 0.001;
  double momentum = 0.9;
  size_t batch_size = 128;
  size_t epochs = 50;
  uint64_t seed = 1;
};

void validate(const HyperParams& hyper);

struct ForwardActivations {
  Matrix fc3_pre, fc3_out;  // [k x fc3_dim]
  Matrix h1_pre, h1_out;    // [k x bits], entries in (0,1)
  Matrix h2_pre, h2_out;    // [k x embed_dim], entries in (-1,1)
};

struct LossValues {
  double l1 = 0.0;
  double l2 = 0.0;
  double l3 = 0.0;
  double l4 = 0.0;
  double total = 0.0;
};

struct GradientSet {
  Matrix w_fc3;
  Vector b_fc3;
  Matrix w_h1;
  Vector b_h1;
  Matrix w_h2;
  Vector b_h2;
  LossValues losses;
};

struct MomentumState {
  Matrix w_fc3;
  Vector b_fc3;
  Matrix w_h1;
  Vector b_h1;
  Matrix w_h2;
  Vector b_h2;

  explicit MomentumState(const LayerDims& dims);
};

// One mini-batch plus the supervision the selected mode needs.
struct TrainBatch {
  Matrix features;     // [k x input_dim]
  Matrix tag_vectors;  // [k x embed_dim]; kWdht only
  Matrix similarity;   // [k x k] 0/1, symmetric; kBinaryTag only
  LossMode mode = LossMode::kWdht;
};

// Weights ~ N(0, 2 / (fan_in + fan_out)), biases zero; deterministic per seed.
NetworkParams init_glorot(const LayerDims& dims, uint64_t seed);

ForwardActivations forward(const NetworkParams& params, const Matrix& features);

// L1: sum over all ordered pairs (i,j), self-pairs included, of
//   [ (1/b)||h1_i - h1_j||^2 - (1 - cos(w_i, w_j)) / 2 ]^2
double loss_pairwise(const Matrix& h1, const Matrix& tag_vectors);

// L2: sum over samples n and impostors j != n of
//   max(0, margin + w_j . h2_n - w_n . h2_n)
double loss_hinge(const Matrix& h2, const Matrix& tag_vectors, double margin);

// L3: -sum_i (1/b)||h1_i - 0.5|| ^2; in [-k/4, 0], minimized at saturated bits.
double loss_quantization(const Matrix& h1);

// L4: with D = (1/b)||h1_i - h1_j||^2 and beta the similar-pair fraction
// clamped to [0.01, 0.99]:
//   sum over ordered pairs of S*(1-beta)*D + (1-S)*beta*max(0, margin - D)^2
double loss_contrastive(const Matrix& h1, const Matrix& similarity,
                        double margin);

double total_loss(const LossValues& losses, const HyperParams& hyper,
                  LossMode mode);

LossValues compute_losses(const ForwardActivations& acts,
                          const TrainBatch& batch, const HyperParams& hyper);

// Analytic gradients of the weighted total loss, pairwise coupling included.
// Hinge subgradient at the kink is 0.
GradientSet backward(const NetworkParams& params,
                     const ForwardActivations& acts, const TrainBatch& batch,
                     const HyperParams& hyper);

// Central differences (f(p+h) - f(p-h)) / 2h over every parameter. O(#params)
// forward passes; the verification oracle for backward().
GradientSet finite_diff_grad(const NetworkParams& params,
                             const TrainBatch& batch, const HyperParams& hyper,
                             double step = 1e-5);

// Classical momentum: v <- mu*v + g; p <- p - lr*v.
void sgd_momentum_step(NetworkParams& params, MomentumState& state,
                       const GradientSet& grads, const HyperParams& hyper);

struct GradCheckReport {
  double max_rel_err = 0.0;
  double tolerance = 1e-4;
  size_t cases = 0;
  bool pass = false;
};

// Sweeps random small networks and batches across every loss configuration
// (each component alone, the joint objectives, both modes) and compares
// backward() against the central-difference oracle. Relative error per
// parameter is |a - f| / max(1, |a|, |f|).
GradCheckReport gradient_check(size_t seeds, double tolerance,
                               const LayerDims& dims, size_t batch_size);

// Per-tensor spans in the fixed serialization order (W_fc3, b_fc3, W_h1, b_h1,
// W_h2, b_h2); shared by the optimizer, the checkpoint codec and the
// finite-difference oracle.
std::vector<std::span<double>> tensor_views(NetworkParams& params);
std::vector<std::span<const double>> tensor_views(const NetworkParams& params);
std::vector<std::span<double>> tensor_views(GradientSet& grads);
std::vector<std::span<const double>> tensor_views(const GradientSet& grads);
std::vector<std::span<double>> tensor_views(MomentumState& state);

struct EpochLoss {
  size_t epoch = 0;  // 1-based
  LossValues mean;   // per-batch means for the epoch
};

struct TrainResult {
  NetworkParams params;
  std::vector<EpochLoss> history;
};

// Mini-batch SGD with momentum; shuffling and init both derive from
// hyper.seed, so a seed fixes the whole run.
TrainResult train_wdht(const Matrix& features, const Matrix& tag_vectors,
                       const LayerDims& dims, const HyperParams& hyper);
TrainResult train_binary_tag(const Matrix& features,
                             const std::vector<TagSet>& tags,
                             const LayerDims& dims, const HyperParams& hyper);

// 0/1 similarity: S_ij = 1 iff the samples share at least one tag (S_ii = 1).
Matrix tag_similarity(const std::vector<TagSet>& tags);

// Threshold H1 activations into packed codes; tags are not needed here.
CodeMatrix encode(const NetworkParams& params, const Matrix& features);

// Checkpoint: magic "WDHM", version u32 LE, dims (input, fc3, bits, embed) as
// u32 LE, then each tensor row-major f32 LE in the tensor_views order.
void save_checkpoint(const std::string& path, const NetworkParams& params);
NetworkParams load_checkpoint(const std::string& path);

// CSV "epoch,L1,L2,L3,L4,total".
void save_loss_history(const std::string& path,
                       const std::vector<EpochLoss>& history);

}  // namespace wdht
