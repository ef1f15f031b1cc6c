#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "relforge/wordpiece.hpp"

namespace relforge::scorer {

// Deterministic stand-in for a pretrained encoder: h is the mean over
// masked positions of a seeded-hash embedding of (token id, segment).
// Frozen during training; only heads learn.
struct EncoderParams {
  int dim = 64;
  std::uint64_t seed = 0;
  int table_size = 4096;  // hashed embedding rows
};

std::vector<double> encode_features(const wordpiece::EncodedSequence& seq,
                                    const EncoderParams& params);

// softmax(W h) over {irrelevant=0, relevant=1}; W is 2 x dim row-major.
struct LogisticHead {
  int dim = 0;
  std::vector<double> w;
};

// softmax(W2 relu(W1 h + b1) + b2); W1 hidden x dim, W2 2 x hidden.
struct MlpHead {
  int dim = 0;
  int hidden = 32;
  std::vector<double> w1, b1, w2, b2;
};

enum class HeadKind { Logistic, Mlp };

struct Model {
  HeadKind kind = HeadKind::Logistic;
  EncoderParams encoder;
  LogisticHead logistic;
  MlpHead mlp;
  std::string name = "model";
};

LogisticHead init_logistic(int dim);  // zeros
MlpHead init_mlp(int dim, int hidden, std::uint64_t seed);
Model init_model(HeadKind kind, const EncoderParams& enc, int hidden,
                 std::uint64_t seed);

double logistic_head_prob(std::span<const double> h, const LogisticHead& head);
double mlp_head_prob(std::span<const double> h, const MlpHead& head);
double model_prob(std::span<const double> h, const Model& model);

// Cross-entropy loss over C classes with signed labels: label k in
// [0, C-1] is "class k"; label -(k+1) is "not class k" and costs
// -log(1 - softmax_k). Stable log-sum-exp throughout.
double complement_softmax_loss(std::span<const double> logits, int signed_label);
std::vector<double> complement_softmax_loss_grad(std::span<const double> logits,
                                                 int signed_label);

struct LabeledPair {
  std::string query_id;
  std::string item_id;
  wordpiece::EncodedSequence encoded;
  int label = 0;  // 0 irrelevant, 1 relevant
};

struct TrainConfig {
  double learning_rate = 0.1;
  int batch_size = 32;
  int max_epochs = 50;
  double eval_fraction = 0.1;
  int patience = 5;  // epochs without eval-AUC improvement; <=0 disables
  std::uint64_t seed = 0;
};

// Shuffles within each query by a seed derived from (seed, query_id) and
// sends floor(n * eval_fraction) examples (at least 1 when n >= 2) to eval.
std::pair<std::vector<LabeledPair>, std::vector<LabeledPair>> split_per_query(
    const std::vector<LabeledPair>& data, double eval_fraction,
    std::uint64_t seed);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double eval_auc = 0.0;
  bool has_eval_auc = false;
};

struct TrainResult {
  Model model;
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_auc = 0.0;
};

// Mini-batch gradient descent on head parameters only (the encoder stays
// frozen). Stops at max_epochs or when eval AUC fails to improve for
// `patience` epochs; returns the best-AUC head seen.
TrainResult train_head(const std::vector<LabeledPair>& train,
                       const std::vector<LabeledPair>& eval,
                       const EncoderParams& enc, const TrainConfig& cfg,
                       HeadKind kind, int hidden = 32);

// ROC AUC by the rank statistic; tied scores contribute 1/2.
double batch_auc(std::span<const double> scores, std::span<const int> labels);

// Text model file: header `model-kind dim hidden seed`, then one
// whitespace-separated row per matrix row, 17 significant digits.
void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);

// TSV epoch<TAB>train_loss<TAB>eval_auc.
void write_train_log(const std::filesystem::path& path,
                     const std::vector<EpochLog>& log);

// Per-example losses and gradients, exposed for training and for the
// finite-difference checks in the test suite.
double logistic_loss_grad(std::span<const double> h, int label,
                          const LogisticHead& head, std::span<double> grad_w);
double mlp_loss_grad(std::span<const double> h, int label, const MlpHead& head,
                     std::span<double> g_w1, std::span<double> g_b1,
                     std::span<double> g_w2, std::span<double> g_b2);

}  // namespace relforge::scorer
