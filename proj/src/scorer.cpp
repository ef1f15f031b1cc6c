#include "relforge/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "relforge/errors.hpp"
#include "relforge/mix.hpp"
#include "relforge/tsv.hpp"

namespace relforge::scorer {

namespace {

double embedding_component(std::uint64_t seed_mix, std::uint64_t row, int d) {
  std::uint64_t u =
      splitmix64(seed_mix ^ (row * 0x100000001B3ULL + static_cast<std::uint64_t>(d)));
  return static_cast<double>(u >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

}  // namespace

std::vector<double> encode_features(const wordpiece::EncodedSequence& seq,
                                    const EncoderParams& params) {
  if (params.dim < 1 || params.table_size < 1)
    throw ContractError("encoder params: dim and table_size must be >= 1");
  const std::uint64_t row_seed = splitmix64(params.seed ^ 0x9E3779B97F4A7C15ULL);
  const std::uint64_t val_seed = splitmix64(params.seed + 0x632BE59BD9B4E019ULL);

  std::vector<double> h(static_cast<std::size_t>(params.dim), 0.0);
  std::size_t count = 0;
  for (std::size_t i = 0; i < seq.ids.size(); ++i) {
    if (seq.mask[i] != 1) continue;
    const std::uint64_t key =
        (static_cast<std::uint64_t>(static_cast<std::uint32_t>(seq.ids[i])) << 1) |
        static_cast<std::uint64_t>(seq.segments[i] & 1);
    const std::uint64_t row =
        splitmix64(row_seed ^ key) % static_cast<std::uint64_t>(params.table_size);
    for (int d = 0; d < params.dim; ++d)
      h[static_cast<std::size_t>(d)] += embedding_component(val_seed, row, d);
    ++count;
  }
  if (count > 0)
    for (double& v : h) v /= static_cast<double>(count);
  return h;
}

LogisticHead init_logistic(int dim) {
  LogisticHead head;
  head.dim = dim;
  head.w.assign(static_cast<std::size_t>(2 * dim), 0.0);
  return head;
}

MlpHead init_mlp(int dim, int hidden, std::uint64_t seed) {
  if (hidden < 1) throw ContractError("mlp hidden must be >= 1");
  MlpHead head;
  head.dim = dim;
  head.hidden = hidden;
  MixRng rng(splitmix64(seed ^ 0xC2B2AE3D27D4EB4FULL));
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  head.w1.resize(static_cast<std::size_t>(hidden * dim));
  for (double& v : head.w1) v = rng.next_symmetric() * scale;
  head.b1.assign(static_cast<std::size_t>(hidden), 0.0);
  const double scale2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  head.w2.resize(static_cast<std::size_t>(2 * hidden));
  for (double& v : head.w2) v = rng.next_symmetric() * scale2;
  head.b2.assign(2, 0.0);
  return head;
}

Model init_model(HeadKind kind, const EncoderParams& enc, int hidden,
                 std::uint64_t seed) {
  Model m;
  m.kind = kind;
  m.encoder = enc;
  if (kind == HeadKind::Logistic)
    m.logistic = init_logistic(enc.dim);
  else
    m.mlp = init_mlp(enc.dim, hidden, seed);
  return m;
}

namespace {

// Returns (p0, p1) for two logits, stably.
std::pair<double, double> softmax2(double z0, double z1) {
  const double m = std::max(z0, z1);
  const double e0 = std::exp(z0 - m), e1 = std::exp(z1 - m);
  const double s = e0 + e1;
  return {e0 / s, e1 / s};
}

std::pair<double, double> logistic_logits(std::span<const double> h,
                                          const LogisticHead& head) {
  if (static_cast<int>(h.size()) != head.dim)
    throw ContractError("logistic head: h width " + std::to_string(h.size()) +
                        " != dim " + std::to_string(head.dim));
  const std::size_t dim = h.size();
  double z0 = 0.0, z1 = 0.0;
  for (std::size_t k = 0; k < dim; ++k) {
    z0 += head.w[k] * h[k];
    z1 += head.w[dim + k] * h[k];
  }
  return {z0, z1};
}

struct MlpForward {
  std::vector<double> z1, a;
  double logit0 = 0.0, logit1 = 0.0;
};

MlpForward mlp_forward(std::span<const double> h, const MlpHead& head) {
  if (static_cast<int>(h.size()) != head.dim)
    throw ContractError("mlp head: h width " + std::to_string(h.size()) +
                        " != dim " + std::to_string(head.dim));
  const auto dim = static_cast<std::size_t>(head.dim);
  const auto hid = static_cast<std::size_t>(head.hidden);
  MlpForward f;
  f.z1.resize(hid);
  f.a.resize(hid);
  for (std::size_t j = 0; j < hid; ++j) {
    double z = head.b1[j];
    for (std::size_t k = 0; k < dim; ++k) z += head.w1[j * dim + k] * h[k];
    f.z1[j] = z;
    f.a[j] = z > 0.0 ? z : 0.0;
  }
  f.logit0 = head.b2[0];
  f.logit1 = head.b2[1];
  for (std::size_t j = 0; j < hid; ++j) {
    f.logit0 += head.w2[j] * f.a[j];
    f.logit1 += head.w2[hid + j] * f.a[j];
  }
  return f;
}

}  // namespace

double logistic_head_prob(std::span<const double> h, const LogisticHead& head) {
  auto [z0, z1] = logistic_logits(h, head);
  return softmax2(z0, z1).second;
}

double mlp_head_prob(std::span<const double> h, const MlpHead& head) {
  MlpForward f = mlp_forward(h, head);
  return softmax2(f.logit0, f.logit1).second;
}

double model_prob(std::span<const double> h, const Model& model) {
  return model.kind == HeadKind::Logistic ? logistic_head_prob(h, model.logistic)
                                          : mlp_head_prob(h, model.mlp);
}

double complement_softmax_loss(std::span<const double> logits, int signed_label) {
  const int c = static_cast<int>(logits.size());
  if (c < 2) throw ContractError("complement_softmax_loss: need >= 2 classes");
  if (signed_label < -c || signed_label > c - 1)
    throw ContractError("complement_softmax_loss: label " +
                        std::to_string(signed_label) + " out of [-C, C-1]");
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - m);
  const double lse = m + std::log(sum);
  if (signed_label >= 0) return lse - logits[static_cast<std::size_t>(signed_label)];

  const auto k = static_cast<std::size_t>(-signed_label - 1);
  double sum_wo = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j)
    if (j != k) sum_wo += std::exp(logits[j] - m);
  const double lse_wo = m + std::log(sum_wo);
  return lse - lse_wo;  // == -log(1 - softmax_k)
}

std::vector<double> complement_softmax_loss_grad(std::span<const double> logits,
                                                 int signed_label) {
  const int c = static_cast<int>(logits.size());
  if (c < 2) throw ContractError("complement_softmax_loss: need >= 2 classes");
  if (signed_label < -c || signed_label > c - 1)
    throw ContractError("complement_softmax_loss: label " +
                        std::to_string(signed_label) + " out of [-C, C-1]");
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    p[j] = std::exp(logits[j] - m);
    sum += p[j];
  }
  for (double& v : p) v /= sum;

  std::vector<double> grad(logits.size());
  if (signed_label >= 0) {
    for (std::size_t j = 0; j < logits.size(); ++j) grad[j] = p[j];
    grad[static_cast<std::size_t>(signed_label)] -= 1.0;
    return grad;
  }
  const auto k = static_cast<std::size_t>(-signed_label - 1);
  const double rest = 1.0 - p[k];
  for (std::size_t j = 0; j < logits.size(); ++j)
    grad[j] = j == k ? p[k] : p[j] - p[j] / rest;
  return grad;
}

double logistic_loss_grad(std::span<const double> h, int label,
                          const LogisticHead& head, std::span<double> grad_w) {
  auto [z0, z1] = logistic_logits(h, head);
  auto [p0, p1] = softmax2(z0, z1);
  const std::size_t dim = h.size();
  const double d0 = p0 - (label == 0 ? 1.0 : 0.0);
  const double d1 = p1 - (label == 1 ? 1.0 : 0.0);
  for (std::size_t k = 0; k < dim; ++k) {
    grad_w[k] = d0 * h[k];
    grad_w[dim + k] = d1 * h[k];
  }
  return -std::log(label == 1 ? p1 : p0);
}

double mlp_loss_grad(std::span<const double> h, int label, const MlpHead& head,
                     std::span<double> g_w1, std::span<double> g_b1,
                     std::span<double> g_w2, std::span<double> g_b2) {
  MlpForward f = mlp_forward(h, head);
  auto [p0, p1] = softmax2(f.logit0, f.logit1);
  const auto dim = static_cast<std::size_t>(head.dim);
  const auto hid = static_cast<std::size_t>(head.hidden);
  const double d0 = p0 - (label == 0 ? 1.0 : 0.0);
  const double d1 = p1 - (label == 1 ? 1.0 : 0.0);
  g_b2[0] = d0;
  g_b2[1] = d1;
  for (std::size_t j = 0; j < hid; ++j) {
    g_w2[j] = d0 * f.a[j];
    g_w2[hid + j] = d1 * f.a[j];
    const double da = d0 * head.w2[j] + d1 * head.w2[hid + j];
    const double dz1 = f.z1[j] > 0.0 ? da : 0.0;
    g_b1[j] = dz1;
    for (std::size_t k = 0; k < dim; ++k) g_w1[j * dim + k] = dz1 * h[k];
  }
  return -std::log(label == 1 ? p1 : p0);
}

std::pair<std::vector<LabeledPair>, std::vector<LabeledPair>> split_per_query(
    const std::vector<LabeledPair>& data, double eval_fraction,
    std::uint64_t seed) {
  if (!(eval_fraction > 0.0 && eval_fraction < 1.0))
    throw ContractError("eval_fraction must be in (0,1)");

  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<std::size_t>> by_query;
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto [it, inserted] = by_query.try_emplace(data[i].query_id);
    if (inserted) order.push_back(data[i].query_id);
    it->second.push_back(i);
  }

  std::vector<LabeledPair> train, eval;
  for (const auto& qid : order) {
    auto idx = by_query.at(qid);
    MixRng rng(splitmix64(seed) ^ hash_str(seed, qid));
    deterministic_shuffle(idx, rng);
    const std::size_t n = idx.size();
    std::size_t n_eval = 0;
    if (n >= 2) {
      n_eval = static_cast<std::size_t>(
          std::floor(static_cast<double>(n) * eval_fraction));
      n_eval = std::max<std::size_t>(n_eval, 1);
    }
    for (std::size_t i = 0; i < n; ++i)
      (i < n_eval ? eval : train).push_back(data[idx[i]]);
  }
  return {std::move(train), std::move(eval)};
}

double batch_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size())
    throw ContractError("batch_auc: scores/labels size mismatch");
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (int l : labels) n_pos += (l == 1);
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw ContractError("batch_auc: undefined metric, both classes required");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });
  // average ranks over tie groups, 1-based
  std::vector<double> rank(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
    i = j + 1;
  }
  double pos_rank_sum = 0.0;
  for (std::size_t k = 0; k < n; ++k)
    if (labels[k] == 1) pos_rank_sum += rank[k];
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

namespace {

struct HeadParams {
  std::vector<double*> slots;  // flattened views over the live head

  static HeadParams of(Model& m) {
    HeadParams p;
    auto add = [&](std::vector<double>& v) {
      for (double& x : v) p.slots.push_back(&x);
    };
    if (m.kind == HeadKind::Logistic) {
      add(m.logistic.w);
    } else {
      add(m.mlp.w1);
      add(m.mlp.b1);
      add(m.mlp.w2);
      add(m.mlp.b2);
    }
    return p;
  }
};

}  // namespace

TrainResult train_head(const std::vector<LabeledPair>& train,
                       const std::vector<LabeledPair>& eval,
                       const EncoderParams& enc, const TrainConfig& cfg,
                       HeadKind kind, int hidden) {
  if (train.empty()) throw DataError("train_head: empty training set");
  bool has0 = false, has1 = false;
  for (const auto& p : train) (p.label == 1 ? has1 : has0) = true;
  if (!has0 || !has1)
    throw DataError("train_head: training data contains a single class");
  if (cfg.batch_size < 1 || cfg.max_epochs < 1)
    throw ContractError("train config: batch_size and max_epochs must be >= 1");

  // Encoder frozen: all features computed once.
  std::vector<std::vector<double>> train_h, eval_h;
  train_h.reserve(train.size());
  for (const auto& p : train) train_h.push_back(encode_features(p.encoded, enc));
  eval_h.reserve(eval.size());
  for (const auto& p : eval) eval_h.push_back(encode_features(p.encoded, enc));

  bool eval_usable = false;
  {
    bool e0 = false, e1 = false;
    for (const auto& p : eval) (p.label == 1 ? e1 : e0) = true;
    eval_usable = e0 && e1;
  }

  Model model = init_model(kind, enc, hidden, cfg.seed);
  const std::size_t dim = static_cast<std::size_t>(enc.dim);
  const std::size_t hid = static_cast<std::size_t>(model.mlp.hidden);

  std::vector<double> gw(2 * dim), gw1(hid * dim), gb1(hid), gw2(2 * hid), gb2(2);
  std::vector<double> aw, aw1, ab1, aw2, ab2;  // batch accumulators

  auto train_loss = [&]() {
    double total = 0.0;
    for (std::size_t i = 0; i < train.size(); ++i) {
      const double p = model_prob(train_h[i], model);
      total += -std::log(train[i].label == 1 ? p : 1.0 - p);
    }
    return total / static_cast<double>(train.size());
  };
  auto eval_auc = [&]() {
    std::vector<double> scores(eval.size());
    std::vector<int> labels(eval.size());
    for (std::size_t i = 0; i < eval.size(); ++i) {
      scores[i] = model_prob(eval_h[i], model);
      labels[i] = eval[i].label;
    }
    return batch_auc(scores, labels);
  };

  TrainResult result;
  Model best = model;
  double best_auc = -1.0;
  int best_epoch = 0;
  int stall = 0;

  MixRng shuffle_rng(splitmix64(cfg.seed ^ 0x9E3779B97F4A7C15ULL));
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    deterministic_shuffle(order, shuffle_rng);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const double inv = 1.0 / static_cast<double>(end - start);
      if (kind == HeadKind::Logistic) {
        aw.assign(2 * dim, 0.0);
        for (std::size_t i = start; i < end; ++i) {
          logistic_loss_grad(train_h[order[i]], train[order[i]].label,
                             model.logistic, gw);
          for (std::size_t k = 0; k < aw.size(); ++k) aw[k] += gw[k];
        }
        for (std::size_t k = 0; k < aw.size(); ++k)
          model.logistic.w[k] -= cfg.learning_rate * aw[k] * inv;
      } else {
        aw1.assign(hid * dim, 0.0);
        ab1.assign(hid, 0.0);
        aw2.assign(2 * hid, 0.0);
        ab2.assign(2, 0.0);
        for (std::size_t i = start; i < end; ++i) {
          mlp_loss_grad(train_h[order[i]], train[order[i]].label, model.mlp,
                        gw1, gb1, gw2, gb2);
          for (std::size_t k = 0; k < aw1.size(); ++k) aw1[k] += gw1[k];
          for (std::size_t k = 0; k < ab1.size(); ++k) ab1[k] += gb1[k];
          for (std::size_t k = 0; k < aw2.size(); ++k) aw2[k] += gw2[k];
          for (std::size_t k = 0; k < ab2.size(); ++k) ab2[k] += gb2[k];
        }
        const double step = cfg.learning_rate * inv;
        for (std::size_t k = 0; k < aw1.size(); ++k) model.mlp.w1[k] -= step * aw1[k];
        for (std::size_t k = 0; k < ab1.size(); ++k) model.mlp.b1[k] -= step * ab1[k];
        for (std::size_t k = 0; k < aw2.size(); ++k) model.mlp.w2[k] -= step * aw2[k];
        for (std::size_t k = 0; k < ab2.size(); ++k) model.mlp.b2[k] -= step * ab2[k];
      }
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = train_loss();
    if (eval_usable) {
      entry.eval_auc = eval_auc();
      entry.has_eval_auc = true;
      if (entry.eval_auc > best_auc) {
        best_auc = entry.eval_auc;
        best = model;
        best_epoch = epoch;
        stall = 0;
      } else {
        ++stall;
      }
    }
    result.log.push_back(entry);
    if (eval_usable && cfg.patience > 0 && stall >= cfg.patience) break;
  }

  if (eval_usable) {
    result.model = std::move(best);
    result.best_auc = best_auc;
    result.best_epoch = best_epoch;
  } else {
    result.model = std::move(model);
    result.best_auc = 0.0;
    result.best_epoch = static_cast<int>(result.log.size());
  }
  return result;
}

namespace {

void append_row(std::string& out, std::span<const double> row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out += ' ';
    out += tsv::format_sig(row[i], 17);
  }
  out += '\n';
}

std::vector<double> parse_row(const std::string& line, std::size_t expect,
                              const char* what) {
  std::istringstream ss(line);
  std::vector<double> row;
  std::string tok;
  while (ss >> tok) row.push_back(tsv::parse_double(tok, what));
  if (row.size() != expect)
    throw DataError(std::string("model file: row for ") + what + " has " +
                    std::to_string(row.size()) + " values, expected " +
                    std::to_string(expect));
  for (double v : row)
    if (!std::isfinite(v))
      throw DataError(std::string("model file: non-finite weight in ") + what);
  return row;
}

}  // namespace

void save_model(const std::filesystem::path& path, const Model& model) {
  std::string out;
  const bool logistic = model.kind == HeadKind::Logistic;
  out += logistic ? "logistic" : "mlp";
  out += ' ';
  out += std::to_string(model.encoder.dim);
  out += ' ';
  out += std::to_string(logistic ? 0 : model.mlp.hidden);
  out += ' ';
  out += std::to_string(model.encoder.seed);
  out += '\n';
  const auto dim = static_cast<std::size_t>(model.encoder.dim);
  if (logistic) {
    append_row(out, std::span(model.logistic.w).subspan(0, dim));
    append_row(out, std::span(model.logistic.w).subspan(dim, dim));
  } else {
    const auto hid = static_cast<std::size_t>(model.mlp.hidden);
    for (std::size_t j = 0; j < hid; ++j)
      append_row(out, std::span(model.mlp.w1).subspan(j * dim, dim));
    append_row(out, model.mlp.b1);
    for (std::size_t j = 0; j < 2; ++j)
      append_row(out, std::span(model.mlp.w2).subspan(j * hid, hid));
    append_row(out, model.mlp.b2);
  }
  tsv::write_file(path, out);
}

Model load_model(const std::filesystem::path& path) {
  auto lines = tsv::read_lines(path);
  if (lines.empty()) throw DataError("model file empty: " + path.string());
  std::istringstream header(lines[0]);
  std::string kind;
  long long dim = 0, hidden = 0;
  unsigned long long seed = 0;
  if (!(header >> kind >> dim >> hidden >> seed) ||
      (kind != "logistic" && kind != "mlp") || dim < 1)
    throw DataError("model file header malformed: " + path.string());

  Model model;
  model.encoder.dim = static_cast<int>(dim);
  model.encoder.seed = seed;
  model.name = path.stem().string();
  std::size_t next = 1;
  auto take_row = [&](std::size_t expect, const char* what) {
    if (next >= lines.size())
      throw DataError("model file truncated: " + path.string());
    return parse_row(lines[next++], expect, what);
  };
  const auto d = static_cast<std::size_t>(dim);
  if (kind == "logistic") {
    model.kind = HeadKind::Logistic;
    model.logistic.dim = static_cast<int>(dim);
    auto r0 = take_row(d, "W row 0");
    auto r1 = take_row(d, "W row 1");
    model.logistic.w = std::move(r0);
    model.logistic.w.insert(model.logistic.w.end(), r1.begin(), r1.end());
  } else {
    if (hidden < 1) throw DataError("model file: mlp hidden must be >= 1");
    model.kind = HeadKind::Mlp;
    model.mlp.dim = static_cast<int>(dim);
    model.mlp.hidden = static_cast<int>(hidden);
    const auto hd = static_cast<std::size_t>(hidden);
    model.mlp.w1.clear();
    for (std::size_t j = 0; j < hd; ++j) {
      auto row = take_row(d, "W1 row");
      model.mlp.w1.insert(model.mlp.w1.end(), row.begin(), row.end());
    }
    model.mlp.b1 = take_row(hd, "b1");
    model.mlp.w2.clear();
    for (std::size_t j = 0; j < 2; ++j) {
      auto row = take_row(hd, "W2 row");
      model.mlp.w2.insert(model.mlp.w2.end(), row.begin(), row.end());
    }
    model.mlp.b2 = take_row(2, "b2");
  }
  return model;
}

void write_train_log(const std::filesystem::path& path,
                     const std::vector<EpochLog>& log) {
  std::string out = "epoch\ttrain_loss\teval_auc\n";
  for (const auto& e : log) {
    out += std::to_string(e.epoch);
    out += '\t';
    out += tsv::format_sig(e.train_loss, 9);
    out += '\t';
    out += e.has_eval_auc ? tsv::format_sig(e.eval_auc, 9) : "nan";
    out += '\n';
  }
  tsv::write_file(path, out);
}

}  // namespace relforge::scorer
