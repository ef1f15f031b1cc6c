#pragma once

// Gradient checks and the separable toy set shared by the unit and
// acceptance suites.

#include <cmath>
#include <string>
#include <vector>

#include "relforge/mix.hpp"
#include "relforge/scorer.hpp"
#include "relforge/wordpiece.hpp"

namespace scorer_checks {

using namespace relforge;

inline double rel_err(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({1.0, std::abs(analytic), std::abs(numeric)});
}

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::size_t checked = 0;
};

// Central differences with step 1e-5 against the analytic gradients.
inline GradCheckResult check_logistic_gradients(MixRng& rng, int instances) {
  GradCheckResult result;
  const double eps = 1e-5;
  for (int t = 0; t < instances; ++t) {
    const int dim = 2 + static_cast<int>(rng.next_below(6));
    std::vector<double> h(static_cast<std::size_t>(dim));
    for (double& v : h) v = rng.next_symmetric();
    scorer::LogisticHead head = scorer::init_logistic(dim);
    for (double& v : head.w) v = rng.next_symmetric();
    const int label = static_cast<int>(rng.next_below(2));

    std::vector<double> grad(head.w.size());
    scorer::logistic_loss_grad(h, label, head, grad);
    auto loss_at = [&](const scorer::LogisticHead& hd) {
      const double p = scorer::logistic_head_prob(h, hd);
      return -std::log(label == 1 ? p : 1.0 - p);
    };
    for (std::size_t k = 0; k < head.w.size(); ++k) {
      scorer::LogisticHead plus = head, minus = head;
      plus.w[k] += eps;
      minus.w[k] -= eps;
      const double numeric = (loss_at(plus) - loss_at(minus)) / (2 * eps);
      result.max_rel_err = std::max(result.max_rel_err, rel_err(grad[k], numeric));
      ++result.checked;
    }
  }
  return result;
}

inline GradCheckResult check_mlp_gradients(MixRng& rng, int instances) {
  GradCheckResult result;
  const double eps = 1e-5;
  for (int t = 0; t < instances; ++t) {
    const int dim = 2 + static_cast<int>(rng.next_below(4));
    const int hidden = 1 + static_cast<int>(rng.next_below(5));
    std::vector<double> h(static_cast<std::size_t>(dim));
    scorer::MlpHead head;

    // keep pre-activations away from the relu kink so the finite
    // difference is taken on a smooth neighborhood
    bool ok = false;
    while (!ok) {
      for (double& v : h) v = rng.next_symmetric();
      head = scorer::init_mlp(dim, hidden, rng.next_u64());
      for (double& v : head.w1) v = rng.next_symmetric();
      for (double& v : head.b1) v = rng.next_symmetric();
      for (double& v : head.w2) v = rng.next_symmetric();
      for (double& v : head.b2) v = rng.next_symmetric();
      ok = true;
      for (int j = 0; j < hidden; ++j) {
        double z = head.b1[static_cast<std::size_t>(j)];
        for (int k = 0; k < dim; ++k)
          z += head.w1[static_cast<std::size_t>(j * dim + k)] *
               h[static_cast<std::size_t>(k)];
        if (std::abs(z) < 1e-3) ok = false;
      }
    }
    const int label = static_cast<int>(rng.next_below(2));

    std::vector<double> gw1(head.w1.size()), gb1(head.b1.size()),
        gw2(head.w2.size()), gb2(head.b2.size());
    scorer::mlp_loss_grad(h, label, head, gw1, gb1, gw2, gb2);
    auto loss_at = [&](const scorer::MlpHead& hd) {
      const double p = scorer::mlp_head_prob(h, hd);
      return -std::log(label == 1 ? p : 1.0 - p);
    };
    auto check_param = [&](std::vector<double> scorer::MlpHead::*member,
                           const std::vector<double>& grad) {
      for (std::size_t k = 0; k < grad.size(); ++k) {
        scorer::MlpHead plus = head, minus = head;
        (plus.*member)[k] += eps;
        (minus.*member)[k] -= eps;
        const double numeric = (loss_at(plus) - loss_at(minus)) / (2 * eps);
        result.max_rel_err = std::max(result.max_rel_err, rel_err(grad[k], numeric));
        ++result.checked;
      }
    };
    check_param(&scorer::MlpHead::w1, gw1);
    check_param(&scorer::MlpHead::b1, gb1);
    check_param(&scorer::MlpHead::w2, gw2);
    check_param(&scorer::MlpHead::b2, gb2);
  }
  return result;
}

inline GradCheckResult check_complement_loss_gradients(MixRng& rng, int instances) {
  GradCheckResult result;
  const double eps = 1e-5;
  for (int t = 0; t < instances; ++t) {
    const int c = 2 + static_cast<int>(rng.next_below(5));
    std::vector<double> logits(static_cast<std::size_t>(c));
    for (double& v : logits) v = rng.next_symmetric() * 2.0;
    const int label = static_cast<int>(rng.next_below(2 * static_cast<std::uint64_t>(c))) - c;

    auto grad = scorer::complement_softmax_loss_grad(logits, label);
    for (std::size_t k = 0; k < logits.size(); ++k) {
      auto plus = logits, minus = logits;
      plus[k] += eps;
      minus[k] -= eps;
      const double numeric = (scorer::complement_softmax_loss(plus, label) -
                              scorer::complement_softmax_loss(minus, label)) /
                             (2 * eps);
      result.max_rel_err = std::max(result.max_rel_err, rel_err(grad[k], numeric));
      ++result.checked;
    }
  }
  return result;
}

struct ToySet {
  std::vector<scorer::LabeledPair> train, eval;
  scorer::EncoderParams enc;
};

// Labels follow the sign of h[0] with a margin, so the data is linearly
// separable in encoder space by construction.
inline ToySet make_separable_toy_set(std::uint64_t seed, int train_n = 160,
                                     int eval_n = 40) {
  static const std::vector<std::string> words = {
      "red",  "blue", "green", "guitar", "piano", "drum",  "amp",  "mic",
      "case", "bag",  "cord",  "stand",  "tuner", "pedal", "wood", "steel"};
  static const wordpiece::Vocab vocab{[] {
    std::vector<std::string> t = {"[PAD]", "[UNK]", "[CLS]", "[SEP]"};
    t.insert(t.end(), words.begin(), words.end());
    return t;
  }()};

  ToySet toy;
  toy.enc.dim = 6;
  toy.enc.seed = seed ^ 0xBEEF;
  toy.enc.table_size = 512;

  MixRng rng(seed);
  int made = 0;
  long attempts = 0;
  while (made < train_n + eval_n) {
    if (++attempts > 2'000'000)
      throw std::runtime_error("toy set generation stalled; adjust the seed");
    auto pick = [&] { return words[rng.next_below(words.size())]; };
    std::string query = pick();
    std::string answer = pick() + " " + pick() + " " + pick();
    auto seq = wordpiece::encode_pair(query, answer, vocab, 16);
    auto h = scorer::encode_features(seq, toy.enc);
    if (std::abs(h[0]) < 0.08) continue;  // enforce the margin
    const int label = h[0] > 0 ? 1 : 0;
    if (label != made % 2) continue;  // alternate so both splits stay balanced
    scorer::LabeledPair pair;
    pair.query_id = "q" + std::to_string(made % 7);
    pair.item_id = "i" + std::to_string(made);
    pair.label = label;
    pair.encoded = std::move(seq);
    (made < train_n ? toy.train : toy.eval).push_back(std::move(pair));
    ++made;
  }
  return toy;
}

}  // namespace scorer_checks
