// Copyright 2026 The cdnrec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Independent explicit-loop reference implementations. They only read raw
// parameter values and never call the library's vectorized code paths.

#include <cdnrec/model/tower_model.hpp>
#include <cdnrec/numerics/param_store.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

namespace cdnrec::oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

inline Vec row_of(const ParamStore& p, const std::string& name, Index r) {
  const Matrix& m = p.at(name).value;
  Vec v(static_cast<std::size_t>(m.cols()));
  for (Index c = 0; c < m.cols(); ++c) v[static_cast<std::size_t>(c)] = m(r, c);
  return v;
}

// x * W + b with W stored as (in x out).
inline Vec affine(const ParamStore& p, const std::string& layer, const Vec& x) {
  const Matrix& w = p.at(layer + ".w").value;
  const Matrix& b = p.at(layer + ".b").value;
  Vec out(static_cast<std::size_t>(w.cols()), 0.0);
  for (Index o = 0; o < w.cols(); ++o) {
    double s = b(0, o);
    for (Index i = 0; i < w.rows(); ++i) s += x[static_cast<std::size_t>(i)] * w(i, o);
    out[static_cast<std::size_t>(o)] = s;
  }
  return out;
}

inline Vec relu(Vec v) {
  for (double& x : v) x = x > 0.0 ? x : 0.0;
  return v;
}

inline Vec mlp(const ParamStore& p, const std::string& prefix, std::size_t layers, Vec x) {
  for (std::size_t j = 0; j < layers; ++j) {
    x = affine(p, prefix + ".layer" + std::to_string(j), x);
    if (j + 1 < layers) x = relu(x);
  }
  return x;
}

inline Vec softmax(const Vec& z) {
  double m = z[0];
  for (double v : z) m = std::max(m, v);
  Vec e(z.size());
  double s = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    e[k] = std::exp(z[k] - m);
    s += e[k];
  }
  for (double& v : e) v /= s;
  return e;
}

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

/// Gated expert mixture for one item, computed feature by feature.
inline Vec item_embed(const model::TowerModel& m, const ParamStore& p, Index item) {
  const auto& cfg = m.config().item;
  const auto& cat = m.catalog();
  const Vec id = row_of(p, "item.id_emb", item);
  Vec gen;
  for (const auto& f : cat.item_features) {
    const auto vals = f.of(static_cast<std::uint32_t>(item));
    Vec pooled(static_cast<std::size_t>(cfg.feature_dim), 0.0);
    for (std::uint32_t v : vals) {
      const Vec r = row_of(p, "item.feat." + f.name, v);
      for (std::size_t c = 0; c < pooled.size(); ++c) pooled[c] += r[c];
    }
    if (!vals.empty()) {
      for (double& x : pooled) x /= static_cast<double>(vals.size());
    }
    gen.insert(gen.end(), pooled.begin(), pooled.end());
  }
  const std::size_t k = cfg.experts.size();
  Vec gate(k, 1.0 / static_cast<double>(k));
  const auto item_u = static_cast<std::size_t>(item);
  if (cfg.gate == model::GateKind::Frequency) {
    gate = softmax(row_of(p, "item.gate.w", m.side_info().freq_bucket[item_u]));
  } else if (cfg.gate == model::GateKind::HeadTail) {
    gate.assign(k, 0.0);
    gate[m.side_info().is_head[item_u] ? 0 : 1] = 1.0;
  }
  Vec y(static_cast<std::size_t>(cfg.output_dim), 0.0);
  for (std::size_t e = 0; e < k; ++e) {
    Vec in;
    if (cfg.experts[e] != model::FeatureGroup::Generalization) in.insert(in.end(), id.begin(), id.end());
    if (cfg.experts[e] != model::FeatureGroup::Memorization) in.insert(in.end(), gen.begin(), gen.end());
    const Vec out = mlp(p, "item.expert" + std::to_string(e), cfg.expert_hidden_dims.size() + 1, in);
    for (std::size_t c = 0; c < y.size(); ++c) y[c] += gate[e] * out[c];
  }
  return y;
}

inline Vec user_embed(const model::TowerModel& m, const ParamStore& p, Index user, model::Branch branch) {
  Vec x = row_of(p, "user.id_emb", user);
  for (std::size_t j = 0; j < m.config().user.shared_dims.size(); ++j) {
    x = relu(affine(p, "user.f.layer" + std::to_string(j), x));
  }
  return mlp(p, branch == model::Branch::Main ? "user.h_m" : "user.h_r", 2, x);
}

/// Loss of the two-term objective over in-batch candidates:
///   alpha * mean_k -log p_k(main positive) + (1 - alpha) * mean_k -log p_k(regularizer positive)
/// with logits L[k][j] = alpha <x_m,k, y_m,j> + (1 - alpha) <x_r,k, y_r,j>.
inline double cdn_loss(const Mat& xm, const Mat& ym, const Mat& xr, const Mat& yr, double alpha) {
  const std::size_t b = xm.size();
  double main_term = 0.0;
  double reg_term = 0.0;
  for (std::size_t k = 0; k < b; ++k) {
    Vec row(b);
    for (std::size_t j = 0; j < b; ++j) {
      row[j] = alpha * dot(xm[k], ym[j]);
      if (alpha < 1.0) row[j] += (1.0 - alpha) * dot(xr[k], yr[j]);
    }
    const Vec prob = softmax(row);
    main_term -= std::log(prob[k]);
    reg_term -= std::log(prob[k]);
  }
  return alpha * main_term / static_cast<double>(b) + (1.0 - alpha) * reg_term / static_cast<double>(b);
}

inline Mat logq_correct(const Mat& logits, const Vec& q) {
  Mat out = logits;
  for (auto& row : out) {
    for (std::size_t c = 0; c < row.size(); ++c) row[c] -= std::log(q[c]);
  }
  return out;
}

/// Mean over rows of -log softmax(row)[row index], optionally weighted.
inline double inbatch_xent(const Mat& logits, const Vec& weights = {}) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t r = 0; r < logits.size(); ++r) {
    const double w = weights.empty() ? 1.0 : weights[r];
    num -= w * std::log(softmax(logits[r])[r]);
    den += w;
  }
  return num / den;
}

inline Vec class_balance(const std::vector<std::int64_t>& freqs, double beta) {
  Vec w;
  for (std::int64_t n : freqs) w.push_back((1.0 - beta) / (1.0 - std::pow(beta, static_cast<double>(n))));
  const double mean = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
  for (double& x : w) x /= mean;
  return w;
}

/// (HR, NDCG) fractions by direct summation.
inline std::pair<double, double> hr_ndcg(const std::vector<Index>& ranks, int k) {
  double hits = 0.0;
  double gain = 0.0;
  for (Index r : ranks) {
    if (r > k) continue;
    hits += 1.0;
    gain += std::log(2.0) / std::log(static_cast<double>(r) + 1.0);
  }
  return {hits / static_cast<double>(ranks.size()), gain / static_cast<double>(ranks.size())};
}

/// Rank by fully sorting the non-excluded candidates (score desc, index asc).
inline Index rank_by_sort(const Vec& scores, Index target, const std::vector<Index>& excluded) {
  std::vector<Index> cand;
  for (Index j = 0; j < static_cast<Index>(scores.size()); ++j) {
    if (std::find(excluded.begin(), excluded.end(), j) == excluded.end()) cand.push_back(j);
  }
  std::sort(cand.begin(), cand.end(), [&](Index a, Index b) {
    const double sa = scores[static_cast<std::size_t>(a)];
    const double sb = scores[static_cast<std::size_t>(b)];
    return sa != sb ? sa > sb : a < b;
  });
  return static_cast<Index>(std::find(cand.begin(), cand.end(), target) - cand.begin()) + 1;
}

}  // namespace cdnrec::oracle
