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

#include <cdnrec/model/tower_model.hpp>

#include <cdnrec/errors.hpp>

#include <cmath>
#include <random>

namespace cdnrec::model {

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

std::mt19937_64 slot_rng(std::uint64_t seed, std::string_view name) {
  const std::uint64_t h = fnv1a(name);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  return std::mt19937_64(seq);
}

Matrix normal_init(Index rows, Index cols, double stddev, std::mt19937_64 rng) {
  std::normal_distribution<double> n(0.0, stddev);
  Matrix m(rows, cols);
  for (Index k = 0; k < m.size(); ++k) m.data()[k] = n(rng);
  return m;
}

Matrix glorot_init(Index fan_in, Index fan_out, std::mt19937_64 rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> u(-a, a);
  Matrix m(fan_in, fan_out);
  for (Index k = 0; k < m.size(); ++k) m.data()[k] = u(rng);
  return m;
}

constexpr double kEmbeddingStddev = 0.1;

void add_mlp(ParamStore& params, const std::string& prefix, Index in, const std::vector<Index>& widths,
             std::uint64_t seed) {
  for (std::size_t j = 0; j < widths.size(); ++j) {
    const std::string layer = prefix + ".layer" + std::to_string(j);
    params.add(layer + ".w", glorot_init(in, widths[j], slot_rng(seed, layer + ".w")));
    params.add(layer + ".b", Matrix::Zero(1, widths[j]));
    in = widths[j];
  }
}

std::string expert_prefix(std::size_t k) { return "item.expert" + std::to_string(k); }

}  // namespace

ItemSideInfo ItemSideInfo::from_stats(const data::CatalogStats& stats, int freq_buckets) {
  ItemSideInfo s;
  s.freq_bucket.resize(stats.n_items());
  s.is_head.resize(stats.n_items());
  for (std::size_t i = 0; i < stats.n_items(); ++i) {
    s.freq_bucket[i] = frequency_bucket(stats.freq[i], freq_buckets);
    s.is_head[i] = stats.is_head(static_cast<std::uint32_t>(i)) ? 1 : 0;
  }
  return s;
}

TowerModel::TowerModel(ModelConfig config, std::shared_ptr<const data::Catalog> catalog, ItemSideInfo side)
    : config_(std::move(config)), catalog_(std::move(catalog)), side_(std::move(side)) {
  config_.validate();
  if (!catalog_) fail(ErrorCategory::Config, "model needs a catalog");
  ItemFeatureSplit::from_catalog(*catalog_);
  if (side_.freq_bucket.size() != catalog_->n_items() || side_.is_head.size() != catalog_->n_items()) {
    fail(ErrorCategory::Config, "item side info does not cover the catalog");
  }
  if (config_.item.n_gen() > 0 && catalog_->item_features.empty()) {
    fail(ErrorCategory::Config, "generalization experts need at least one item feature field");
  }
}

Index TowerModel::generalization_width() const {
  return static_cast<Index>(catalog_->item_features.size()) * config_.item.feature_dim;
}

bool TowerModel::is_sparse_slot(const std::string& name) {
  return name == "item.id_emb" || name == "user.id_emb" || name.starts_with("item.feat.");
}

void TowerModel::init(ParamStore& params, std::uint64_t seed) const {
  const auto& ic = config_.item;
  const auto& uc = config_.user;
  const auto n_items = static_cast<Index>(catalog_->n_items());
  const auto n_users = static_cast<Index>(catalog_->n_users());

  params.add("item.id_emb", normal_init(n_items, ic.id_dim, kEmbeddingStddev, slot_rng(seed, "item.id_emb")), true);
  for (const auto& f : catalog_->item_features) {
    const std::string name = "item.feat." + f.name;
    params.add(name,
               normal_init(static_cast<Index>(f.values.size()), ic.feature_dim, kEmbeddingStddev,
                           slot_rng(seed, name)),
               true);
  }
  std::vector<Index> widths = ic.expert_hidden_dims;
  widths.push_back(ic.output_dim);
  for (std::size_t k = 0; k < ic.experts.size(); ++k) {
    Index in = 0;
    switch (ic.experts[k]) {
      case FeatureGroup::Memorization: in = ic.id_dim; break;
      case FeatureGroup::Generalization: in = generalization_width(); break;
      case FeatureGroup::All: in = ic.id_dim + generalization_width(); break;
    }
    add_mlp(params, expert_prefix(k), in, widths, seed);
  }
  if (ic.gate == GateKind::Frequency) {
    params.add("item.gate.w", Matrix::Zero(ic.freq_buckets, static_cast<Index>(ic.experts.size())));
  }

  params.add("user.id_emb", normal_init(n_users, uc.embedding_dim, kEmbeddingStddev, slot_rng(seed, "user.id_emb")),
             true);
  add_mlp(params, "user.f", uc.embedding_dim, uc.shared_dims, seed);
  const Index head_in = uc.shared_dims.empty() ? uc.embedding_dim : uc.shared_dims.back();
  add_mlp(params, "user.h_m", head_in, {uc.branch_hidden, uc.output_dim}, seed);
  if (uc.bilateral) add_mlp(params, "user.h_r", head_in, {uc.branch_hidden, uc.output_dim}, seed);
}

ad::Var TowerModel::mlp(ad::Tape& tape, ad::Var x, const std::string& prefix, std::size_t n_layers) const {
  for (std::size_t j = 0; j < n_layers; ++j) {
    const std::string layer = prefix + ".layer" + std::to_string(j);
    x = ad::add_bias(ad::matmul(x, tape.param(layer + ".w")), tape.param(layer + ".b"));
    if (j + 1 < n_layers) x = ad::relu(x);
  }
  return x;
}

void TowerModel::check_items(std::span<const Index> items) const {
  for (Index i : items) {
    if (i < 0 || static_cast<std::size_t>(i) >= catalog_->n_items()) {
      fail(ErrorCategory::Data, "unknown item index " + std::to_string(i));
    }
  }
}

void TowerModel::check_users(std::span<const Index> users) const {
  for (Index u : users) {
    if (u < 0 || static_cast<std::size_t>(u) >= catalog_->n_users()) {
      fail(ErrorCategory::Data, "unknown user index " + std::to_string(u));
    }
  }
}

ad::Var TowerModel::expert_input(ad::Tape& tape, FeatureGroup group, std::span<const Index> items) const {
  auto ids = [&] { return tape.gather_rows("item.id_emb", items); };
  auto gen = [&] {
    std::vector<ad::Var> parts;
    for (const auto& f : catalog_->item_features) {
      parts.push_back(tape.gather_bags("item.feat." + f.name, f.bags(), items));
    }
    return ad::hconcat(parts);
  };
  switch (group) {
    case FeatureGroup::Memorization: return ids();
    case FeatureGroup::Generalization: return gen();
    case FeatureGroup::All: {
      if (catalog_->item_features.empty()) return ids();
      const ad::Var parts[] = {ids(), gen()};
      return ad::hconcat(parts);
    }
  }
  return ids();
}

ad::Var TowerModel::expert_output(ad::Tape& tape, std::size_t expert, std::span<const Index> items) const {
  check_items(items);
  if (expert >= n_experts()) fail(ErrorCategory::Config, "expert index out of range");
  const ad::Var in = expert_input(tape, config_.item.experts[expert], items);
  return mlp(tape, in, expert_prefix(expert), config_.item.expert_hidden_dims.size() + 1);
}

ad::Var TowerModel::gate_weights(ad::Tape& tape, std::span<const Index> items) const {
  check_items(items);
  const auto k = static_cast<Index>(n_experts());
  const auto b = static_cast<Index>(items.size());
  switch (config_.item.gate) {
    case GateKind::Frequency: {
      std::vector<Index> buckets(items.size());
      for (std::size_t r = 0; r < items.size(); ++r) buckets[r] = side_.freq_bucket[static_cast<std::size_t>(items[r])];
      return ad::softmax_rows(tape.gather_rows("item.gate.w", buckets));
    }
    case GateKind::HeadTail: {
      Matrix g = Matrix::Zero(b, k);
      for (Index r = 0; r < b; ++r) g(r, side_.is_head[static_cast<std::size_t>(items[r])] ? 0 : 1) = 1.0;
      return tape.constant(std::move(g));
    }
    case GateKind::Constant: break;
  }
  return tape.constant(Matrix::Constant(b, k, 1.0 / static_cast<double>(k)));
}

ad::Var TowerModel::item_embed(ad::Tape& tape, std::span<const Index> items, Branch branch) const {
  if (n_experts() == 1 && config_.item.gate == GateKind::Constant) return expert_output(tape, 0, items);
  const ad::Var gates = gate_weights(tape, items);
  ad::Var y;
  for (std::size_t k = 0; k < n_experts(); ++k) {
    ad::Var e = expert_output(tape, k, items);
    if (config_.item.branch_routed && k != (branch == Branch::Main ? 0u : 1u)) e = ad::detach(e);
    const ad::Var term = ad::mul_col(e, ad::slice_cols(gates, static_cast<Index>(k), 1));
    y = y.valid() ? ad::add(y, term) : term;
  }
  return y;
}

ad::Var TowerModel::shared_user(ad::Tape& tape, std::span<const Index> users) const {
  check_users(users);
  ad::Var x = tape.gather_rows("user.id_emb", users);
  for (std::size_t j = 0; j < config_.user.shared_dims.size(); ++j) {
    const std::string layer = "user.f.layer" + std::to_string(j);
    x = ad::relu(ad::add_bias(ad::matmul(x, tape.param(layer + ".w")), tape.param(layer + ".b")));
  }
  return x;
}

ad::Var TowerModel::user_embed(ad::Tape& tape, std::span<const Index> users, Branch branch) const {
  if (branch == Branch::Regularizer && !config_.user.bilateral) {
    fail(ErrorCategory::Config, "user tower has no regularizer branch");
  }
  return mlp(tape, shared_user(tape, users), branch == Branch::Main ? "user.h_m" : "user.h_r", 2);
}

std::pair<ad::Var, ad::Var> TowerModel::user_embed_pair(ad::Tape& tape, std::span<const Index> main,
                                                        std::span<const Index> regularizer) const {
  if (!config_.user.bilateral) fail(ErrorCategory::Config, "user tower has no regularizer branch");
  std::vector<Index> both(main.begin(), main.end());
  both.insert(both.end(), regularizer.begin(), regularizer.end());
  const ad::Var f = shared_user(tape, both);
  const auto n = static_cast<Index>(main.size());
  return {mlp(tape, ad::slice_rows(f, 0, n), "user.h_m", 2),
          mlp(tape, ad::slice_rows(f, n, static_cast<Index>(regularizer.size())), "user.h_r", 2)};
}

Matrix TowerModel::item_embeddings(const ParamStore& params, std::span<const Index> items) const {
  ad::Tape tape(params);
  return item_embed(tape, items, Branch::Main).value();
}

Matrix TowerModel::all_item_embeddings(const ParamStore& params) const {
  const auto n = static_cast<Index>(catalog_->n_items());
  Matrix out(n, config_.item.output_dim);
  constexpr Index kChunk = 4096;
  std::vector<Index> idx;
  for (Index start = 0; start < n; start += kChunk) {
    const Index len = std::min(kChunk, n - start);
    idx.resize(static_cast<std::size_t>(len));
    for (Index k = 0; k < len; ++k) idx[static_cast<std::size_t>(k)] = start + k;
    out.middleRows(start, len) = item_embeddings(params, idx);
  }
  return out;
}

Matrix TowerModel::user_embeddings(const ParamStore& params, std::span<const Index> users, Branch branch) const {
  ad::Tape tape(params);
  return user_embed(tape, users, branch).value();
}

Matrix TowerModel::gate_matrix(const ParamStore& params, std::span<const Index> items) const {
  ad::Tape tape(params);
  return gate_weights(tape, items).value();
}

double TowerModel::score(const ParamStore& params, Index user, Index item) const {
  const Index u[] = {user};
  const Index i[] = {item};
  const Matrix x = user_embeddings(params, u);
  const Matrix y = item_embeddings(params, i);
  return x.row(0).dot(y.row(0));
}

}  // namespace cdnrec::model
