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

#include <cdnrec/evaluation/analysis.hpp>

#include <cdnrec/errors.hpp>

#include <cstdio>
#include <fstream>

namespace cdnrec::eval {

namespace {

nlohmann::json mass_json(const GateMass& m) {
  return {{"n_items", m.n_items}, {"memorization", m.memorization}, {"generalization", m.generalization}};
}

void finish(GateMass& m) {
  if (m.n_items == 0) return;
  m.memorization /= static_cast<double>(m.n_items);
  m.generalization /= static_cast<double>(m.n_items);
}

}  // namespace

nlohmann::json GateReport::to_json() const {
  return {{"overall", mass_json(overall)}, {"head", mass_json(head)}, {"tail", mass_json(tail)}};
}

GateReport gate_report(const model::TowerModel& model, const ParamStore& params, const data::CatalogStats& stats) {
  const auto& item = model.config().item;
  if (item.gate != model::GateKind::Frequency || item.n_mem() == 0 || item.n_gen() == 0) {
    fail(ErrorCategory::Config,
         "gate analysis needs a learned frequency gate over memorization and generalization experts");
  }
  const auto n = static_cast<Index>(model.catalog().n_items());
  if (stats.n_items() != static_cast<std::size_t>(n)) {
    fail(ErrorCategory::Shape, "catalog statistics do not cover the catalog");
  }
  std::vector<Index> all(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
  const Matrix g = model.gate_matrix(params, all);
  GateReport r;
  for (Index i = 0; i < n; ++i) {
    double mem = 0.0;
    double gen = 0.0;
    for (std::size_t k = 0; k < item.experts.size(); ++k) {
      (item.experts[k] == model::FeatureGroup::Memorization ? mem : gen) += g(i, static_cast<Index>(k));
    }
    GateMass& slice = stats.is_head(static_cast<std::uint32_t>(i)) ? r.head : r.tail;
    for (GateMass* m : {&slice, &r.overall}) {
      ++m->n_items;
      m->memorization += mem;
      m->generalization += gen;
    }
  }
  finish(r.overall);
  finish(r.head);
  finish(r.tail);
  return r;
}

std::string primary_label(const data::Catalog& catalog, std::uint32_t item, std::string_view field) {
  const data::FeatureField* f = catalog.feature(field);
  if (f == nullptr) return "";
  const auto values = f->of(item);
  return values.empty() ? "" : f->values.id(values.front());
}

void export_embeddings(const model::TowerModel& model, const ParamStore& params, std::span<const Index> items,
                       std::span<const std::string> labels, const std::filesystem::path& path) {
  if (labels.size() != items.size()) fail(ErrorCategory::Shape, "one label per exported item is required");
  const Matrix y = items.empty() ? Matrix(0, model.config().item.output_dim) : model.item_embeddings(params, items);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCategory::Io, "cannot open " + path.string() + " for writing");
  out << "item_id\tlabel";
  for (Index c = 0; c < y.cols(); ++c) out << "\te" << c;
  out << '\n';
  char buf[32];
  for (std::size_t r = 0; r < items.size(); ++r) {
    out << model.catalog().items.id(static_cast<std::uint32_t>(items[r])) << '\t' << labels[r];
    for (Index c = 0; c < y.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", y(static_cast<Index>(r), c));
      out << '\t' << buf;
    }
    out << '\n';
  }
  out.flush();
  if (!out) fail(ErrorCategory::Io, "failed writing " + path.string());
}

}  // namespace cdnrec::eval
