#include "cvar/embedding.hpp"

#include <algorithm>

#include "cvar/errors.hpp"

namespace cvar {

std::string item_table_name() { return "embed/item"; }

std::string field_table_name(const std::string& field) { return "embed/" + field; }

void init_embedding_tables(ParameterStore& tables, const FeatureSchema& schema,
                           Rng& rng) {
  auto trunc_table = [&rng](std::size_t rows, std::size_t d) {
    std::vector<double> data(rows * d);
    for (double& x : data) x = rng.truncated_normal(0.01);
    return Tensor({rows, d}, std::move(data));
  };
  tables.add(item_table_name(), trunc_table(schema.item_count, schema.embedding_dim));
  for (const auto& f : schema.cat_fields) {
    tables.add(field_table_name(f.name), trunc_table(f.vocab, schema.embedding_dim));
  }
}

namespace {

std::vector<std::size_t> unique_sorted(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

EmbeddingBundle embed(const SampleBatch& batch, ParameterStore& tables,
                      const FeatureSchema& schema) {
  EmbeddingBundle bundle;

  bundle.item = gather_rows(tables.get(item_table_name()), batch.item_rows);
  bundle.touched_rows[item_table_name()] = unique_sorted(batch.item_rows);

  std::vector<Tensor> parts;
  std::vector<Tensor> side_parts;
  parts.reserve(schema.cat_fields.size() + schema.cont_fields.size());

  for (std::size_t f = 0; f < schema.cat_fields.size(); ++f) {
    const auto& field = schema.cat_fields[f];
    const auto& enc = batch.cat[f];
    Tensor& table = tables.get(field_table_name(field.name));
    Tensor looked_up;
    if (field.multi) {
      looked_up = gather_rows_mean(table, enc.multi_idx, enc.offsets);
      bundle.touched_rows[field_table_name(field.name)] = unique_sorted(enc.multi_idx);
    } else {
      looked_up = gather_rows(table, enc.idx);
      bundle.touched_rows[field_table_name(field.name)] = unique_sorted(enc.idx);
    }
    parts.push_back(looked_up);
    if (field.side_info) side_parts.push_back(looked_up);
  }
  for (std::size_t f = 0; f < schema.cont_fields.size(); ++f) {
    Tensor col({batch.size, 1}, batch.cont[f]);
    parts.push_back(col);
    if (schema.cont_fields[f].side_info) side_parts.push_back(col);
  }

  bundle.features = concat(parts, 1);
  if (!side_parts.empty()) {
    bundle.side_info = concat(side_parts, 1);
  } else {
    bundle.side_info = Tensor::zeros({batch.size, 1});
  }
  return bundle;
}

std::vector<std::pair<std::size_t, std::size_t>> side_column_ranges(
    const FeatureSchema& schema) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const std::size_t d = schema.embedding_dim;
  std::size_t off = 0;
  for (const auto& f : schema.cat_fields) {
    if (f.side_info) out.emplace_back(off, off + d);
    off += d;
  }
  for (const auto& f : schema.cont_fields) {
    if (f.side_info) out.emplace_back(off, off + 1);
    off += 1;
  }
  return out;
}

}  // namespace cvar
