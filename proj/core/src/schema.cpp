#include "cvar/schema.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "cvar/errors.hpp"

namespace cvar {

double ContinuousFieldSchema::normalize(double v) const {
  if (max <= min) return 0.0;  // constant field
  const double z = (v - min) / (max - min);
  return std::min(std::max(z, 0.0), 1.0);
}

std::size_t FeatureSchema::feature_width() const {
  return embedding_dim * cat_fields.size() + cont_fields.size();
}

std::size_t FeatureSchema::side_cat_count() const {
  std::size_t n = 0;
  for (const auto& f : cat_fields) n += f.side_info ? 1 : 0;
  return n;
}

std::size_t FeatureSchema::side_width() const {
  std::size_t n = embedding_dim * side_cat_count();
  for (const auto& f : cont_fields) n += f.side_info ? 1 : 0;
  return n;
}

std::uint64_t FeatureSchema::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix_bytes = [&h](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  auto mix_u64 = [&](std::uint64_t v) { mix_bytes(&v, sizeof(v)); };
  mix_u64(item_count);
  mix_u64(embedding_dim);
  for (const auto& f : cat_fields) {
    mix_bytes(f.name.data(), f.name.size());
    mix_u64(f.vocab);
    mix_u64(f.multi ? 1 : 0);
    mix_u64(f.side_info ? 1 : 0);
  }
  for (const auto& f : cont_fields) {
    mix_bytes(f.name.data(), f.name.size());
    mix_bytes(&f.min, sizeof(f.min));
    mix_bytes(&f.max, sizeof(f.max));
    mix_u64(f.side_info ? 1 : 0);
  }
  return h;
}

FeatureSchema build_schema(const InteractionTable& table,
                           std::span<const std::size_t> train_rows,
                           const SchemaOptions& opts) {
  if (train_rows.empty()) {
    throw ArgumentError("build_schema requires a non-empty training split");
  }
  if (opts.embedding_dim == 0) {
    throw ArgumentError("embedding_dim must be positive");
  }

  FeatureSchema schema;
  schema.item_count = table.item_count;
  schema.embedding_dim = opts.embedding_dim;

  for (const Column& c : table.columns) {
    if (c.kind == FieldKind::Continuous) {
      ContinuousFieldSchema f;
      f.name = c.name;
      f.side_info = c.side_info;
      double lo = std::numeric_limits<double>::infinity();
      double hi = -std::numeric_limits<double>::infinity();
      for (std::size_t r : train_rows) {
        lo = std::min(lo, c.cont[r]);
        hi = std::max(hi, c.cont[r]);
      }
      f.min = lo;
      f.max = hi;
      schema.cont_fields.push_back(std::move(f));
      continue;
    }

    CategoricalFieldSchema f;
    f.name = c.name;
    f.multi = c.kind == FieldKind::MultiCategorical;
    f.side_info = c.side_info;
    // Sorted raw-token order makes index assignment deterministic.
    std::set<std::int64_t> seen;
    for (std::size_t r : train_rows) {
      if (f.multi) {
        for (std::size_t t = c.multi_offsets[r]; t < c.multi_offsets[r + 1]; ++t) {
          seen.insert(c.multi_values[t]);
        }
      } else {
        seen.insert(c.values[r]);
      }
    }
    std::int64_t next = 1;  // 0 is the OOV bucket
    for (std::int64_t raw : seen) f.to_index.emplace(raw, next++);
    f.vocab = static_cast<std::size_t>(next);
    schema.cat_fields.push_back(std::move(f));
  }
  return schema;
}

FrequencyTable::FrequencyTable(std::size_t item_count, std::int64_t max_count)
    : counts_(item_count, 0), max_count_(max_count) {
  if (max_count_ <= 0) throw ArgumentError("frequency normalizer must be positive");
}

std::int64_t FrequencyTable::max_item_count(const InteractionTable& table) {
  std::vector<std::int64_t> counts(table.item_count, 0);
  for (std::int64_t id : table.item_ids) counts[static_cast<std::size_t>(id)] += 1;
  std::int64_t best = 0;
  for (std::int64_t c : counts) best = std::max(best, c);
  return best;
}

void FrequencyTable::add_rows(const InteractionTable& table,
                              std::span<const std::size_t> rows) {
  for (std::size_t r : rows) {
    counts_[static_cast<std::size_t>(table.item_ids[r])] += 1;
  }
}

double FrequencyTable::normalized(std::size_t item) const {
  const double z = static_cast<double>(counts_.at(item)) /
                   static_cast<double>(max_count_);
  return std::min(std::max(z, 0.0), 1.0);
}

SampleBatch encode_batch(const InteractionTable& table,
                         std::span<const std::size_t> rows,
                         const FeatureSchema& schema,
                         const FrequencyTable& freq) {
  SampleBatch batch;
  batch.size = rows.size();
  batch.item_rows.reserve(rows.size());
  batch.labels.reserve(rows.size());
  batch.freq.reserve(rows.size());

  for (std::size_t r : rows) {
    const auto item = static_cast<std::size_t>(table.item_ids[r]);
    batch.item_rows.push_back(item);
    batch.labels.push_back(table.labels[r]);
    batch.freq.push_back(freq.normalized(item));
  }

  std::size_t cat_i = 0, cont_i = 0;
  batch.cat.resize(schema.cat_fields.size());
  batch.cont.resize(schema.cont_fields.size());
  for (const Column& c : table.columns) {
    if (c.kind == FieldKind::Continuous) {
      const ContinuousFieldSchema& f = schema.cont_fields[cont_i];
      auto& out = batch.cont[cont_i];
      out.reserve(rows.size());
      for (std::size_t r : rows) out.push_back(f.normalize(c.cont[r]));
      ++cont_i;
      continue;
    }

    const CategoricalFieldSchema& f = schema.cat_fields[cat_i];
    auto& out = batch.cat[cat_i];
    auto lookup = [&f](std::int64_t raw) -> std::size_t {
      const auto it = f.to_index.find(raw);
      return it == f.to_index.end() ? 0 : static_cast<std::size_t>(it->second);
    };
    if (f.multi) {
      out.offsets.reserve(rows.size() + 1);
      out.offsets.push_back(0);
      for (std::size_t r : rows) {
        for (std::size_t t = c.multi_offsets[r]; t < c.multi_offsets[r + 1]; ++t) {
          out.multi_idx.push_back(lookup(c.multi_values[t]));
        }
        out.offsets.push_back(out.multi_idx.size());
      }
    } else {
      out.idx.reserve(rows.size());
      for (std::size_t r : rows) out.idx.push_back(lookup(c.values[r]));
    }
    ++cat_i;
  }
  return batch;
}

}  // namespace cvar
