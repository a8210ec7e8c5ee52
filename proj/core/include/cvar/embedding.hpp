#pragma once

#include <map>
#include <string>
#include <vector>

#include "cvar/param_store.hpp"
#include "cvar/rng.hpp"
#include "cvar/schema.hpp"
#include "cvar/tensor.hpp"

namespace cvar {

// Per-batch dense representations: the item vector, the full feature
// concatenation the CTR model consumes, and the side-information slice.
struct EmbeddingBundle {
  Tensor item;       // [B x d]
  Tensor features;   // [B x feature_width]
  Tensor side_info;  // [B x side_width]
  // Rows looked up per embedding table, deduplicated; drives sparse updates.
  std::map<std::string, std::vector<std::size_t>> touched_rows;
};

// Table names inside the embedding parameter store.
std::string item_table_name();
std::string field_table_name(const std::string& field);

// Creates "embed/item" plus one table per categorical field, truncated
// normal, std 0.01.
void init_embedding_tables(ParameterStore& tables, const FeatureSchema& schema,
                           Rng& rng);

// Looks up and concatenates the batch. Feature layout: categorical field
// embeddings in schema order, then normalized continuous columns in schema
// order. The side slice follows the same ordering restricted to side fields.
EmbeddingBundle embed(const SampleBatch& batch, ParameterStore& tables,
                      const FeatureSchema& schema);

// Column offsets of each side-info field inside `features`, in side order;
// lets callers verify the side slice is an exact column subset.
std::vector<std::pair<std::size_t, std::size_t>> side_column_ranges(
    const FeatureSchema& schema);

}  // namespace cvar
