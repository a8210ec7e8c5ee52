#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cvar/dataset.hpp"

namespace cvar {

struct CategoricalFieldSchema {
  std::string name;
  std::size_t vocab = 1;  // includes the reserved out-of-vocabulary index 0
  bool multi = false;
  bool side_info = false;
  std::unordered_map<std::int64_t, std::int64_t> to_index;  // raw token -> [1, vocab)
};

struct ContinuousFieldSchema {
  std::string name;
  double min = 0.0;
  double max = 1.0;
  bool side_info = false;

  // Min-max scaling frozen at build time; later values clip into [0, 1].
  double normalize(double v) const;
};

struct SchemaOptions {
  std::size_t embedding_dim = 16;
};

// Feature layout shared by the embedding layer and every model. Vocabularies
// come from training rows only; index 0 is the OOV bucket of each field.
struct FeatureSchema {
  std::size_t item_count = 0;  // item embedding table rows
  std::size_t embedding_dim = 16;
  std::vector<CategoricalFieldSchema> cat_fields;   // table column order
  std::vector<ContinuousFieldSchema> cont_fields;   // table column order

  std::size_t feature_width() const;  // d * |cat| + |cont|
  std::size_t side_width() const;     // d * |side cat| + |side cont|
  std::size_t side_cat_count() const;
  std::uint64_t hash() const;
};

FeatureSchema build_schema(const InteractionTable& table,
                           std::span<const std::size_t> train_rows,
                           const SchemaOptions& opts = {});

// Per-item interaction counts with a fixed normalizer (the dataset's largest
// item count), so normalized frequency is comparable across phases.
class FrequencyTable {
 public:
  FrequencyTable(std::size_t item_count, std::int64_t max_count);

  static std::int64_t max_item_count(const InteractionTable& table);

  void add_rows(const InteractionTable& table, std::span<const std::size_t> rows);

  std::int64_t count(std::size_t item) const { return counts_.at(item); }
  std::int64_t normalizer() const { return max_count_; }
  // count / max, clipped to [0, 1].
  double normalized(std::size_t item) const;

 private:
  std::vector<std::int64_t> counts_;
  std::int64_t max_count_;
};

// Encoded minibatch. All arrays share the batch length.
struct SampleBatch {
  std::size_t size = 0;
  std::vector<std::size_t> item_rows;  // item embedding rows

  struct CatField {
    std::vector<std::size_t> idx;        // single-valued
    std::vector<std::size_t> multi_idx;  // CSR for multi-valued
    std::vector<std::size_t> offsets;
  };
  std::vector<CatField> cat;                 // schema cat order
  std::vector<std::vector<double>> cont;     // schema cont order, in [0, 1]
  std::vector<double> labels;
  std::vector<double> freq;                  // x_freq in [0, 1]
};

SampleBatch encode_batch(const InteractionTable& table,
                         std::span<const std::size_t> rows,
                         const FeatureSchema& schema,
                         const FrequencyTable& freq);

}  // namespace cvar
