#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cvar {

enum class FieldKind { Categorical, MultiCategorical, Continuous };

// One feature column over all interactions. Categorical values are
// dataset-interned token ids; multi-valued columns use CSR storage.
struct Column {
  std::string name;
  FieldKind kind = FieldKind::Categorical;
  bool side_info = false;  // item content feature usable for cold items

  std::vector<std::int64_t> values;        // [n] single categorical
  std::vector<std::int64_t> multi_values;  // CSR payload
  std::vector<std::size_t> multi_offsets;  // [n + 1]
  std::vector<double> cont;                // [n] continuous raw

  std::vector<std::string> dict;  // token id -> display name (may be empty)

  std::size_t row_count() const {
    switch (kind) {
      case FieldKind::Categorical: return values.size();
      case FieldKind::MultiCategorical:
        return multi_offsets.empty() ? 0 : multi_offsets.size() - 1;
      case FieldKind::Continuous: return cont.size();
    }
    return 0;
  }
};

// Joined, label-carrying interaction table. Item ids are dense indices in
// [0, item_count); every feature the CTR models consume lives in columns.
struct InteractionTable {
  std::size_t item_count = 0;
  std::vector<std::int64_t> item_ids;  // [n]
  std::vector<double> labels;          // [n], 0 or 1
  std::vector<std::int64_t> timestamps;
  std::vector<Column> columns;
  std::vector<std::string> item_names;  // item id -> display name (optional)

  std::size_t size() const { return item_ids.size(); }
  const Column& column(const std::string& name) const;
  std::uint64_t content_hash() const;
};

// ---- MovieLens-1M -------------------------------------------------------

struct MovielensOptions {
  // Rating >= threshold becomes label 1. The usual community binarization.
  int label_threshold = 4;
  // Title tokens become a multi-categorical side field when enabled.
  bool use_title_tokens = true;
};

// Expects ratings.dat / users.dat / movies.dat with "::" separators.
InteractionTable load_movielens(const std::string& dir,
                                const MovielensOptions& opts = {});

// ---- Taobao display ad click ---------------------------------------------

// Expects raw_sample.csv / ad_feature.csv / user_profile.csv as published.
// Ads are items; category, campaign, customer and brand ids are the four
// categorical side fields; the click flag is the label.
InteractionTable load_taobao(const std::string& dir);

// ---- synthetic corpus -----------------------------------------------------

struct SyntheticConfig {
  std::size_t items = 300;
  std::size_t users = 500;
  std::size_t interactions = 30000;
  double zipf_exponent = 1.2;  // item popularity skew
  std::uint64_t seed = 7;
};

// Seeded corpus with Zipf item popularity. Item side information encodes
// the latent vector that drives labels, so warm-up generators have real
// signal to learn.
InteractionTable make_synthetic(const SyntheticConfig& cfg);

// ---- parsed-table cache ----------------------------------------------------

// Versioned binary cache of a parsed table, to skip re-parsing raw files.
void save_table_cache(const std::string& path, const InteractionTable& table);
InteractionTable load_table_cache(const std::string& path);

}  // namespace cvar
