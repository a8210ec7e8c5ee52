#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cvar/dataset.hpp"

namespace cvar {

enum class Group { Old, WarmA, WarmB, WarmC, Test };

std::string to_string(Group g);

struct SplitSpec {
  // An item is old iff it has strictly more than this many instances.
  std::int64_t old_threshold = 200;

  enum class Policy { EqualQuarters, FixedPrefix };
  Policy policy = Policy::EqualQuarters;
  // FixedPrefix: each warm group takes this many instances per item, in
  // timestamp order; the remainder is test.
  std::size_t prefix_size = 20;
};

std::string to_string(SplitSpec::Policy p);
SplitSpec::Policy policy_from_string(const std::string& s);

// Row partition: all old-item instances pretrain; each new item's instances,
// in timestamp order, feed warm-a/b/c and test.
struct DatasetSplit {
  SplitSpec spec;
  std::vector<std::size_t> old_rows;
  std::vector<std::size_t> warm_a;
  std::vector<std::size_t> warm_b;
  std::vector<std::size_t> warm_c;
  std::vector<std::size_t> test;
  std::vector<std::uint8_t> item_is_new;  // per item id

  std::size_t new_item_count() const;
  std::size_t old_item_count() const;
  double new_item_fraction() const;
  std::span<const std::size_t> rows(Group g) const;
};

DatasetSplit split_dataset(const InteractionTable& table, const SplitSpec& spec);

// Versioned text manifest persisting the item assignment and per-item group
// sizes so every variant and seed trains on exactly one split.
void write_split_manifest(const std::string& path, const InteractionTable& table,
                          const DatasetSplit& split);

// Recomputes the split from the manifest's recorded spec and verifies it
// against the persisted assignment.
DatasetSplit read_split_manifest(const std::string& path,
                                 const InteractionTable& table);

}  // namespace cvar
