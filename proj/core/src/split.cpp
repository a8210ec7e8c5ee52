#include "cvar/split.hpp"

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cvar/errors.hpp"

namespace cvar {

std::string to_string(Group g) {
  switch (g) {
    case Group::Old: return "old";
    case Group::WarmA: return "warm-a";
    case Group::WarmB: return "warm-b";
    case Group::WarmC: return "warm-c";
    case Group::Test: return "test";
  }
  return "?";
}

std::string to_string(SplitSpec::Policy p) {
  return p == SplitSpec::Policy::EqualQuarters ? "equal_quarters" : "fixed_prefix";
}

SplitSpec::Policy policy_from_string(const std::string& s) {
  if (s == "equal_quarters") return SplitSpec::Policy::EqualQuarters;
  if (s == "fixed_prefix") return SplitSpec::Policy::FixedPrefix;
  throw ArgumentError("unknown split policy: " + s);
}

std::size_t DatasetSplit::new_item_count() const {
  std::size_t n = 0;
  for (auto v : item_is_new) n += v;
  return n;
}

std::size_t DatasetSplit::old_item_count() const {
  return item_is_new.size() - new_item_count();
}

double DatasetSplit::new_item_fraction() const {
  return item_is_new.empty()
             ? 0.0
             : static_cast<double>(new_item_count()) /
                   static_cast<double>(item_is_new.size());
}

std::span<const std::size_t> DatasetSplit::rows(Group g) const {
  switch (g) {
    case Group::Old: return old_rows;
    case Group::WarmA: return warm_a;
    case Group::WarmB: return warm_b;
    case Group::WarmC: return warm_c;
    case Group::Test: return test;
  }
  throw ArgumentError("unknown group");
}

namespace {

// warm-a/b/c/test sizes for one new item with n instances.
std::array<std::size_t, 4> group_sizes(std::size_t n, const SplitSpec& spec) {
  if (spec.policy == SplitSpec::Policy::FixedPrefix) {
    std::array<std::size_t, 4> sizes{};
    std::size_t left = n;
    for (std::size_t g = 0; g < 3; ++g) {
      sizes[g] = std::min(spec.prefix_size, left);
      left -= sizes[g];
    }
    sizes[3] = left;
    return sizes;
  }
  // Equal quarters; remainders go to the earliest groups.
  const std::size_t base = n / 4, rem = n % 4;
  std::array<std::size_t, 4> sizes{};
  for (std::size_t g = 0; g < 4; ++g) sizes[g] = base + (g < rem ? 1 : 0);
  return sizes;
}

}  // namespace

DatasetSplit split_dataset(const InteractionTable& table, const SplitSpec& spec) {
  if (spec.old_threshold <= 0) throw ArgumentError("old_threshold must be positive");

  DatasetSplit split;
  split.spec = spec;
  split.item_is_new.assign(table.item_count, 0);

  std::vector<std::vector<std::size_t>> per_item(table.item_count);
  for (std::size_t r = 0; r < table.size(); ++r) {
    per_item[static_cast<std::size_t>(table.item_ids[r])].push_back(r);
  }

  for (std::size_t item = 0; item < table.item_count; ++item) {
    auto& rows = per_item[item];
    if (static_cast<std::int64_t>(rows.size()) > spec.old_threshold) {
      split.old_rows.insert(split.old_rows.end(), rows.begin(), rows.end());
      continue;
    }
    split.item_is_new[item] = 1;
    // Timestamp order with row index as a stable tie-break.
    std::sort(rows.begin(), rows.end(), [&table](std::size_t a, std::size_t b) {
      if (table.timestamps[a] != table.timestamps[b]) {
        return table.timestamps[a] < table.timestamps[b];
      }
      return a < b;
    });
    const auto sizes = group_sizes(rows.size(), spec);
    std::size_t at = 0;
    std::vector<std::size_t>* const out[4] = {&split.warm_a, &split.warm_b,
                                              &split.warm_c, &split.test};
    for (std::size_t g = 0; g < 4; ++g) {
      out[g]->insert(out[g]->end(), rows.begin() + at, rows.begin() + at + sizes[g]);
      at += sizes[g];
    }
  }

  std::sort(split.old_rows.begin(), split.old_rows.end());
  if (split.test.empty()) {
    throw SplitError("split produced an empty test set (threshold " +
                     std::to_string(spec.old_threshold) + ")");
  }
  if (split.old_rows.empty()) {
    throw SplitError("split produced an empty pretraining set (threshold " +
                     std::to_string(spec.old_threshold) + ")");
  }
  return split;
}

void write_split_manifest(const std::string& path, const InteractionTable& table,
                          const DatasetSplit& split) {
  std::vector<std::array<std::size_t, 5>> per_item(table.item_count,
                                                   std::array<std::size_t, 5>{});
  auto count = [&](std::span<const std::size_t> rows, std::size_t slot) {
    for (std::size_t r : rows) {
      per_item[static_cast<std::size_t>(table.item_ids[r])][slot] += 1;
    }
  };
  count(split.old_rows, 0);
  count(split.warm_a, 1);
  count(split.warm_b, 2);
  count(split.warm_c, 3);
  count(split.test, 4);

  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::trunc);
    if (!os) throw IoError("cannot write split manifest: " + tmp);
    os << "cvar-split-manifest v1\n";
    os << "table_hash\t" << table.content_hash() << "\n";
    os << "threshold\t" << split.spec.old_threshold << "\n";
    os << "policy\t" << to_string(split.spec.policy) << "\n";
    os << "prefix_size\t" << split.spec.prefix_size << "\n";
    os << "items\t" << table.item_count << "\n";
    os << "# item\tgroup\told\twarm_a\twarm_b\twarm_c\ttest\n";
    for (std::size_t item = 0; item < table.item_count; ++item) {
      os << item << "\t" << (split.item_is_new[item] ? "new" : "old");
      for (std::size_t g = 0; g < 5; ++g) os << "\t" << per_item[item][g];
      os << "\n";
    }
    if (!os) throw IoError("short write on split manifest: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

DatasetSplit read_split_manifest(const std::string& path,
                                 const InteractionTable& table) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open split manifest: " + path);
  std::string line;
  std::getline(is, line);
  if (line != "cvar-split-manifest v1") {
    throw IoError("not a split manifest (bad header): " + path);
  }

  SplitSpec spec;
  std::uint64_t table_hash = 0;
  std::size_t items = 0;
  for (int i = 0; i < 5; ++i) {
    std::getline(is, line);
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "table_hash") ls >> table_hash;
    else if (key == "threshold") ls >> spec.old_threshold;
    else if (key == "policy") {
      std::string p;
      ls >> p;
      spec.policy = policy_from_string(p);
    } else if (key == "prefix_size") ls >> spec.prefix_size;
    else if (key == "items") ls >> items;
    else throw IoError("split manifest malformed near: " + line);
  }
  if (table_hash != table.content_hash()) {
    throw StateError("split manifest was built from a different dataset: " + path);
  }
  if (items != table.item_count) {
    throw StateError("split manifest item count mismatch: " + path);
  }

  DatasetSplit split = split_dataset(table, spec);

  // Verify the persisted assignment matches the recomputation.
  std::getline(is, line);  // column comment
  for (std::size_t item = 0; item < items; ++item) {
    std::getline(is, line);
    std::istringstream ls(line);
    std::size_t id = 0;
    std::string group;
    ls >> id >> group;
    if (id != item || !is) {
      throw IoError("split manifest truncated at item " + std::to_string(item));
    }
    const bool is_new = group == "new";
    if (is_new != (split.item_is_new[item] != 0)) {
      throw StateError("split manifest disagrees with recomputed split at item " +
                       std::to_string(item));
    }
  }
  return split;
}

}  // namespace cvar
