#include "cvar/dataset.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "cvar/errors.hpp"
#include "cvar/rng.hpp"

namespace cvar {

const Column& InteractionTable::column(const std::string& name) const {
  for (const Column& c : columns) {
    if (c.name == name) return c;
  }
  throw ArgumentError("unknown column: " + name);
}

std::uint64_t InteractionTable::content_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  mix(item_ids.data(), item_ids.size() * sizeof(std::int64_t));
  mix(labels.data(), labels.size() * sizeof(double));
  mix(timestamps.data(), timestamps.size() * sizeof(std::int64_t));
  for (const Column& c : columns) {
    mix(c.name.data(), c.name.size());
    mix(c.values.data(), c.values.size() * sizeof(std::int64_t));
    mix(c.multi_values.data(), c.multi_values.size() * sizeof(std::int64_t));
    mix(c.cont.data(), c.cont.size() * sizeof(double));
  }
  return h;
}

// ---- MovieLens-1M ---------------------------------------------------------

namespace {

std::vector<std::string> split_double_colon(const std::string& line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  for (;;) {
    const std::size_t next = line.find("::", pos);
    if (next == std::string::npos) {
      out.push_back(line.substr(pos));
      return out;
    }
    out.push_back(line.substr(pos, next - pos));
    pos = next + 2;
  }
}

std::int64_t parse_int(const std::string& s, const std::string& file, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IngestionError(file + ":" + std::to_string(line_no) +
                         ": expected an integer, got '" + s + "'");
  }
}

// Lowercased alphanumeric tokens; punctuation splits words.
std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char ch : text) {
    if (std::isalnum(ch)) {
      cur.push_back(static_cast<char>(std::tolower(ch)));
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

// Interns string tokens into a column dictionary.
struct Interner {
  std::unordered_map<std::string, std::int64_t> ids;
  std::vector<std::string> names;
  std::int64_t intern(const std::string& s) {
    auto [it, inserted] = ids.emplace(s, static_cast<std::int64_t>(names.size()));
    if (inserted) names.push_back(s);
    return it->second;
  }
};

struct MovieMeta {
  std::vector<std::int64_t> title_tokens;
  std::vector<std::int64_t> genre_tokens;
  double year = 0.0;
};

struct UserMeta {
  std::int64_t gender = 0;
  std::int64_t age = 0;
  std::int64_t occupation = 0;
};

}  // namespace

InteractionTable load_movielens(const std::string& dir, const MovielensOptions& opts) {
  namespace fs = std::filesystem;
  const std::string movies_path = (fs::path(dir) / "movies.dat").string();
  const std::string users_path = (fs::path(dir) / "users.dat").string();
  const std::string ratings_path = (fs::path(dir) / "ratings.dat").string();
  for (const std::string& p : {movies_path, users_path, ratings_path}) {
    if (!fs::exists(p)) throw IngestionError("missing dataset file: " + p);
  }

  Interner title_tok, genre_tok, gender_tok, age_tok, occupation_tok, user_tok;
  std::unordered_map<std::int64_t, MovieMeta> movies;
  std::unordered_map<std::int64_t, std::string> movie_titles;
  std::unordered_map<std::int64_t, UserMeta> users;

  {
    std::ifstream is(movies_path, std::ios::binary);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const auto fields = split_double_colon(line);
      if (fields.size() != 3) {
        throw IngestionError(movies_path + ":" + std::to_string(line_no) +
                             ": expected 3 fields, got " +
                             std::to_string(fields.size()));
      }
      const std::int64_t movie_id = parse_int(fields[0], movies_path, line_no);
      MovieMeta meta;

      std::string title = fields[1];
      // Release year is the trailing "(YYYY)".
      const std::size_t close = title.rfind(')');
      const std::size_t open = title.rfind('(');
      if (open != std::string::npos && close != std::string::npos && close > open + 1) {
        const std::string year_str = title.substr(open + 1, close - open - 1);
        if (year_str.size() == 4 &&
            std::all_of(year_str.begin(), year_str.end(),
                        [](unsigned char c) { return std::isdigit(c); })) {
          meta.year = std::stod(year_str);
          title = title.substr(0, open);
        }
      }
      for (const std::string& t : tokenize(title)) {
        meta.title_tokens.push_back(title_tok.intern(t));
      }
      std::stringstream genres(fields[2]);
      std::string g;
      while (std::getline(genres, g, '|')) {
        if (!g.empty()) meta.genre_tokens.push_back(genre_tok.intern(g));
      }
      movie_titles[movie_id] = fields[1];
      movies.emplace(movie_id, std::move(meta));
    }
  }

  {
    std::ifstream is(users_path, std::ios::binary);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const auto fields = split_double_colon(line);
      if (fields.size() != 5) {
        throw IngestionError(users_path + ":" + std::to_string(line_no) +
                             ": expected 5 fields, got " +
                             std::to_string(fields.size()));
      }
      UserMeta meta;
      meta.gender = gender_tok.intern(fields[1]);
      meta.age = age_tok.intern(fields[2]);
      meta.occupation = occupation_tok.intern(fields[3]);
      users.emplace(parse_int(fields[0], users_path, line_no), meta);
    }
  }

  InteractionTable table;
  Column user_id{.name = "user_id", .kind = FieldKind::Categorical};
  Column gender{.name = "gender", .kind = FieldKind::Categorical};
  Column age{.name = "age", .kind = FieldKind::Categorical};
  Column occupation{.name = "occupation", .kind = FieldKind::Categorical};
  Column genres{.name = "genres", .kind = FieldKind::MultiCategorical, .side_info = true};
  Column title{.name = "title", .kind = FieldKind::MultiCategorical, .side_info = true};
  Column year{.name = "year", .kind = FieldKind::Continuous, .side_info = true};
  genres.multi_offsets.push_back(0);
  title.multi_offsets.push_back(0);

  std::unordered_map<std::int64_t, std::int64_t> item_index;

  {
    std::ifstream is(ratings_path, std::ios::binary);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const auto fields = split_double_colon(line);
      if (fields.size() != 4) {
        throw IngestionError(ratings_path + ":" + std::to_string(line_no) +
                             ": expected 4 fields, got " +
                             std::to_string(fields.size()));
      }
      const std::int64_t raw_user = parse_int(fields[0], ratings_path, line_no);
      const std::int64_t raw_movie = parse_int(fields[1], ratings_path, line_no);
      const std::int64_t rating = parse_int(fields[2], ratings_path, line_no);
      const std::int64_t ts = parse_int(fields[3], ratings_path, line_no);

      const auto movie_it = movies.find(raw_movie);
      if (movie_it == movies.end()) {
        throw IngestionError(ratings_path + ":" + std::to_string(line_no) +
                             ": movie " + std::to_string(raw_movie) +
                             " not present in movies.dat");
      }
      const auto user_it = users.find(raw_user);
      if (user_it == users.end()) {
        throw IngestionError(ratings_path + ":" + std::to_string(line_no) +
                             ": user " + std::to_string(raw_user) +
                             " not present in users.dat");
      }

      auto [iit, inserted] =
          item_index.emplace(raw_movie, static_cast<std::int64_t>(item_index.size()));
      if (inserted) table.item_names.push_back(movie_titles[raw_movie]);
      table.item_ids.push_back(iit->second);
      table.labels.push_back(rating >= opts.label_threshold ? 1.0 : 0.0);
      table.timestamps.push_back(ts);

      user_id.values.push_back(user_tok.intern(fields[0]));
      gender.values.push_back(user_it->second.gender);
      age.values.push_back(user_it->second.age);
      occupation.values.push_back(user_it->second.occupation);

      const MovieMeta& meta = movie_it->second;
      genres.multi_values.insert(genres.multi_values.end(),
                                 meta.genre_tokens.begin(), meta.genre_tokens.end());
      genres.multi_offsets.push_back(genres.multi_values.size());
      if (opts.use_title_tokens) {
        title.multi_values.insert(title.multi_values.end(),
                                  meta.title_tokens.begin(), meta.title_tokens.end());
        title.multi_offsets.push_back(title.multi_values.size());
      }
      year.cont.push_back(meta.year);
    }
  }

  if (table.item_ids.empty()) {
    throw IngestionError(ratings_path + ": no interactions parsed");
  }

  table.item_count = item_index.size();
  user_id.dict = user_tok.names;
  gender.dict = gender_tok.names;
  age.dict = age_tok.names;
  occupation.dict = occupation_tok.names;
  genres.dict = genre_tok.names;
  title.dict = title_tok.names;

  table.columns.push_back(std::move(user_id));
  table.columns.push_back(std::move(gender));
  table.columns.push_back(std::move(age));
  table.columns.push_back(std::move(occupation));
  table.columns.push_back(std::move(genres));
  if (opts.use_title_tokens) table.columns.push_back(std::move(title));
  table.columns.push_back(std::move(year));
  return table;
}

// ---- Taobao display ad click --------------------------------------------------

namespace {

std::vector<std::string> split_comma(const std::string& line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  for (;;) {
    const std::size_t next = line.find(',', pos);
    if (next == std::string::npos) {
      out.push_back(line.substr(pos));
      return out;
    }
    out.push_back(line.substr(pos, next - pos));
    pos = next + 1;
  }
}

}  // namespace

InteractionTable load_taobao(const std::string& dir) {
  namespace fs = std::filesystem;
  const std::string sample_path = (fs::path(dir) / "raw_sample.csv").string();
  const std::string ad_path = (fs::path(dir) / "ad_feature.csv").string();
  const std::string user_path = (fs::path(dir) / "user_profile.csv").string();
  for (const std::string& p : {sample_path, ad_path, user_path}) {
    if (!fs::exists(p)) throw IngestionError("missing dataset file: " + p);
  }

  // ad_feature.csv: adgroup_id,cate_id,campaign_id,customer,brand,price
  struct AdMeta {
    std::int64_t category = 0, campaign = 0, customer = 0, brand = 0;
    double price = 0.0;
  };
  std::unordered_map<std::int64_t, AdMeta> ads;
  {
    std::ifstream is(ad_path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line_no == 1) continue;  // header row
      const auto f = split_comma(line);
      if (f.size() != 6) {
        throw IngestionError(ad_path + ":" + std::to_string(line_no) +
                             ": expected 6 fields, got " + std::to_string(f.size()));
      }
      AdMeta meta;
      auto num = [&](const std::string& s) -> std::int64_t {
        return s.empty() || s == "NULL" ? 0 : parse_int(s, ad_path, line_no);
      };
      meta.category = num(f[1]);
      meta.campaign = num(f[2]);
      meta.customer = num(f[3]);
      meta.brand = num(f[4]);
      meta.price = f[5].empty() || f[5] == "NULL" ? 0.0 : std::stod(f[5]);
      ads.emplace(parse_int(f[0], ad_path, line_no), meta);
    }
  }

  // user_profile.csv: userid,cms_segid,cms_group_id,final_gender_code,
  //                   age_level,pvalue_level,shopping_level,occupation,
  //                   new_user_class_level
  struct TbUser {
    std::array<std::int64_t, 8> f{};
  };
  std::unordered_map<std::int64_t, TbUser> users;
  {
    std::ifstream is(user_path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line_no == 1) continue;
      const auto f = split_comma(line);
      if (f.size() != 9) {
        throw IngestionError(user_path + ":" + std::to_string(line_no) +
                             ": expected 9 fields, got " + std::to_string(f.size()));
      }
      TbUser u;
      for (std::size_t i = 0; i < 8; ++i) {
        const std::string& s = f[i + 1];
        u.f[i] = (s.empty() || s == "NULL") ? 0 : parse_int(s, user_path, line_no);
      }
      users.emplace(parse_int(f[0], user_path, line_no), u);
    }
  }

  InteractionTable table;
  const char* user_names[8] = {"cms_segid",     "cms_group_id", "gender",
                               "age_level",     "pvalue_level", "shopping_level",
                               "occupation",    "city_level"};
  std::vector<Column> cols;
  for (const char* n : user_names) {
    cols.push_back(Column{.name = n, .kind = FieldKind::Categorical});
  }
  Column category{.name = "cate_id", .kind = FieldKind::Categorical, .side_info = true};
  Column campaign{.name = "campaign_id", .kind = FieldKind::Categorical, .side_info = true};
  Column customer{.name = "customer_id", .kind = FieldKind::Categorical, .side_info = true};
  Column brand{.name = "brand_id", .kind = FieldKind::Categorical, .side_info = true};

  std::unordered_map<std::int64_t, std::int64_t> item_index;
  {
    // raw_sample.csv: user,time_stamp,adgroup_id,pid,nonclk,clk
    std::ifstream is(sample_path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line_no == 1) continue;
      const auto f = split_comma(line);
      if (f.size() != 6) {
        throw IngestionError(sample_path + ":" + std::to_string(line_no) +
                             ": expected 6 fields, got " + std::to_string(f.size()));
      }
      const std::int64_t raw_user = parse_int(f[0], sample_path, line_no);
      const std::int64_t ts = parse_int(f[1], sample_path, line_no);
      const std::int64_t ad = parse_int(f[2], sample_path, line_no);
      const std::int64_t clk = parse_int(f[5], sample_path, line_no);

      const auto ad_it = ads.find(ad);
      if (ad_it == ads.end()) {
        throw IngestionError(sample_path + ":" + std::to_string(line_no) +
                             ": ad " + std::to_string(ad) +
                             " not present in ad_feature.csv");
      }
      const TbUser user = users.count(raw_user) ? users.at(raw_user) : TbUser{};

      auto [iit, inserted] =
          item_index.emplace(ad, static_cast<std::int64_t>(item_index.size()));
      (void)inserted;
      table.item_ids.push_back(iit->second);
      table.labels.push_back(clk != 0 ? 1.0 : 0.0);
      table.timestamps.push_back(ts);
      for (std::size_t i = 0; i < 8; ++i) cols[i].values.push_back(user.f[i]);
      category.values.push_back(ad_it->second.category);
      campaign.values.push_back(ad_it->second.campaign);
      customer.values.push_back(ad_it->second.customer);
      brand.values.push_back(ad_it->second.brand);
    }
  }
  if (table.item_ids.empty()) {
    throw IngestionError(sample_path + ": no interactions parsed");
  }
  table.item_count = item_index.size();
  for (Column& c : cols) table.columns.push_back(std::move(c));
  table.columns.push_back(std::move(category));
  table.columns.push_back(std::move(campaign));
  table.columns.push_back(std::move(customer));
  table.columns.push_back(std::move(brand));
  return table;
}

// ---- synthetic corpus -------------------------------------------------------

namespace {

double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

InteractionTable make_synthetic(const SyntheticConfig& cfg) {
  if (cfg.items == 0 || cfg.users == 0 || cfg.interactions == 0) {
    throw ArgumentError("synthetic corpus needs items, users and interactions > 0");
  }
  Rng rng(cfg.seed);

  constexpr std::size_t kLatent = 3;
  std::vector<std::array<double, kLatent>> item_latent(cfg.items);
  std::vector<double> item_bias(cfg.items);
  for (std::size_t i = 0; i < cfg.items; ++i) {
    for (double& x : item_latent[i]) x = rng.normal();
    item_bias[i] = rng.normal(0.0, 0.3);
  }
  std::vector<std::array<double, kLatent>> user_latent(cfg.users);
  for (auto& u : user_latent) {
    for (double& x : u) x = rng.normal();
  }

  // Zipf popularity over item rank.
  std::vector<double> cum(cfg.items);
  double total = 0.0;
  for (std::size_t i = 0; i < cfg.items; ++i) {
    total += std::pow(static_cast<double>(i + 1), -cfg.zipf_exponent);
    cum[i] = total;
  }

  auto sample_item = [&]() -> std::size_t {
    const double u = rng.uniform() * total;
    return static_cast<std::size_t>(
        std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
  };

  constexpr std::size_t kBuckets = 12;
  auto bucket = [](double z, std::size_t buckets) {
    const auto b = static_cast<std::size_t>(standard_normal_cdf(z) * static_cast<double>(buckets));
    return static_cast<std::int64_t>(std::min(b, buckets - 1));
  };

  InteractionTable table;
  table.item_count = cfg.items;
  Column user_id{.name = "user_id", .kind = FieldKind::Categorical};
  Column user_group{.name = "user_group", .kind = FieldKind::Categorical};
  Column cat_a{.name = "item_cat_a", .kind = FieldKind::Categorical, .side_info = true};
  Column cat_b{.name = "item_cat_b", .kind = FieldKind::Categorical, .side_info = true};
  Column quality{.name = "item_quality", .kind = FieldKind::Continuous, .side_info = true};
  // Item-identifying token list, like title tokens in movie corpora: one
  // near-unique token plus two topic tokens shared across items.
  Column tags{.name = "item_tags", .kind = FieldKind::MultiCategorical, .side_info = true};
  tags.multi_offsets.push_back(0);

  for (std::size_t n = 0; n < cfg.interactions; ++n) {
    const std::size_t item = sample_item();
    const std::size_t user = rng.uniform_index(cfg.users);
    double dot = 0.0;
    for (std::size_t j = 0; j < kLatent; ++j) {
      dot += user_latent[user][j] * item_latent[item][j];
    }
    const double p =
        1.0 / (1.0 + std::exp(-(1.8 * dot / std::sqrt(3.0) + item_bias[item])));
    table.item_ids.push_back(static_cast<std::int64_t>(item));
    table.labels.push_back(rng.uniform() < p ? 1.0 : 0.0);
    table.timestamps.push_back(static_cast<std::int64_t>(n));

    user_id.values.push_back(static_cast<std::int64_t>(user));
    user_group.values.push_back(bucket(user_latent[user][0], 8));
    cat_a.values.push_back(bucket(item_latent[item][0], kBuckets));
    cat_b.values.push_back(bucket(item_latent[item][1], kBuckets));
    quality.cont.push_back(standard_normal_cdf(item_latent[item][2]));
    tags.multi_values.push_back(static_cast<std::int64_t>(item));
    tags.multi_values.push_back(static_cast<std::int64_t>(cfg.items) +
                                bucket(item_latent[item][1], kBuckets));
    tags.multi_values.push_back(static_cast<std::int64_t>(cfg.items) + kBuckets +
                                bucket(item_latent[item][2], kBuckets));
    tags.multi_offsets.push_back(tags.multi_values.size());
  }

  table.columns.push_back(std::move(user_id));
  table.columns.push_back(std::move(user_group));
  table.columns.push_back(std::move(cat_a));
  table.columns.push_back(std::move(cat_b));
  table.columns.push_back(std::move(tags));
  table.columns.push_back(std::move(quality));
  return table;
}

// ---- cache --------------------------------------------------------------------

namespace {

constexpr char kTableMagic[8] = {'C', 'V', 'A', 'R', 'T', 'B', 'L', '1'};

template <typename T>
void write_vec(std::ostream& os, const std::vector<T>& v) {
  const std::uint64_t n = v.size();
  os.write(reinterpret_cast<const char*>(&n), sizeof(n));
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(n * sizeof(T)));
}

template <typename T>
std::vector<T> read_vec(std::istream& is) {
  std::uint64_t n = 0;
  is.read(reinterpret_cast<char*>(&n), sizeof(n));
  std::vector<T> v(n);
  is.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(n * sizeof(T)));
  return v;
}

void write_string(std::ostream& os, const std::string& s) {
  const std::uint64_t n = s.size();
  os.write(reinterpret_cast<const char*>(&n), sizeof(n));
  os.write(s.data(), static_cast<std::streamsize>(n));
}

std::string read_string(std::istream& is) {
  std::uint64_t n = 0;
  is.read(reinterpret_cast<char*>(&n), sizeof(n));
  std::string s(n, '\0');
  is.read(s.data(), static_cast<std::streamsize>(n));
  return s;
}

void write_string_vec(std::ostream& os, const std::vector<std::string>& v) {
  const std::uint64_t n = v.size();
  os.write(reinterpret_cast<const char*>(&n), sizeof(n));
  for (const std::string& s : v) write_string(os, s);
}

std::vector<std::string> read_string_vec(std::istream& is) {
  std::uint64_t n = 0;
  is.read(reinterpret_cast<char*>(&n), sizeof(n));
  std::vector<std::string> v(n);
  for (std::string& s : v) s = read_string(is);
  return v;
}

}  // namespace

void save_table_cache(const std::string& path, const InteractionTable& table) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write table cache: " + tmp);
    os.write(kTableMagic, 8);
    const std::uint64_t rows = table.size();
    const std::uint64_t hash = table.content_hash();
    const std::uint64_t items = table.item_count;
    os.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
    os.write(reinterpret_cast<const char*>(&hash), sizeof(hash));
    os.write(reinterpret_cast<const char*>(&items), sizeof(items));
    write_vec(os, table.item_ids);
    write_vec(os, table.labels);
    write_vec(os, table.timestamps);
    write_string_vec(os, table.item_names);
    const std::uint64_t n_cols = table.columns.size();
    os.write(reinterpret_cast<const char*>(&n_cols), sizeof(n_cols));
    for (const Column& c : table.columns) {
      write_string(os, c.name);
      const std::uint8_t kind = static_cast<std::uint8_t>(c.kind);
      const std::uint8_t side = c.side_info ? 1 : 0;
      os.put(static_cast<char>(kind));
      os.put(static_cast<char>(side));
      write_vec(os, c.values);
      write_vec(os, c.multi_values);
      write_vec(os, c.multi_offsets);
      write_vec(os, c.cont);
      write_string_vec(os, c.dict);
    }
    if (!os) throw IoError("short write on table cache: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

InteractionTable load_table_cache(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open table cache: " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kTableMagic, 8) != 0) {
    throw IoError("not a table cache (bad magic): " + path);
  }
  std::uint64_t rows = 0, hash = 0, items = 0;
  is.read(reinterpret_cast<char*>(&rows), sizeof(rows));
  is.read(reinterpret_cast<char*>(&hash), sizeof(hash));
  is.read(reinterpret_cast<char*>(&items), sizeof(items));

  InteractionTable table;
  table.item_count = items;
  table.item_ids = read_vec<std::int64_t>(is);
  table.labels = read_vec<double>(is);
  table.timestamps = read_vec<std::int64_t>(is);
  table.item_names = read_string_vec(is);
  std::uint64_t n_cols = 0;
  is.read(reinterpret_cast<char*>(&n_cols), sizeof(n_cols));
  for (std::uint64_t i = 0; i < n_cols; ++i) {
    Column c;
    c.name = read_string(is);
    c.kind = static_cast<FieldKind>(is.get());
    c.side_info = is.get() != 0;
    c.values = read_vec<std::int64_t>(is);
    c.multi_values = read_vec<std::int64_t>(is);
    c.multi_offsets = read_vec<std::size_t>(is);
    c.cont = read_vec<double>(is);
    c.dict = read_string_vec(is);
    table.columns.push_back(std::move(c));
  }
  if (!is) throw IoError("truncated table cache: " + path);
  if (table.size() != rows || table.content_hash() != hash) {
    throw IoError("table cache corrupt (row count or hash mismatch): " + path);
  }
  return table;
}

}  // namespace cvar
