#include "cvar/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "cvar/errors.hpp"

namespace cvar {

namespace {

constexpr char kMagic[8] = {'C', 'V', 'A', 'R', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_str(std::ostream& os, const std::string& s) {
  write_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

std::string read_str(std::istream& is) {
  const std::uint32_t n = read_u32(is);
  std::string s(n, '\0');
  is.read(s.data(), n);
  return s;
}

std::ifstream open_and_check(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0) {
    throw IoError("not a checkpoint file (bad magic): " + path);
  }
  const std::uint32_t version = read_u32(is);
  if (version != kVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version) +
                  " in " + path);
  }
  return is;
}

std::map<std::string, std::string> read_meta_block(std::istream& is) {
  std::map<std::string, std::string> meta;
  const std::uint32_t n = read_u32(is);
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string k = read_str(is);
    std::string v = read_str(is);
    meta.emplace(std::move(k), std::move(v));
  }
  return meta;
}

}  // namespace

void save_checkpoint(const std::string& path, const ParameterStore& params,
                     const std::map<std::string, std::string>& meta) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write checkpoint: " + tmp);
    os.write(kMagic, 8);
    write_u32(os, kVersion);
    write_u32(os, static_cast<std::uint32_t>(meta.size()));
    for (const auto& [k, v] : meta) {
      write_str(os, k);
      write_str(os, v);
    }
    write_u32(os, static_cast<std::uint32_t>(params.size()));
    params.for_each([&os](const std::string& name, const Tensor& t, bool frozen) {
      write_str(os, name);
      os.put(frozen ? 1 : 0);
      write_u32(os, static_cast<std::uint32_t>(t.shape().size()));
      for (std::size_t d : t.shape()) write_u64(os, d);
      const auto v = t.values();
      os.write(reinterpret_cast<const char*>(v.data()),
               static_cast<std::streamsize>(v.size() * sizeof(double)));
    });
    if (!os) throw IoError("short write on checkpoint: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

ParameterStore read_checkpoint(const std::string& path,
                               std::map<std::string, std::string>* meta) {
  std::ifstream is = open_and_check(path);
  auto m = read_meta_block(is);
  if (meta) *meta = m;

  ParameterStore store;
  const std::uint32_t n_params = read_u32(is);
  for (std::uint32_t i = 0; i < n_params; ++i) {
    const std::string name = read_str(is);
    const bool frozen = is.get() != 0;
    const std::uint32_t ndim = read_u32(is);
    std::vector<std::size_t> shape(ndim);
    std::size_t total = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      shape[d] = static_cast<std::size_t>(read_u64(is));
      total *= shape[d];
    }
    std::vector<double> data(total);
    is.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(total * sizeof(double)));
    if (!is) throw IoError("truncated checkpoint: " + path);
    store.add(name, Tensor(std::move(shape), std::move(data)));
    store.set_frozen(name, frozen);
  }
  return store;
}

std::map<std::string, std::string> load_checkpoint(const std::string& path,
                                                   ParameterStore& into) {
  std::map<std::string, std::string> meta;
  ParameterStore loaded = read_checkpoint(path, &meta);
  loaded.for_each([&into, &path](const std::string& name, const Tensor& t, bool) {
    if (!into.contains(name)) {
      throw StateError("checkpoint " + path + " has unexpected parameter " + name);
    }
    Tensor& dst = into.get(name);
    if (dst.shape() != t.shape()) {
      throw DimensionError("checkpoint parameter " + name + " shape " +
                           shape_string(t.shape()) + " does not match " +
                           shape_string(dst.shape()));
    }
    auto d = dst.values_mut();
    const auto s = t.values();
    std::memcpy(d.data(), s.data(), s.size() * sizeof(double));
  });
  return meta;
}

std::map<std::string, std::string> peek_checkpoint_meta(const std::string& path) {
  std::ifstream is = open_and_check(path);
  return read_meta_block(is);
}

}  // namespace cvar
