#include "lexipivot/numerics/param_store.hpp"

#include <cstring>

#include "lexipivot/binary_io.hpp"
#include "lexipivot/error.hpp"

namespace lexipivot {

namespace {
constexpr std::string_view kMagic = "LXPV";
constexpr std::uint32_t kVersion = 1;
}  // namespace

Tensor& ParamStore::add(std::string name, Tensor tensor) {
  auto [it, inserted] = params_.emplace(std::move(name), std::move(tensor));
  if (!inserted) throw StateError("duplicate parameter name \"" + it->first + "\"");
  return it->second;
}

Tensor& ParamStore::get(std::string_view name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw LookupError("unknown parameter \"" + std::string(name) + "\"");
  return it->second;
}

const Tensor& ParamStore::get(std::string_view name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw LookupError("unknown parameter \"" + std::string(name) + "\"");
  return it->second;
}

std::size_t ParamStore::scalar_count() const noexcept {
  std::size_t n = 0;
  for (const auto& [_, t] : params_) n += t.size();
  return n;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& [name, _] : params_) out.push_back(name);
  return out;
}

void ParamStore::zero_grad() {
  for (auto& [_, t] : params_) {
    if (t.requires_grad()) t.zero_grad();
  }
}

void ParamStore::release_grads() noexcept {
  for (auto& [_, t] : params_) t.release_grad();
}

std::uint64_t ParamStore::checksum() const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [name, t] : params_) {
    h = fnv1a64(name, h);
    const auto data = t.data();
    h = fnv1a64(std::string_view(reinterpret_cast<const char*>(data.data()),
                                 data.size() * sizeof(double)),
                h);
  }
  return h;
}

std::map<std::string, std::vector<double>> ParamStore::snapshot() const {
  std::map<std::string, std::vector<double>> out;
  for (const auto& [name, t] : params_) out.emplace(name, std::vector<double>(t.data().begin(), t.data().end()));
  return out;
}

void ParamStore::restore(const std::map<std::string, std::vector<double>>& values) {
  for (auto& [name, t] : params_) {
    auto it = values.find(name);
    if (it == values.end() || it->second.size() != t.size()) {
      throw StateError("snapshot does not match parameter \"" + name + "\"");
    }
    std::copy(it->second.begin(), it->second.end(), t.data().begin());
  }
}

void init_uniform(Tensor& t, double scale, Rng& rng) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  for (double& v : t.data()) v = dist(rng);
}

std::string serialize_params(const ParamStore& params) {
  ByteWriter w;
  w.put_bytes(kMagic);
  w.put(kVersion);
  w.put(static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, t] : params) {
    w.put_string(name);
    w.put(static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) w.put(static_cast<std::uint64_t>(d));
    for (double v : t.data()) w.put(v);
  }
  return w.bytes();
}

ParamStore deserialize_params(std::string_view bytes, const std::string& source) {
  ByteReader r(bytes, source);
  r.expect_magic(kMagic);
  const auto version = r.get<std::uint32_t>("version");
  if (version != kVersion) r.fail("unsupported version " + std::to_string(version));
  const auto count = r.get<std::uint32_t>("parameter count");
  ParamStore store;
  for (std::uint32_t p = 0; p < count; ++p) {
    auto name = r.get_string("parameter name");
    const auto rank = r.get<std::uint32_t>("rank");
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(r.get<std::uint64_t>("dimension"));
    const std::size_t n = shape_size(shape);
    if (n > r.remaining() / sizeof(double)) r.fail("parameter \"" + name + "\" exceeds file size");
    std::vector<double> data(n);
    const auto raw = r.get_bytes(n * sizeof(double), "parameter values");
    std::memcpy(data.data(), raw.data(), raw.size());
    if (store.contains(name)) r.fail("duplicate parameter \"" + name + "\"");
    store.add(std::move(name), Tensor(std::move(shape), std::move(data), true));
  }
  if (!r.at_end()) r.fail("trailing bytes");
  return store;
}

void save_params(const ParamStore& params, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_params(params));
}

ParamStore load_params(const std::filesystem::path& path) {
  return deserialize_params(read_file(path), path.string());
}

}  // namespace lexipivot
