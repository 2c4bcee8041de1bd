#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "lexipivot/numerics/tensor.hpp"
#include "lexipivot/random.hpp"

namespace lexipivot {

/// Named parameters, iterated in sorted-name order.
class ParamStore {
 public:
  using Map = std::map<std::string, Tensor, std::less<>>;

  ParamStore() = default;
  explicit ParamStore(std::uint64_t rng_seed) : rng_seed_(rng_seed) {}

  /// Throws StateError on a duplicate name.
  Tensor& add(std::string name, Tensor tensor);

  Tensor& get(std::string_view name);
  const Tensor& get(std::string_view name) const;
  bool contains(std::string_view name) const { return params_.find(name) != params_.end(); }

  std::size_t size() const noexcept { return params_.size(); }
  std::size_t scalar_count() const noexcept;

  Map::iterator begin() noexcept { return params_.begin(); }
  Map::iterator end() noexcept { return params_.end(); }
  Map::const_iterator begin() const noexcept { return params_.begin(); }
  Map::const_iterator end() const noexcept { return params_.end(); }

  std::vector<std::string> names() const;

  /// Zeroes gradients of trainable parameters (allocating them if needed).
  void zero_grad();
  void release_grads() noexcept;

  /// Hash of every name and value bit.
  std::uint64_t checksum() const noexcept;

  std::uint64_t rng_seed() const noexcept { return rng_seed_; }
  void set_rng_seed(std::uint64_t seed) noexcept { rng_seed_ = seed; }

  /// Copies of parameter values, used for best-epoch snapshots.
  std::map<std::string, std::vector<double>> snapshot() const;
  void restore(const std::map<std::string, std::vector<double>>& values);

 private:
  Map params_;
  std::uint64_t rng_seed_ = 0;
};

void init_uniform(Tensor& t, double scale, Rng& rng);

/// LXPV binary encoding: "LXPV", u32 version, u32 count, then per parameter
/// u32 name length, name bytes, u32 rank, u64 dims, f64 values.
std::string serialize_params(const ParamStore& params);
ParamStore deserialize_params(std::string_view bytes, const std::string& source = "params");

void save_params(const ParamStore& params, const std::filesystem::path& path);
ParamStore load_params(const std::filesystem::path& path);

}  // namespace lexipivot
