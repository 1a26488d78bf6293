#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ivpvae/diffcore/tensor.hpp"

namespace ivpvae::diff {

/// Named trainable tensors with matching gradient accumulators.
///
/// Parameters are registered once, in a fixed order, and initialized from a
/// single generator seeded at construction so that identical registration
/// sequences produce identical values.
class ParamStore {
 public:
  explicit ParamStore(std::uint64_t seed = 0) : seed_(seed), rng_(seed) {}

  std::size_t add(std::string name, Tensor value) {
    if (index_.contains(name)) throw ContractError("duplicate parameter '" + name + "'");
    const std::size_t id = values_.size();
    index_.emplace(name, id);
    names_.push_back(std::move(name));
    grads_.emplace_back(value.shape(), 0.0);
    value.set_requires_grad(true);
    values_.push_back(std::move(value));
    return id;
  }

  /// Weight drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  std::size_t add_uniform(std::string name, Shape shape, std::size_t fan_in) {
    Tensor t(std::move(shape));
    const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(1, fan_in)));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : t.data()) v = dist(rng_);
    return add(std::move(name), std::move(t));
  }

  std::size_t add_zeros(std::string name, Shape shape) { return add(std::move(name), Tensor(std::move(shape))); }

  std::size_t size() const { return values_.size(); }
  std::size_t total_elements() const {
    std::size_t n = 0;
    for (const auto& v : values_) n += v.size();
    return n;
  }

  bool contains(std::string_view name) const { return index_.contains(std::string(name)); }

  std::size_t index(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) throw ContractError("unknown parameter '" + std::string(name) + "'");
    return it->second;
  }

  const std::string& name(std::size_t i) const { return names_.at(i); }
  const std::vector<std::string>& names() const { return names_; }

  Tensor& value(std::size_t i) { return values_.at(i); }
  const Tensor& value(std::size_t i) const { return values_.at(i); }
  Tensor& grad(std::size_t i) { return grads_.at(i); }
  const Tensor& grad(std::size_t i) const { return grads_.at(i); }

  void zero_grad() {
    for (auto& g : grads_) std::fill(g.data().begin(), g.data().end(), 0.0);
  }

  std::uint64_t seed() const { return seed_; }

  /// Copies values from another store with identical names and shapes.
  void copy_values_from(const ParamStore& other) {
    if (other.names_ != names_) throw ContractError("parameter stores have different layouts");
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (other.values_[i].shape() != values_[i].shape()) {
        throw ContractError("shape mismatch for parameter '" + names_[i] + "'");
      }
      values_[i].storage() = other.values_[i].storage();
    }
  }

  friend bool operator==(const ParamStore& a, const ParamStore& b) {
    if (a.names_ != b.names_) return false;
    for (std::size_t i = 0; i < a.values_.size(); ++i) {
      if (!(a.values_[i] == b.values_[i])) return false;
    }
    return true;
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 rng_;
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
  std::vector<Tensor> grads_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace ivpvae::diff
