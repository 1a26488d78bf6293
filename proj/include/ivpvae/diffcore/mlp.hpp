#pragma once

#include <string>
#include <vector>

#include "ivpvae/diffcore/ops.hpp"
#include "ivpvae/diffcore/param_store.hpp"

namespace ivpvae::diff {

/// Fully connected net: tanh between layers, linear output.
struct Mlp {
  std::vector<std::size_t> weights;
  std::vector<std::size_t> biases;
  std::vector<std::size_t> widths;

  /// widths = {input, hidden..., output}. With zero_last the output layer
  /// starts at zero, so the net initially maps everything to 0.
  static Mlp create(ParamStore& store, const std::string& prefix, std::vector<std::size_t> widths,
                    bool zero_last = false) {
    if (widths.size() < 2) throw ContractError("MLP '" + prefix + "' needs at least input and output widths");
    Mlp m;
    m.widths = std::move(widths);
    for (std::size_t l = 0; l + 1 < m.widths.size(); ++l) {
      const std::size_t in = m.widths[l], out = m.widths[l + 1];
      const std::string base = prefix + ".l" + std::to_string(l);
      const bool last = l + 2 == m.widths.size();
      m.weights.push_back(zero_last && last ? store.add_zeros(base + ".weight", {in, out})
                                            : store.add_uniform(base + ".weight", {in, out}, in));
      m.biases.push_back(store.add_zeros(base + ".bias", {out}));
    }
    return m;
  }

  std::size_t input_width() const { return widths.front(); }
  std::size_t output_width() const { return widths.back(); }

  Var operator()(Bindings& b, const Var& x) const {
    Var h = x;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      h = affine(h, b(weights[l]), b(biases[l]));
      if (l + 1 < weights.size()) h = tanh(h);
    }
    return h;
  }
};

}  // namespace ivpvae::diff
