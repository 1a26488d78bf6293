#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "ivpvae/seriesdata/series.hpp"

namespace ivpvae::data {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const Range&) const = default;
};

struct CountRange {
  std::size_t lo = 1;
  std::size_t hi = 1;
  bool operator==(const CountRange&) const = default;
};

/// Generator settings for y(t) = a sin(b t + c) + d t + e + noise.
struct SyntheticSpec {
  std::size_t n_samples = 1000;
  Range a{0.5, 2.0};
  Range b{0.1, 2.0};
  Range c{0.0, 2.0 * std::numbers::pi};
  Range d{-0.05, 0.05};
  Range e{-4.0, 4.0};
  double noise_std = 0.1;
  Range input_window{0.0, 20.0};
  Range forecast_window{20.0, 30.0};
  CountRange input_points{20, 40};
  CountRange forecast_points{10, 20};
  std::uint64_t seed = 0;

  void validate() const {
    if (n_samples < 1) throw ConfigError("synthetic n_samples must be >= 1");
    for (const Range* r : {&a, &b, &c, &d, &e, &input_window, &forecast_window}) {
      if (!(r->lo <= r->hi) || !std::isfinite(r->lo) || !std::isfinite(r->hi)) {
        throw ConfigError("synthetic ranges must be finite with lo <= hi");
      }
    }
    if (forecast_window.lo < input_window.hi) throw ConfigError("forecast window must start after the input window");
    if (!(noise_std >= 0)) throw ConfigError("synthetic noise_std must be >= 0");
    for (const CountRange* r : {&input_points, &forecast_points}) {
      if (r->lo > r->hi) throw ConfigError("synthetic point counts must have lo <= hi");
    }
    if (input_points.lo < 1) throw ConfigError("synthetic input_points must be >= 1");
  }
};

struct SyntheticParams {
  double a, b, c, d, e;
  double operator()(double t) const { return a * std::sin(b * t + c) + d * t + e; }
};

struct SyntheticSample {
  IrregularSeries series;
  SyntheticParams params;
};

/// Every series draws its own generator from (seed, index), so the output
/// is a pure function of the spec.
inline std::vector<SyntheticSample> generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::vector<SyntheticSample> out;
  out.reserve(spec.n_samples);
  const std::size_t width = std::to_string(spec.n_samples - 1).size();
  for (std::size_t n = 0; n < spec.n_samples; ++n) {
    std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                      static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(n >> 32)};
    std::mt19937_64 rng(seq);
    auto draw = [&rng](Range r) { return std::uniform_real_distribution<double>(r.lo, r.hi)(rng); };
    SyntheticParams p{};
    p.a = draw(spec.a);
    p.b = draw(spec.b);
    p.c = draw(spec.c);
    p.d = draw(spec.d);
    p.e = draw(spec.e);

    std::vector<double> times;
    auto sample_window = [&](Range w, CountRange count) {
      const std::size_t k = std::uniform_int_distribution<std::size_t>(count.lo, count.hi)(rng);
      std::vector<double> ts(k);
      for (double& t : ts) t = draw(w);
      std::sort(ts.begin(), ts.end());
      times.insert(times.end(), ts.begin(), ts.end());
    };
    sample_window(spec.input_window, spec.input_points);
    sample_window(spec.forecast_window, spec.forecast_points);
    times.erase(std::unique(times.begin(), times.end()), times.end());

    std::normal_distribution<double> noise(0.0, 1.0);
    IrregularSeries s;
    std::string id = std::to_string(n);
    s.series_id = "syn" + std::string(width - id.size(), '0') + id;
    s.num_vars = 1;
    s.times = times;
    for (double t : times) {
      s.values.push_back(p(t) + spec.noise_std * noise(rng));
      s.mask.push_back(1);
    }
    s.label = p.d > 0 ? 1 : 0;
    out.push_back({std::move(s), p});
  }
  return out;
}

inline Dataset to_dataset(const std::vector<SyntheticSample>& samples) {
  Dataset ds{{"y"}, {}};
  ds.series.reserve(samples.size());
  for (const auto& s : samples) ds.series.push_back(s.series);
  return ds;
}

}  // namespace ivpvae::data
