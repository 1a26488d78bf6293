#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ivpvae/seriesdata/normalize.hpp"
#include "ivpvae/util/kvfile.hpp"

namespace ivpvae::data {

/// Sidecar description of a dataset: variable order, normalization and any
/// free-form attributes (e.g. how it was generated).
struct Manifest {
  std::vector<std::string> variables;
  std::optional<NormStats> norm;
  std::vector<std::pair<std::string, std::string>> attributes;

  io::KeyValueFile to_kv() const {
    io::KeyValueFile kv;
    kv.set("format", "ivpvae-manifest");
    kv.set("version", "1");
    kv.set("num_vars", std::to_string(variables.size()));
    for (std::size_t d = 0; d < variables.size(); ++d) kv.set("var." + std::to_string(d), variables[d]);
    if (norm) {
      kv.set("norm.horizon", io::format_double(norm->horizon));
      for (std::size_t d = 0; d < norm->num_vars(); ++d) {
        const std::string p = "norm." + std::to_string(d);
        kv.set(p + ".mean", io::format_double(norm->mean[d]));
        kv.set(p + ".std", io::format_double(norm->std[d]));
        kv.set(p + ".seen", norm->seen[d] ? "1" : "0");
      }
    }
    for (const auto& [k, v] : attributes) kv.set("attr." + k, v);
    return kv;
  }

  static Manifest from_kv(const io::KeyValueFile& kv) {
    if (!kv.contains("format") || kv.get("format") != "ivpvae-manifest") throw DataError("not a dataset manifest");
    if (kv.get("version") != "1") throw DataError("unsupported manifest version '" + kv.get("version") + "'");
    Manifest m;
    const auto D = static_cast<std::size_t>(kv.get_double("num_vars"));
    for (std::size_t d = 0; d < D; ++d) m.variables.push_back(kv.get("var." + std::to_string(d)));
    if (kv.contains("norm.horizon")) {
      NormStats st;
      st.horizon = kv.get_double("norm.horizon");
      for (std::size_t d = 0; d < D; ++d) {
        const std::string p = "norm." + std::to_string(d);
        st.mean.push_back(kv.get_double(p + ".mean"));
        st.std.push_back(kv.get_double(p + ".std"));
        st.seen.push_back(kv.get(p + ".seen") == "1");
      }
      m.norm = st;
    }
    for (const auto& [k, v] : kv.entries())
      if (k.starts_with("attr.")) m.attributes.emplace_back(k.substr(5), v);
    return m;
  }

  std::string attribute(const std::string& key, const std::string& fallback = "") const {
    for (const auto& [k, v] : attributes)
      if (k == key) return v;
    return fallback;
  }

  void save(const std::filesystem::path& path) const { io::atomic_write(path, to_kv().str()); }
  static Manifest load(const std::filesystem::path& path) { return from_kv(io::KeyValueFile::load(path)); }

  bool operator==(const Manifest&) const = default;
};

/// `data.csv` -> `data.csv.manifest`.
inline std::filesystem::path manifest_path_for(const std::filesystem::path& csv) {
  return csv.string() + ".manifest";
}

/// Names present in one list but not the other, or in a different position.
inline std::vector<std::string> variable_mismatches(const std::vector<std::string>& expected,
                                                    const std::vector<std::string>& actual) {
  std::vector<std::string> out;
  const std::size_t n = std::max(expected.size(), actual.size());
  for (std::size_t i = 0; i < n; ++i) {
    const std::string e = i < expected.size() ? expected[i] : "<none>";
    const std::string a = i < actual.size() ? actual[i] : "<none>";
    if (e != a) out.push_back("#" + std::to_string(i) + " expected '" + e + "' got '" + a + "'");
  }
  return out;
}

}  // namespace ivpvae::data
