#pragma once

#include <filesystem>
#include <memory>
#include <sstream>
#include <string>

#include "ivpvae/model/ivp_vae.hpp"
#include "ivpvae/seriesdata/manifest.hpp"

namespace ivpvae::model {

/// Everything needed to run a trained model: configuration, the dataset
/// manifest it was trained against, and its parameters.
///
/// Text layout, version 1:
///   ivpvae-checkpoint 1
///   [config]    key=value lines of ModelConfig
///   [manifest]  key=value lines of the dataset manifest
///   [meta]      free key=value lines
///   [params]    one line per tensor: name rank dims... values...
/// Parameter values and real-valued config entries are hexadecimal floats,
/// so a save/load cycle is bit-exact and independent of byte order.
struct ModelBundle {
  ModelConfig config;
  data::Manifest manifest;
  io::KeyValueFile meta;
  std::unique_ptr<ParamStore> params;
  IvpVae model;

  static ModelBundle create(ModelConfig cfg, data::Manifest manifest, std::uint64_t seed) {
    ModelBundle b;
    b.config = std::move(cfg);
    b.manifest = std::move(manifest);
    b.params = std::make_unique<ParamStore>(seed);
    b.model = IvpVae(*b.params, b.config);
    return b;
  }
};

inline std::string serialize_checkpoint(const ModelBundle& b) {
  std::string out = "ivpvae-checkpoint 1\n[config]\n" + b.config.to_kv().str();
  out += "[manifest]\n" + b.manifest.to_kv().str();
  out += "[meta]\n" + b.meta.str();
  out += "[params]\nseed=" + std::to_string(b.params->seed()) + "\ncount=" + std::to_string(b.params->size()) + "\n";
  for (std::size_t i = 0; i < b.params->size(); ++i) {
    const Tensor& t = b.params->value(i);
    out += b.params->name(i) + " " + std::to_string(t.rank());
    for (std::size_t d : t.shape()) out += " " + std::to_string(d);
    for (double v : t.data()) out += " " + io::format_hex(v);
    out += "\n";
  }
  return out;
}

inline void save_checkpoint(const ModelBundle& b, const std::filesystem::path& path) {
  io::atomic_write(path, serialize_checkpoint(b));
}

inline ModelBundle parse_checkpoint(std::string_view text, const std::string& origin = "<checkpoint>") {
  auto fail = [&](const std::string& msg) { return DataError(origin + ": " + msg); };
  std::map<std::string, std::string> sections;
  std::string current;
  std::size_t pos = 0;
  bool header = false;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    if (!header) {
      if (line != "ivpvae-checkpoint 1") throw fail("not a version-1 checkpoint");
      header = true;
      continue;
    }
    if (line.size() > 2 && line.front() == '[' && line.back() == ']') {
      current = std::string(line.substr(1, line.size() - 2));
      sections[current];
      continue;
    }
    if (current.empty()) throw fail("content before the first section");
    sections[current] += std::string(line) + "\n";
  }
  for (const char* s : {"config", "manifest", "meta", "params"})
    if (!sections.contains(s)) throw fail(std::string("missing section [") + s + "]");

  ModelBundle b;
  try {
    b.config = ModelConfig::from_kv(io::KeyValueFile::parse(sections["config"], origin + " [config]"));
  } catch (const ConfigError& e) {
    throw fail(e.what());
  }
  b.manifest = data::Manifest::from_kv(io::KeyValueFile::parse(sections["manifest"], origin + " [manifest]"));
  b.meta = io::KeyValueFile::parse(sections["meta"], origin + " [meta]");

  std::istringstream params(sections["params"]);
  std::string line;
  std::uint64_t seed = 0;
  std::size_t count = 0;
  if (!std::getline(params, line) || !line.starts_with("seed=")) throw fail("missing parameter seed");
  seed = std::stoull(line.substr(5));
  if (!std::getline(params, line) || !line.starts_with("count=")) throw fail("missing parameter count");
  count = std::stoull(line.substr(6));
  b.params = std::make_unique<ParamStore>(seed);
  b.model = IvpVae(*b.params, b.config);
  if (count != b.params->size()) {
    throw fail("checkpoint holds " + std::to_string(count) + " tensors, the configured model has " +
               std::to_string(b.params->size()));
  }
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(params, line)) throw fail("truncated parameter list");
    std::istringstream ls(line);
    std::string name;
    std::size_t rank = 0;
    ls >> name >> rank;
    if (!ls || rank > 2) throw fail("malformed parameter line " + std::to_string(i));
    diff::Shape shape(rank);
    for (auto& d : shape) ls >> d;
    std::size_t idx = 0;
    try {
      idx = b.params->index(name);
    } catch (const ContractError&) {
      throw fail("unknown parameter '" + name + "'");
    }
    Tensor& dst = b.params->value(idx);
    if (shape != dst.shape()) {
      throw fail("parameter '" + name + "' has shape " + diff::to_string(shape) + ", expected " +
                 diff::to_string(dst.shape()));
    }
    std::string tok;
    for (double& v : dst.data()) {
      if (!(ls >> tok) || !io::parse_hex(tok, v)) throw fail("bad value in parameter '" + name + "'");
    }
    if (ls >> tok) throw fail("too many values in parameter '" + name + "'");
  }
  return b;
}

inline ModelBundle load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("checkpoint '" + path.string() + "' does not exist");
  return parse_checkpoint(io::read_file(path), path.string());
}

}  // namespace ivpvae::model
