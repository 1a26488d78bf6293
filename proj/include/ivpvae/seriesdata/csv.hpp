#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ivpvae/seriesdata/series.hpp"
#include "ivpvae/util/io.hpp"
#include "ivpvae/util/log.hpp"

namespace ivpvae::data {

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(io::trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

struct CsvRecord {
  double time;
  std::string variable;
  double value;
  std::size_t line;
};

}  // namespace detail

/// Parses long-format CSV text (`series_id,time,variable,value[,label]`).
/// Series keep their order of first appearance; variables are indexed in
/// lexicographic order.
inline Dataset parse_csv(std::string_view text, const std::string& origin = "<csv>") {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  std::size_t line_no = 0;
  auto next_line = [&](std::string_view& line) {
    while (!text.empty()) {
      const std::size_t nl = text.find('\n');
      line = io::trim(text.substr(0, nl));
      text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
      ++line_no;
      if (!line.empty()) return true;
    }
    return false;
  };
  auto where = [&](std::size_t line) { return origin + ":" + std::to_string(line) + ": "; };

  std::string_view line;
  if (!next_line(line)) throw DataError(origin + ": empty file (a header row is required)");
  const auto header = detail::split_fields(line);
  std::map<std::string, std::size_t, std::less<>> column;
  for (std::size_t i = 0; i < header.size(); ++i) column.emplace(std::string(header[i]), i);
  for (const char* required : {"series_id", "time", "variable", "value"}) {
    if (!column.contains(std::string_view(required))) {
      throw DataError(origin + ": missing required column '" + required + "'");
    }
  }
  const std::size_t c_id = column.find("series_id")->second, c_time = column.find("time")->second,
                    c_var = column.find("variable")->second, c_value = column.find("value")->second;
  const auto label_it = column.find("label");
  const bool has_label = label_it != column.end();

  std::vector<std::string> order;
  std::unordered_map<std::string, std::size_t> slot;
  std::vector<std::vector<detail::CsvRecord>> records;
  std::vector<std::optional<int>> labels;
  std::vector<std::size_t> label_lines;
  std::set<std::string> variables;

  while (next_line(line)) {
    const auto fields = detail::split_fields(line);
    if (fields.size() != header.size()) {
      throw DataError(where(line_no) + "expected " + std::to_string(header.size()) + " fields, got " +
                      std::to_string(fields.size()));
    }
    const std::string id(fields[c_id]);
    if (id.empty()) throw DataError(where(line_no) + "empty series_id");
    detail::CsvRecord rec{0.0, std::string(fields[c_var]), 0.0, line_no};
    if (rec.variable.empty()) throw DataError(where(line_no) + "empty variable name");
    if (!io::parse_double(fields[c_time], rec.time) || !std::isfinite(rec.time)) {
      throw DataError(where(line_no) + "non-numeric time '" + std::string(fields[c_time]) + "'");
    }
    if (!io::parse_double(fields[c_value], rec.value) || !std::isfinite(rec.value)) {
      throw DataError(where(line_no) + "non-numeric value '" + std::string(fields[c_value]) + "'");
    }
    std::optional<int> label;
    if (has_label && !fields[label_it->second].empty()) {
      const std::string_view l = fields[label_it->second];
      if (l != "0" && l != "1") throw DataError(where(line_no) + "label must be 0 or 1, got '" + std::string(l) + "'");
      label = l == "1" ? 1 : 0;
    }
    auto [it, inserted] = slot.emplace(id, order.size());
    if (inserted) {
      order.push_back(id);
      records.emplace_back();
      labels.push_back(label);
      label_lines.push_back(line_no);
    } else if (labels[it->second] != label) {
      throw DataError(where(line_no) + "label of series '" + id + "' differs from line " +
                      std::to_string(label_lines[it->second]));
    }
    variables.insert(rec.variable);
    records[it->second].push_back(std::move(rec));
  }
  if (order.empty()) throw DataError(origin + ": empty dataset (header only)");

  Dataset ds;
  ds.variables.assign(variables.begin(), variables.end());
  std::map<std::string, std::size_t> var_index;
  for (std::size_t i = 0; i < ds.variables.size(); ++i) var_index.emplace(ds.variables[i], i);
  const std::size_t D = ds.variables.size();

  for (std::size_t s = 0; s < order.size(); ++s) {
    auto& recs = records[s];
    std::stable_sort(recs.begin(), recs.end(), [](const auto& x, const auto& y) { return x.time < y.time; });
    IrregularSeries series;
    series.series_id = order[s];
    series.num_vars = D;
    series.label = labels[s];
    for (const auto& r : recs) {
      if (series.times.empty() || series.times.back() != r.time) {
        series.times.push_back(r.time);
        series.values.resize(series.values.size() + D, 0.0);
        series.mask.resize(series.mask.size() + D, 0);
      }
      const std::size_t at = (series.times.size() - 1) * D + var_index.at(r.variable);
      if (series.mask[at]) {
        warn(where(r.line) + "duplicate observation of '" + r.variable + "' at time " + io::format_double(r.time) +
             " in series '" + series.series_id + "'; keeping the later value");
      }
      series.values[at] = r.value;
      series.mask[at] = 1;
    }
    series.validate();
    ds.series.push_back(std::move(series));
  }
  return ds;
}

inline Dataset load_csv(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("dataset file '" + path.string() + "' does not exist");
  return parse_csv(io::read_file(path), path.string());
}

inline std::string to_csv(const Dataset& ds) {
  const bool any_label =
      std::any_of(ds.series.begin(), ds.series.end(), [](const IrregularSeries& s) { return s.label.has_value(); });
  auto check_name = [](const std::string& name, const char* what) {
    if (name.empty() || name.find_first_of(",\n\r") != std::string::npos) {
      throw DataError(std::string(what) + " '" + name + "' cannot be written to CSV");
    }
  };
  for (const auto& v : ds.variables) check_name(v, "variable name");
  std::string out = any_label ? "series_id,time,variable,value,label\n" : "series_id,time,variable,value\n";
  for (const auto& s : ds.series) {
    check_name(s.series_id, "series_id");
    if (s.num_vars != ds.num_vars()) throw DataError("series '" + s.series_id + "' has the wrong variable count");
    const std::string label = s.label ? std::to_string(*s.label) : std::string();
    for (std::size_t i = 0; i < s.length(); ++i) {
      for (std::size_t d = 0; d < s.num_vars; ++d) {
        if (!s.observed(i, d)) continue;
        out += s.series_id;
        out += ',';
        out += io::format_double(s.times[i]);
        out += ',';
        out += ds.variables[d];
        out += ',';
        out += io::format_double(s.value(i, d));
        if (any_label) {
          out += ',';
          out += label;
        }
        out += '\n';
      }
    }
  }
  return out;
}

inline void save_csv(const Dataset& ds, const std::filesystem::path& path) { io::atomic_write(path, to_csv(ds)); }

}  // namespace ivpvae::data
