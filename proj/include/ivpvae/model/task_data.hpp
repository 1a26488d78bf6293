#pragma once

#include <optional>
#include <vector>

#include "ivpvae/model/ivp_vae.hpp"
#include "ivpvae/seriesdata/series.hpp"

namespace ivpvae::model {

/// Model inputs for one split, and for forecasting the held-out targets of
/// the same series (index-aligned).
struct TaskData {
  std::vector<data::IrregularSeries> inputs;
  std::vector<data::IrregularSeries> targets;
  std::vector<std::string> ids;

  std::size_t size() const { return inputs.size(); }
};

/// Forecasting splits every series at `boundary` (inputs t <= boundary,
/// targets after it); the other tasks use whole series as input.
inline TaskData prepare_task_data(const data::Dataset& ds, Task task, double boundary) {
  TaskData td;
  for (const auto& s : ds.series) {
    td.ids.push_back(s.series_id);
    if (task != Task::forecast) {
      if (task == Task::classify && !s.label) throw DataError("series '" + s.series_id + "' has no label");
      td.inputs.push_back(s);
      continue;
    }
    auto w = data::split_at(s, boundary);
    if (w.input.length() == 0) throw DataError("series '" + s.series_id + "' has no observations in the input window");
    if (w.target.observed_count() == 0) {
      throw DataError("series '" + s.series_id + "' has no observations in the forecast window");
    }
    td.inputs.push_back(std::move(w.input));
    td.targets.push_back(std::move(w.target));
  }
  return td;
}

inline TaskBatch make_task_batch(const TaskData& td, const std::vector<std::size_t>& members) {
  std::vector<const data::IrregularSeries*> in, tg;
  for (std::size_t i : members) {
    in.push_back(&td.inputs.at(i));
    if (!td.targets.empty()) tg.push_back(&td.targets.at(i));
  }
  TaskBatch b{data::pad_batch(in, members), std::nullopt};
  if (!tg.empty()) b.target = data::pad_batch(tg, members);
  return b;
}

inline std::vector<TaskBatch> make_task_batches(const TaskData& td, std::size_t batch_size,
                                                std::optional<std::uint64_t> seed) {
  std::vector<TaskBatch> out;
  for (const auto& group : data::batch_indices(td.size(), batch_size, seed)) out.push_back(make_task_batch(td, group));
  return out;
}

}  // namespace ivpvae::model
