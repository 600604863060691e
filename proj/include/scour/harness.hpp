#pragma once

// Hyper-parameter grid search with repeated seeded training, resumable CSV results,
// best-configuration selection and ensemble retraining.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "scour/csv.hpp"
#include "scour/dataset.hpp"
#include "scour/neural/snapshot.hpp"
#include "scour/neural/train.hpp"
#include "scour/stats.hpp"
#include "scour/svg.hpp"

namespace scour {

using neural::ModelConfig;
using neural::Variant;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of repetition (or ensemble member) r.
inline std::uint64_t repetition_seed(std::uint64_t base_seed, std::size_t r) { return splitmix64(base_seed + r); }

// ---------------------------------------------------------------------------
// Config codes: [features]-[model]-[window]-[units]-[dropout %]

inline std::string encode_config(const ModelConfig& c) {
  c.validate();
  std::ostringstream o;
  o << to_string(c.combo) << '-' << to_string(c.variant) << "-(" << c.window.input_width << ',' << c.window.label_width
    << ")-" << c.units << '-' << std::lround(c.dropout * 100.0);
  return o.str();
}

/// Parses a config code; fields not in the code come from `base`.
inline ModelConfig decode_config(const std::string& code, ModelConfig base = {}) {
  auto fail = [&] { return ParameterError("malformed config code '" + code + "'"); };
  const auto open = code.find("-(");
  const auto close = code.find(")-", open == std::string::npos ? 0 : open);
  if (open == std::string::npos || close == std::string::npos) throw fail();
  const auto head = code.substr(0, open);
  const auto dash = head.find('-');
  if (dash == std::string::npos) throw fail();
  const auto window = code.substr(open + 2, close - open - 2);
  const auto tail = code.substr(close + 2);
  const auto comma = window.find(',');
  const auto dash2 = tail.find('-');
  if (comma == std::string::npos || dash2 == std::string::npos) throw fail();
  try {
    base.combo = combo_from_string(head.substr(0, dash));
    base.variant = neural::variant_from_string(head.substr(dash + 1));
    std::size_t pos = 0;
    base.window.input_width = std::stoul(window.substr(0, comma), &pos);
    base.window.label_width = std::stoul(window.substr(comma + 1));
    base.units = std::stoi(tail.substr(0, dash2));
    base.dropout = std::stoi(tail.substr(dash2 + 1)) / 100.0;
  } catch (const std::logic_error&) {
    throw fail();
  }
  base.validate();
  return base;
}

// ---------------------------------------------------------------------------
// Grid

struct GridSpec {
  std::vector<FeatureCombo> combos{FeatureCombo::ss, FeatureCombo::ssy};
  std::vector<Variant> variants{Variant::single_shot, Variant::feedback, Variant::two_layer};
  std::vector<WindowSpec> windows{{336, 168}, {720, 168}, {720, 336}};
  std::vector<int> units{32, 64, 128, 256};
  std::vector<double> dropouts{0.0, 0.2};
  int repetitions = 20;
  ModelConfig base;  // optimizer, learning rate, epochs, patience, batch size ...

  void validate() const {
    if (combos.empty() || variants.empty() || windows.empty() || units.empty() || dropouts.empty()) {
      throw ParameterError("grid axes must be nonempty");
    }
    if (repetitions < 1) throw ParameterError("grid repetitions must be >= 1");
  }
};

/// Cells in axis order (combo, variant, window, units, dropout).
inline std::vector<ModelConfig> enumerate(const GridSpec& g) {
  g.validate();
  std::vector<ModelConfig> out;
  for (auto combo : g.combos) {
    for (auto variant : g.variants) {
      for (const auto& w : g.windows) {
        for (int u : g.units) {
          for (double d : g.dropouts) {
            ModelConfig c = g.base;
            c.combo = combo;
            c.variant = variant;
            c.window = w;
            c.units = u;
            c.dropout = d;
            c.validate();
            out.push_back(c);
          }
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Results file

struct RunRecord {
  std::string code;
  int repetition = 0;
  std::uint64_t seed = 0;
  std::string split;  // validation | test | failed
  double sonar_mae = 0.0;
  double stage_mae = 0.0;
  int stopped_epoch = 0;
  double wall_seconds = 0.0;
};

inline constexpr std::string_view kResultsHeader = "config_code,repetition,seed,split,sonar_mae,stage_mae,stopped_epoch,wall_seconds";

inline std::string format_record(const RunRecord& r) {
  char wall[32];
  std::snprintf(wall, sizeof wall, "%.3f", r.wall_seconds);
  std::ostringstream o;
  o << '"' << r.code << "\"," << r.repetition << ',' << r.seed << ',' << r.split << ',' << csv::format_real(r.sonar_mae) << ','
    << csv::format_real(r.stage_mae) << ',' << r.stopped_epoch << ',' << wall;
  return o.str();
}

inline std::vector<RunRecord> read_results(const std::string& path) {
  std::vector<RunRecord> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line)) return out;
  if (line != kResultsHeader) throw ParseError(1, "results header mismatch in " + path);
  while (std::getline(in, line)) {
    ++lineno;
    if (csv::trim(line).empty()) continue;
    // The config code is quoted because the window contains a comma.
    if (line.front() != '"') throw ParseError(lineno, "config_code must be quoted");
    const auto q = line.find('"', 1);
    if (q == std::string::npos || q + 1 >= line.size() || line[q + 1] != ',') throw ParseError(lineno, "unterminated config_code");
    const auto f = csv::split(std::string_view(line).substr(q + 2));
    if (f.size() != 7) throw ParseError(lineno, "expected 8 result columns");
    RunRecord r;
    r.code = line.substr(1, q - 1);
    try {
      r.repetition = std::stoi(std::string(f[0]));
      r.seed = std::stoull(std::string(f[1]));
      r.split = std::string(f[2]);
      r.stopped_epoch = std::stoi(std::string(f[5]));
    } catch (const std::logic_error&) {
      throw ParseError(lineno, "malformed integer field");
    }
    auto real = [&](std::string_view s) {
      if (csv::trim(s) == "nan") return std::nan("");
      const auto v = csv::parse_real(s, lineno);
      return v ? *v : std::nan("");
    };
    r.sonar_mae = real(f[3]);
    r.stage_mae = real(f[4]);
    r.wall_seconds = real(f[6]);
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cell statistics and selection

struct FeatureStats {
  stats::Summary sonar, stage;
};

struct CellResult {
  std::string code;
  ModelConfig config;
  std::vector<int> repetitions;  // successful repetitions, ascending
  std::vector<double> val_sonar, val_stage, test_sonar, test_stage;
  FeatureStats validation, test;
  int failed = 0;

  bool all_failed() const { return repetitions.empty(); }

  void recompute() {
    validation = {stats::summarize(val_sonar), stats::summarize(val_stage)};
    test = {stats::summarize(test_sonar), stats::summarize(test_stage)};
  }
};

inline std::vector<CellResult> collect_cells(const std::vector<ModelConfig>& cells, const std::vector<RunRecord>& records) {
  std::map<std::string, std::map<int, std::vector<const RunRecord*>>> by_code;
  for (const auto& r : records) by_code[r.code][r.repetition].push_back(&r);
  std::vector<CellResult> out;
  for (const auto& cfg : cells) {
    CellResult c;
    c.code = encode_config(cfg);
    c.config = cfg;
    for (const auto& [rep, rows] : by_code[c.code]) {
      const RunRecord* val = nullptr;
      const RunRecord* test = nullptr;
      for (const auto* r : rows) {
        if (r->split == "validation") val = r;
        if (r->split == "test") test = r;
      }
      if (val && test) {
        c.repetitions.push_back(rep);
        c.val_sonar.push_back(val->sonar_mae);
        c.val_stage.push_back(val->stage_mae);
        c.test_sonar.push_back(test->sonar_mae);
        c.test_stage.push_back(test->stage_mae);
      } else {
        ++c.failed;
      }
    }
    c.recompute();
    out.push_back(std::move(c));
  }
  return out;
}

/// Smallest mean validation MAE of the target feature; ties within 1e-9 go to the smaller std,
/// then the lexicographically smaller code. Cells where every run failed are ignored.
inline const CellResult& select_best(const std::vector<CellResult>& results, std::size_t target_feature = 0) {
  const CellResult* best = nullptr;
  auto stat = [&](const CellResult& c) -> const stats::Summary& {
    return target_feature == 0 ? c.validation.sonar : c.validation.stage;
  };
  for (const auto& c : results) {
    if (c.all_failed()) continue;
    if (!best) {
      best = &c;
      continue;
    }
    const auto& a = stat(c);
    const auto& b = stat(*best);
    bool better;
    if (std::abs(a.mean - b.mean) > 1e-9) {
      better = a.mean < b.mean;
    } else if (a.stddev != b.stddev) {
      better = a.stddev < b.stddev;
    } else {
      better = c.code < best->code;
    }
    if (better) best = &c;
  }
  if (!best) throw Error("grid", "no grid cell has a successful run");
  return *best;
}

// ---------------------------------------------------------------------------
// Worker pool

/// Runs task(i) for i in [0, n) on up to `jobs` threads; `done(i)` is called in index order from
/// a single thread at a time.
inline void run_ordered(std::size_t n, int jobs, const std::function<void(std::size_t)>& task,
                        const std::function<void(std::size_t)>& done) {
  const auto workers = static_cast<std::size_t>(std::clamp<int>(jobs, 1, static_cast<int>(std::max<std::size_t>(n, 1))));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      task(i);
      done(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex m;
  std::vector<char> finished(n, 0);
  std::size_t flushed = 0;
  std::exception_ptr error;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        task(i);
      } catch (...) {
        std::lock_guard lock(m);
        if (!error) error = std::current_exception();
        next.store(n);
        return;
      }
      std::lock_guard lock(m);
      finished[i] = 1;
      while (flushed < n && finished[flushed] && !error) {
        try {
          done(flushed);
        } catch (...) {
          error = std::current_exception();
          next.store(n);
        }
        ++flushed;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// Grid execution

using DatasetProvider = std::function<const Dataset&(FeatureCombo, const WindowSpec&)>;

struct GridOptions {
  std::string results_path;  // empty: keep results in memory only
  int jobs = 1;
  std::uint64_t base_seed = 0;
  neural::TrainOptions train;
  std::function<void(const RunRecord&)> on_record;
};

struct GridOutcome {
  std::vector<CellResult> cells;
  std::size_t new_runs = 0;
  std::vector<RunRecord> records;
};

inline GridOutcome run_grid(const GridSpec& grid, const DatasetProvider& datasets, const GridOptions& options = {}) {
  const auto cells = enumerate(grid);
  GridOutcome outcome;
  if (!options.results_path.empty()) outcome.records = read_results(options.results_path);

  std::set<std::pair<std::string, int>> done_runs;
  for (const auto& r : outcome.records) done_runs.insert({r.code, r.repetition});

  struct Task {
    const ModelConfig* config;
    std::string code;
    int repetition;
    const Dataset* data;
  };
  std::vector<Task> tasks;
  for (const auto& cfg : cells) {
    const auto code = encode_config(cfg);
    for (int r = 0; r < grid.repetitions; ++r) {
      if (done_runs.contains({code, r})) continue;
      tasks.push_back({&cfg, code, r, &datasets(cfg.combo, cfg.window)});
    }
  }

  std::ofstream out;
  if (!options.results_path.empty() && !tasks.empty()) {
    const bool fresh = !std::filesystem::exists(options.results_path) || std::filesystem::file_size(options.results_path) == 0;
    out.open(options.results_path, std::ios::app);
    if (!out) throw Error("io", "cannot write " + options.results_path);
    if (fresh) out << kResultsHeader << '\n';
  }

  std::vector<std::vector<RunRecord>> produced(tasks.size());
  run_ordered(
      tasks.size(), options.jobs,
      [&](std::size_t i) {
        const auto& t = tasks[i];
        ModelConfig cfg = *t.config;
        cfg.seed = repetition_seed(options.base_seed, static_cast<std::size_t>(t.repetition));
        const auto start = std::chrono::steady_clock::now();
        auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
        try {
          auto tm = neural::train(cfg, t.data->windows.train, t.data->windows.validation, options.train);
          const auto val = neural::evaluate(tm.model, t.data->windows.validation);
          const auto test = neural::evaluate(tm.model, t.data->windows.test);
          const double wall = elapsed();
          // Physical-unit MAE: standardized error times the training std of the feature.
          const auto& sd = t.data->norm.std;
          produced[i].push_back({t.code, t.repetition, cfg.seed, "validation", val.mae[0] * sd[0], val.mae[1] * sd[1], tm.stopped_epoch, wall});
          produced[i].push_back({t.code, t.repetition, cfg.seed, "test", test.mae[0] * sd[0], test.mae[1] * sd[1], tm.stopped_epoch, wall});
        } catch (const neural::DivergenceError&) {
          produced[i].push_back({t.code, t.repetition, cfg.seed, "failed", std::nan(""), std::nan(""), 0, elapsed()});
        }
      },
      [&](std::size_t i) {
        for (const auto& r : produced[i]) {
          if (out.is_open()) out << format_record(r) << '\n';
          if (options.on_record) options.on_record(r);
          outcome.records.push_back(r);
        }
        if (out.is_open()) out.flush();
        ++outcome.new_runs;
      });

  outcome.cells = collect_cells(cells, outcome.records);
  return outcome;
}

/// One box per cell of per-repetition MAE of a feature (0 sonar, 1 stage) on a split.
inline std::string grid_box_plot(const std::vector<CellResult>& cells, std::size_t feature, bool validation = true) {
  std::vector<svg::Box> boxes;
  for (const auto& c : cells) {
    if (c.all_failed()) continue;
    const auto& s = validation ? (feature == 0 ? c.validation.sonar : c.validation.stage)
                               : (feature == 0 ? c.test.sonar : c.test.stage);
    boxes.push_back({c.code, s});
  }
  const std::string name = feature == 0 ? "sonar" : "stage";
  return svg::box_plot(name + " MAE per configuration (" + (validation ? "validation" : "test") + ")", "MAE (m)", boxes);
}

// ---------------------------------------------------------------------------
// Ensembles

struct EnsembleOptions {
  std::string snapshot_dir;  // empty: no snapshots
  int jobs = 1;
  std::uint64_t base_seed = 0;
  std::vector<std::uint64_t> seeds;  // overrides derived seeds when nonempty
  neural::TrainOptions train;
};

struct TrainedEnsemble {
  ModelConfig config;
  std::vector<neural::TrainedModel> members;
  std::vector<std::uint64_t> seeds;         // of the successful members
  std::vector<std::uint64_t> failed_seeds;

  std::vector<neural::Model> models() const {
    std::vector<neural::Model> m;
    for (const auto& t : members) m.push_back(t.model);
    return m;
  }
};

inline std::string member_snapshot_name(std::size_t i) { return "member_" + std::to_string(i) + ".snap"; }

inline TrainedEnsemble train_ensemble(const ModelConfig& config, const Dataset& data, int k, const EnsembleOptions& options = {}) {
  if (k < 2) throw ParameterError("ensemble size must be >= 2");
  if (!options.seeds.empty() && options.seeds.size() != static_cast<std::size_t>(k)) {
    throw ParameterError("ensemble seed list must have one seed per member");
  }
  std::vector<std::optional<neural::TrainedModel>> runs(static_cast<std::size_t>(k));
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    seeds[i] = options.seeds.empty() ? repetition_seed(options.base_seed, i) : options.seeds[i];
  }
  run_ordered(
      seeds.size(), options.jobs,
      [&](std::size_t i) {
        ModelConfig cfg = config;
        cfg.seed = seeds[i];
        try {
          runs[i] = neural::train(cfg, data.windows.train, data.windows.validation, options.train);
        } catch (const neural::DivergenceError&) {
        }
      },
      [](std::size_t) {});

  TrainedEnsemble e;
  e.config = config;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (runs[i]) {
      e.members.push_back(std::move(*runs[i]));
      e.seeds.push_back(seeds[i]);
    } else {
      e.failed_seeds.push_back(seeds[i]);
    }
  }
  const auto needed = static_cast<std::size_t>(std::max(2, k / 2));
  if (e.members.size() < needed) {
    throw Error("ensemble", std::to_string(e.members.size()) + " of " + std::to_string(k) + " members trained; need " +
                                std::to_string(needed));
  }
  if (!options.snapshot_dir.empty()) {
    std::filesystem::create_directories(options.snapshot_dir);
    for (std::size_t i = 0; i < e.members.size(); ++i) {
      neural::write_snapshot((std::filesystem::path(options.snapshot_dir) / member_snapshot_name(i)).string(), e.members[i].model);
    }
  }
  return e;
}

/// Members member_0.snap, member_1.snap, ... in index order.
inline std::vector<neural::Model> load_ensemble(const std::string& dir) {
  std::vector<neural::Model> models;
  for (std::size_t i = 0;; ++i) {
    const auto p = std::filesystem::path(dir) / member_snapshot_name(i);
    if (!std::filesystem::exists(p)) break;
    models.push_back(neural::read_snapshot(p.string()));
  }
  return models;
}

}  // namespace scour
