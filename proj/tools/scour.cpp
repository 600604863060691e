// scour: command-line driver for the bridge-scour early-warning workflow.
//
//   scour [--config PATH] [--seed N] [--out DIR] [--jobs N] <subcommand> [--set section.key=value ...]
//
// Each subcommand reads the artifacts of earlier stages from DIR and writes its own into
// DIR/<subcommand>/, together with the resolved configuration (config.echo).

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "scour/config.hpp"
#include "scour/earlywarn.hpp"
#include "scour/harness.hpp"
#include "scour/ingest.hpp"
#include "scour/neural/snapshot.hpp"
#include "scour/preprocess.hpp"
#include "scour/svg.hpp"
#include "scour/synth.hpp"

namespace fs = std::filesystem;
using namespace scour;

namespace {

struct Context {
  RunConfig cfg;
  fs::path out;
  int jobs = 1;
};

fs::path stage_dir(const Context& ctx, const std::string& stage) {
  const auto dir = ctx.out / stage;
  fs::create_directories(dir);
  auto echo = csv::open_output((dir / "config.echo").string());
  ctx.cfg.write(echo);
  return dir;
}

fs::path require(const Context& ctx, const std::string& stage, const std::string& file) {
  const auto p = ctx.out / stage / file;
  if (!fs::exists(p)) throw Error("missing-artifact", "missing " + p.string() + "; run " + stage + " first");
  return p;
}

void write_text(const fs::path& p, const std::string& text) {
  auto out = csv::open_output(p.string());
  out << text;
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

UniformSeries read_series(const fs::path& p) {
  auto in = csv::open_input(p.string());
  return read_series_csv(in);
}

/// Numeric CSV table keyed by header name.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t col(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw Error("parse", "column '" + name + "' not found");
  }
  std::vector<double> reals(const std::string& name) const {
    const auto c = col(name);
    std::vector<double> out;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto v = csv::parse_real(rows[r][c], r + 2);
      out.push_back(v ? *v : std::nan(""));
    }
    return out;
  }
};

Table read_table(const fs::path& p) {
  auto in = csv::open_input(p.string());
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw Error("parse", p.string() + " is empty");
  for (auto f : csv::split(line)) t.header.emplace_back(csv::trim(f));
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (csv::trim(line).empty()) continue;
    std::vector<std::string> row;
    for (auto f : csv::split(line)) row.emplace_back(csv::trim(f));
    if (row.size() != t.header.size()) throw ParseError(lineno, p.string() + ": wrong field count");
    t.rows.push_back(std::move(row));
  }
  return t;
}

Dataset load_dataset(const Context& ctx, FeatureCombo combo, const WindowSpec& window) {
  const auto series = read_series(require(ctx, "preprocess", "series.csv"));
  return prepare_dataset(series, combo, window, ctx.cfg.test_steps(), ctx.cfg.val_steps());
}

// ---------------------------------------------------------------------------

int cmd_synth(const Context& ctx) {
  const auto spec = ctx.cfg.synth();
  const auto dir = stage_dir(ctx, "synth");
  const auto out = generate(spec);
  {
    auto f = csv::open_output((dir / "raw.csv").string());
    write_raw_csv(f, out.raw);
  }
  {
    auto f = csv::open_output((dir / "truth.csv").string());
    write_series_csv(f, out.truth);
  }
  std::ostringstream r;
  r << "steps = " << out.truth.size() << "\nraw_readings = " << out.raw.size() << "\nfloods = " << out.floods.size() << '\n';
  for (const auto& [s, n] : out.outliers) r << "outliers." << to_string(s) << " = " << n << '\n';
  write_text(dir / "report.txt", r.str());
  std::cout << "synth: " << out.truth.size() << " hourly steps, " << out.raw.size() << " raw readings -> " << dir.string() << '\n';
  return 0;
}

int cmd_ingest(const Context& ctx) {
  std::string input = ctx.cfg.str("ingest.input");
  if (input.empty()) input = require(ctx, "synth", "raw.csv").string();
  if (!fs::exists(input)) throw Error("missing-artifact", "input file " + input + " not found");
  const auto schema = read_schema(input);
  auto readings = parse_csv(input, schema, ctx.cfg.units());
  if (readings.empty()) throw Error("ingest", "no readings in " + input);
  const auto& bias_path = ctx.cfg.str("ingest.bias_table");
  if (!bias_path.empty()) {
    auto in = csv::open_input(bias_path);
    readings = apply_bias_shifts(std::move(readings), BiasShiftTable::parse(in));
  }
  TimePoint lo = readings.front().timestamp, hi = lo;
  for (const auto& r : readings) {
    lo = std::min(lo, r.timestamp);
    hi = std::max(hi, r.timestamp);
  }
  const TimePoint origin = std::chrono::floor<std::chrono::hours>(lo);
  const auto n = static_cast<std::size_t>((hi - origin) / kHour) + 1;
  const auto rg = regrid_hourly(readings, origin, n);

  const auto dir = stage_dir(ctx, "ingest");
  {
    auto f = csv::open_output((dir / "series.csv").string());
    write_series_csv(f, rg.series);
  }
  std::ostringstream r;
  r << "readings = " << readings.size() << "\nsteps = " << n << "\norigin = " << format_timestamp(origin) << '\n';
  for (const auto& [s, ch] : rg.series.channels) {
    r << "present." << to_string(s) << " = " << std::count_if(ch.begin(), ch.end(), [](const auto& v) { return v.has_value(); }) << '\n';
  }
  write_text(dir / "report.txt", r.str());
  std::cout << "ingest: " << readings.size() << " readings on " << n << " hourly steps -> " << dir.string() << '\n';
  return 0;
}

int cmd_preprocess(const Context& ctx) {
  const auto spec = ctx.cfg.preprocess();
  const auto raw = read_series(require(ctx, "ingest", "series.csv"));
  const auto pp = preprocess(raw, spec);
  const auto dir = stage_dir(ctx, "preprocess");
  {
    auto f = csv::open_output((dir / "series.csv").string());
    write_series_csv(f, pp.series);
  }
  std::ostringstream r;
  for (const auto& [s, n] : pp.report.median_replaced) r << "median_changed." << to_string(s) << " = " << n << '\n';
  for (const auto& [s, n] : pp.report.imputed) r << "imputed." << to_string(s) << " = " << n << '\n';
  for (const auto& [s, n] : pp.report.trimmed) r << "trimmed." << to_string(s) << " = " << n << '\n';
  r << "segments =";
  for (const auto& seg : pp.report.segments) r << ' ' << format_timestamp(raw.time_at(seg.begin)) << '/' << seg.size();
  r << '\n';
  write_text(dir / "report.txt", r.str());
  std::cout << "preprocess: " << pp.report.segments.size() << " segments -> " << dir.string() << '\n';
  return 0;
}

std::string metrics_line(const std::string& split, const neural::LossMetrics& m, const NormStats& norm) {
  return split + ".sonar_mae = " + fmt(m.mae[0] * norm.std[0]) + "\n" + split + ".stage_mae = " + fmt(m.mae[1] * norm.std[1]) + "\n";
}

int cmd_train(const Context& ctx) {
  const auto config = ctx.cfg.model();
  const auto ds = load_dataset(ctx, config.combo, config.window);
  const auto dir = stage_dir(ctx, "train");
  auto tm = neural::train(config, ds.windows.train, ds.windows.validation);
  neural::write_snapshot((dir / "model.snap").string(), tm.model);
  {
    auto f = csv::open_output((dir / "history.csv").string());
    f << "epoch,train_loss,val_loss,train_sonar_mae,train_stage_mae,val_sonar_mae,val_stage_mae\n";
    for (const auto& h : tm.history) {
      f << h.epoch << ',' << csv::format_real(h.train_loss) << ',' << csv::format_real(h.val_loss) << ','
        << csv::format_real(h.train_mae[0] * ds.norm.std[0]) << ',' << csv::format_real(h.train_mae[1] * ds.norm.std[1]) << ','
        << csv::format_real(h.val_mae[0] * ds.norm.std[0]) << ',' << csv::format_real(h.val_mae[1] * ds.norm.std[1]) << '\n';
    }
  }
  std::ostringstream r;
  r << "config_code = " << encode_config(config) << "\nstopped_epoch = " << tm.stopped_epoch << "\nbest_epoch = " << tm.best_epoch << '\n';
  r << metrics_line("validation", neural::evaluate(tm.model, ds.windows.validation), ds.norm);
  r << metrics_line("test", neural::evaluate(tm.model, ds.windows.test), ds.norm);
  write_text(dir / "metrics.txt", r.str());
  std::cout << "train: " << encode_config(config) << " stopped at epoch " << tm.stopped_epoch << " -> " << dir.string() << '\n';
  return 0;
}

int cmd_gridsearch(const Context& ctx) {
  const auto grid = ctx.cfg.grid();
  require(ctx, "preprocess", "series.csv");
  const auto series = read_series(ctx.out / "preprocess" / "series.csv");
  std::map<std::tuple<FeatureCombo, std::size_t, std::size_t>, Dataset> cache;
  DatasetProvider provider = [&](FeatureCombo c, const WindowSpec& w) -> const Dataset& {
    const auto key = std::make_tuple(c, w.input_width, w.label_width);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, prepare_dataset(series, c, w, ctx.cfg.test_steps(), ctx.cfg.val_steps())).first;
    return it->second;
  };
  const auto dir = stage_dir(ctx, "gridsearch");
  GridOptions opt;
  opt.results_path = (dir / "results.csv").string();
  opt.jobs = ctx.jobs;
  opt.base_seed = ctx.cfg.unsigned_integer("run.seed");
  opt.on_record = [](const RunRecord& r) {
    if (r.split != "validation") {
      if (r.split == "failed") std::cout << "  " << r.code << " rep " << r.repetition << ": failed\n" << std::flush;
      return;
    }
    std::cout << "  " << r.code << " rep " << r.repetition << ": val sonar MAE " << fmt(r.sonar_mae) << '\n' << std::flush;
  };
  const auto outcome = run_grid(grid, provider, opt);

  {
    auto f = csv::open_output((dir / "cells.csv").string());
    f << "config_code,runs,failed";
    for (const char* split : {"val", "test"}) {
      for (const char* feat : {"sonar", "stage"}) {
        for (const char* st : {"mean", "std", "q1", "median", "q3"}) f << ',' << split << '_' << feat << '_' << st;
      }
    }
    f << '\n';
    for (const auto& c : outcome.cells) {
      f << '"' << c.code << "\"," << c.repetitions.size() << ',' << c.failed;
      for (const auto* s : {&c.validation.sonar, &c.validation.stage, &c.test.sonar, &c.test.stage}) {
        for (double v : {s->mean, s->stddev, s->q1, s->median, s->q3}) f << ',' << csv::format_real(v);
      }
      f << '\n';
    }
  }
  write_text(dir / "box_sonar.svg", grid_box_plot(outcome.cells, 0));
  write_text(dir / "box_stage.svg", grid_box_plot(outcome.cells, 1));
  const auto& best = select_best(outcome.cells);
  write_text(dir / "best.txt", best.code + "\n");
  std::cout << "gridsearch: " << outcome.cells.size() << " cells, " << outcome.new_runs << " new runs; best " << best.code
            << " (val sonar MAE " << fmt(best.validation.sonar.mean) << ") -> " << dir.string() << '\n';
  return 0;
}

neural::ModelConfig ensemble_config(const Context& ctx) {
  auto config = ctx.cfg.model();
  const auto best = ctx.out / "gridsearch" / "best.txt";
  if (ctx.cfg.boolean("ensemble.use_grid_best") && fs::exists(best)) {
    std::ifstream in(best);
    std::string code;
    std::getline(in, code);
    config = decode_config(std::string(csv::trim(code)), config);
  }
  return config;
}

int cmd_forecast(const Context& ctx) {
  const auto config = ensemble_config(ctx);
  const auto k = ctx.cfg.integer("ensemble.members");
  const auto stride = ctx.cfg.integer("forecast.origin_stride");
  if (stride < 1) throw ConfigError("forecast.origin_stride", "must be >= 1");
  const auto ds = load_dataset(ctx, config.combo, config.window);
  const auto dir = stage_dir(ctx, "forecast");
  fs::remove_all(dir / "members");

  EnsembleOptions eo;
  eo.snapshot_dir = (dir / "members").string();
  eo.jobs = ctx.jobs;
  eo.base_seed = ctx.cfg.unsigned_integer("run.seed");
  auto ensemble = train_ensemble(config, ds, static_cast<int>(k), eo);
  auto models = ensemble.models();

  const auto rf = rolling_forecast(models, ds, static_cast<std::size_t>(stride));
  if (rf.origins.empty()) throw Error("forecast", "test split holds no complete forecast window");
  const auto names = combo_labels(ds.combo);
  {
    auto f = csv::open_output((dir / "forecast.csv").string());
    f << "origin,step,feature,mean_m,lb_m,ub_m,actual_m\n";
    for (std::size_t o = 0; o < rf.origins.size(); ++o) {
      const auto b = band(rf.predictions[o]);
      const auto t0 = format_timestamp(ds.physical->time_at(rf.origins[o]));
      for (Eigen::Index s = 0; s < b.mean.rows(); ++s) {
        for (Eigen::Index c = 0; c < b.mean.cols(); ++c) {
          f << t0 << ',' << s + 1 << ',' << names[static_cast<std::size_t>(c)] << ',' << csv::format_real(b.mean(s, c)) << ','
            << csv::format_real(b.lower(s, c)) << ',' << csv::format_real(b.upper(s, c)) << ','
            << csv::format_real(rf.actuals[o](s, c)) << '\n';
        }
      }
    }
  }
  const auto trace = display_trace(rf);
  {
    auto f = csv::open_output((dir / "display.csv").string());
    f << "timestamp,hours";
    for (const auto& n : names) f << ',' << n << "_actual," << n << "_mean," << n << "_lb," << n << "_ub";
    f << '\n';
    for (std::size_t i = 0; i < trace.index.size(); ++i) {
      f << format_timestamp(ds.physical->time_at(trace.index[i])) << ',' << trace.index[i];
      for (std::size_t c = 0; c < kLabelFeatures; ++c) {
        const auto& b = trace.band[i][c];
        f << ',' << csv::format_real(trace.actual[i][c]) << ',' << csv::format_real(b.mean) << ',' << csv::format_real(b.lower)
          << ',' << csv::format_real(b.upper);
      }
      f << '\n';
    }
  }
  std::vector<double> bed;
  for (const auto& a : trace.actual) bed.push_back(a[kSonar]);
  const double depth = max_scour_depth(bed);
  if (!(depth > 0.0)) throw Error("forecast", "test bed elevation never drops; max scour depth is zero");
  const auto es = summarize_errors(rf, depth, config.window.label_width);
  {
    auto f = csv::open_output((dir / "summary.csv").string());
    f << "bridge,sonar_mae_m,stage_mae_m,max_scour_depth_m,scour_error_pct,trough_mean_error_m,trough_lb_error_m,"
         "peak_mean_error_m,peak_ub_error_m,origins,members,skipped_origins\n";
    f << ctx.cfg.str("run.bridge") << ',' << fmt(es.sonar_mae) << ',' << fmt(es.stage_mae) << ',' << fmt(es.max_scour_depth) << ','
      << fmt(es.scour_error_pct, 2) << ',' << fmt(es.max_trough_mean_error) << ',' << fmt(es.max_trough_lb_error) << ','
      << fmt(es.max_peak_mean_error) << ',' << fmt(es.max_peak_ub_error) << ',' << rf.origins.size() << ',' << rf.members() << ','
      << rf.skipped << '\n';
  }

  const auto latest = latest_forecast(models, ds);
  {
    auto f = csv::open_output((dir / "latest_members.csv").string());
    f << "member,step,timestamp,sonar_m,stage_m\n";
    for (std::size_t m = 0; m < latest.members.size(); ++m) {
      for (Eigen::Index s = 0; s < latest.members[m].rows(); ++s) {
        f << m << ',' << s + 1 << ',' << format_timestamp(latest.start + kHour * static_cast<long>(s)) << ','
          << csv::format_real(latest.members[m](s, 0)) << ',' << csv::format_real(latest.members[m](s, 1)) << '\n';
      }
    }
  }
  write_text(dir / "latest.txt", "start = " + format_timestamp(latest.start) + "\ndatum_m = " + csv::format_real(latest.datum) +
                                     "\nconfig_code = " + encode_config(config) + "\n");
  std::cout << "forecast: " << ensemble.members.size() << " members (" << encode_config(config) << "), " << rf.origins.size()
            << " test origins, sonar MAE " << fmt(es.sonar_mae) << " m, scour error " << fmt(es.scour_error_pct, 1) << "% -> "
            << dir.string() << '\n';
  return 0;
}

int cmd_alert(const Context& ctx) {
  const auto spec = ctx.cfg.alert();
  const auto members_path = require(ctx, "forecast", "latest_members.csv");
  std::map<std::string, std::string> meta;
  {
    std::ifstream in(require(ctx, "forecast", "latest.txt"));
    std::string line;
    while (std::getline(in, line)) {
      const auto eq = line.find('=');
      if (eq != std::string::npos) {
        meta[std::string(csv::trim(std::string_view(line).substr(0, eq)))] = std::string(csv::trim(std::string_view(line).substr(eq + 1)));
      }
    }
  }
  if (!meta.contains("datum_m") || !meta.contains("start")) throw Error("parse", "latest.txt lacks datum_m/start");
  const auto t = read_table(members_path);
  const auto member = t.reals("member");
  const auto sonar = t.reals("sonar_m");
  std::map<int, double> min_bed;
  std::size_t steps = 0;
  for (std::size_t i = 0; i < member.size(); ++i) {
    const int m = static_cast<int>(member[i]);
    auto [it, inserted] = min_bed.emplace(m, sonar[i]);
    if (!inserted) it->second = std::min(it->second, sonar[i]);
    if (m == 0) ++steps;
  }
  const double datum = std::stod(meta["datum_m"]);
  ScourDistribution dist;
  dist.datum = datum;
  for (const auto& [m, b] : min_bed) dist.samples.push_back(datum - b);
  const auto start = parse_timestamp(meta["start"]);
  const auto report = build_alert(dist, spec, start, start + kHour * static_cast<long>(steps ? steps - 1 : 0));

  const auto dir = stage_dir(ctx, "alert");
  nlohmann::ordered_json j;
  j["window_start"] = format_timestamp(report.window_start);
  j["window_end"] = format_timestamp(report.window_end);
  j["members"] = report.distribution.samples.size();
  j["datum_m"] = datum;
  j["max_scour_samples_m"] = report.distribution.samples;
  j["mean_max_scour_m"] = report.distribution.mean();
  j["exceedance"] = nlohmann::ordered_json::array();
  for (const auto& [thr, p] : report.exceedance) j["exceedance"].push_back({{"threshold_m", thr}, {"probability", p}});
  j["design_scour_m"] = report.design_scour;
  j["target_exceedance"] = spec.target_exceedance;
  j["embedment_m"] = spec.embedment_m;
  j["residual_embedment_m"] = report.residual_embedment;
  j["alert_threshold_m"] = report.alert_threshold;
  j["alert_probability"] = report.alert_probability;
  j["level"] = to_string(report.level);
  write_text(dir / "alert.json", j.dump(2) + "\n");

  std::cout << "alert: " << to_string(report.level) << " for " << format_timestamp(report.window_start) << " .. "
            << format_timestamp(report.window_end) << '\n';
  for (const auto& [thr, p] : report.exceedance) std::cout << "  P(max scour > " << fmt(thr, 2) << " m) = " << fmt(p, 3) << '\n';
  std::cout << "  design scour (" << fmt(100 * spec.target_exceedance, 0) << "% exceedance) " << fmt(report.design_scour, 3)
            << " m, residual embedment " << fmt(report.residual_embedment, 3) << " m -> " << dir.string() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// report

void series_charts(const Context& ctx, const fs::path& dir) {
  const auto pre = read_series(require(ctx, "preprocess", "series.csv"));
  std::optional<UniformSeries> raw;
  if (fs::exists(ctx.out / "ingest" / "series.csv")) raw = read_series(ctx.out / "ingest" / "series.csv");
  for (Sensor s : {Sensor::sonar, Sensor::stage}) {
    if (!pre.has(s)) continue;
    svg::Chart chart(std::string(to_string(s)) + " readings", "days since " + format_timestamp(pre.origin), "elevation (m)");
    auto line = [&](const UniformSeries& u, const std::string& color, const std::string& label) {
      svg::Line l;
      l.color = color;
      l.label = label;
      const auto& ch = u.channel(s);
      const double offset = static_cast<double>((u.origin - pre.origin).count()) / 86400.0;
      for (std::size_t i = 0; i < ch.size(); ++i) {
        l.x.push_back(offset + static_cast<double>(i) / 24.0);
        l.y.push_back(ch[i] ? *ch[i] : std::nan(""));
      }
      chart.add(std::move(l));
    };
    if (raw && raw->has(s)) line(*raw, "#aaaaaa", "raw");
    line(pre, "#1f77b4", "processed");
    write_text(dir / ("series_" + std::string(to_string(s)) + ".svg"), chart.render());
  }
}

void history_chart(const Context& ctx, const fs::path& dir) {
  const auto p = ctx.out / "train" / "history.csv";
  if (!fs::exists(p)) return;
  const auto t = read_table(p);
  svg::Chart chart("training history", "epoch", "MSE (standardized)");
  chart.add(svg::Line{t.reals("epoch"), t.reals("train_loss"), "#1f77b4", "train", false});
  chart.add(svg::Line{t.reals("epoch"), t.reals("val_loss"), "#ff7f0e", "validation", false});
  write_text(dir / "history.svg", chart.render());
}

void grid_charts(const Context& ctx, const fs::path& dir) {
  const auto p = ctx.out / "gridsearch" / "results.csv";
  if (!fs::exists(p)) return;
  const auto records = read_results(p.string());
  std::vector<neural::ModelConfig> cells;
  std::set<std::string> seen;
  for (const auto& r : records) {
    if (seen.insert(r.code).second) cells.push_back(decode_config(r.code, ctx.cfg.model()));
  }
  const auto results = collect_cells(cells, records);
  write_text(dir / "box_sonar.svg", grid_box_plot(results, 0));
  write_text(dir / "box_stage.svg", grid_box_plot(results, 1));
}

void forecast_charts(const Context& ctx, const fs::path& dir) {
  const auto p = ctx.out / "forecast" / "display.csv";
  if (!fs::exists(p)) return;
  const auto t = read_table(p);
  auto hours = t.reals("hours");
  for (auto& h : hours) h /= 24.0;
  for (const char* f : {"sonar", "stage"}) {
    const std::string n = f;
    svg::Chart chart(n + " forecast: ensemble mean and 95% band", "days", "elevation (m)");
    chart.add(svg::Band{hours, t.reals(n + "_lb"), t.reals(n + "_ub"), "#1f77b4", 0.25, "95% band"});
    chart.add(svg::Line{hours, t.reals(n + "_actual"), "#000000", "actual", false});
    chart.add(svg::Line{hours, t.reals(n + "_mean"), "#d62728", "mean", true});
    write_text(dir / ("forecast_" + n + ".svg"), chart.render());
  }
}

int cmd_report(const Context& ctx) {
  require(ctx, "preprocess", "series.csv");
  const auto dir = stage_dir(ctx, "report");
  series_charts(ctx, dir);
  history_chart(ctx, dir);
  grid_charts(ctx, dir);
  forecast_charts(ctx, dir);

  std::ostringstream md;
  const auto summary = ctx.out / "forecast" / "summary.csv";
  if (fs::exists(summary)) {
    const auto t = read_table(summary);
    md << "| Bridge | Sonar MAE-m | Stage MAE-m | Max Scour Depth-m | Scour Error-% |\n|---|---|---|---|---|\n";
    for (const auto& r : t.rows) {
      md << "| " << r[t.col("bridge")] << " | " << r[t.col("sonar_mae_m")] << " | " << r[t.col("stage_mae_m")] << " | "
         << r[t.col("max_scour_depth_m")] << " | " << r[t.col("scour_error_pct")] << " |\n";
    }
    md << "\n| Bridge | Mean Error Scour (m) | LB Error Scour (m) | Mean Error Filling (m) | UB Error Filling (m) |\n"
          "|---|---|---|---|---|\n";
    for (const auto& r : t.rows) {
      md << "| " << r[t.col("bridge")] << " | " << r[t.col("trough_mean_error_m")] << " | " << r[t.col("trough_lb_error_m")]
         << " | " << r[t.col("peak_mean_error_m")] << " | " << r[t.col("peak_ub_error_m")] << " |\n";
    }
  } else {
    md << "No forecast summary; run forecast first for the error tables.\n";
  }
  const auto alert = ctx.out / "alert" / "alert.json";
  if (fs::exists(alert)) {
    std::ifstream in(alert);
    const auto j = nlohmann::json::parse(in);
    md << "\nAlert level **" << j["level"].get<std::string>() << "** for " << j["window_start"].get<std::string>() << " .. "
       << j["window_end"].get<std::string>() << "\n\n| Threshold (m) | P(max scour > threshold) |\n|---|---|\n";
    for (const auto& e : j["exceedance"]) md << "| " << fmt(e["threshold_m"].get<double>(), 2) << " | " << fmt(e["probability"].get<double>(), 3) << " |\n";
  }
  write_text(dir / "summary.md", md.str());
  std::cout << "report -> " << dir.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bridge-scour early warning: synthetic data, preprocessing, LSTM training, ensemble forecasts and alerts"};
  app.require_subcommand(1, 1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "scour_out";
  std::optional<int> jobs;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "configuration file (INI sections of key = value)")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "global seed (run.seed)");
  app.add_option("--out", out_dir, "artifact directory")->capture_default_str();
  app.add_option("--jobs", jobs, "parallel training runs (run.jobs)")->check(CLI::PositiveNumber);

  const std::vector<std::pair<std::string, std::function<int(const Context&)>>> commands = {
      {"synth", cmd_synth},         {"ingest", cmd_ingest}, {"preprocess", cmd_preprocess}, {"train", cmd_train},
      {"gridsearch", cmd_gridsearch}, {"forecast", cmd_forecast}, {"alert", cmd_alert}, {"report", cmd_report}};
  const std::map<std::string, std::string> help = {
      {"synth", "generate synthetic raw readings and ground truth"},
      {"ingest", "parse sensor CSV, apply bias shifts, regrid hourly"},
      {"preprocess", "outlier removal, imputation and filtering"},
      {"train", "train one model from the [model] section"},
      {"gridsearch", "repeated training over the [grid] axes"},
      {"forecast", "train the ensemble and forecast the test split and the next window"},
      {"alert", "scour-depth exceedance and alert level for the latest forecast"},
      {"report", "SVG charts and summary tables"}};
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, fn] : commands) {
    auto* sub = app.add_subcommand(name, help.at(name));
    sub->add_option("--set", overrides, "override a config key, section.key=value")->take_all();
    subs[name] = sub;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error[usage]: " << e.what() << '\n';
    return 2;
  }

  try {
    Context ctx;
    if (!config_path.empty()) ctx.cfg.load(config_path);
    for (const auto& o : overrides) ctx.cfg.apply_override(o);
    if (seed) ctx.cfg.set("run.seed", std::to_string(*seed));
    if (jobs) ctx.cfg.set("run.jobs", std::to_string(*jobs));
    ctx.jobs = static_cast<int>(ctx.cfg.integer("run.jobs"));
    if (ctx.jobs < 1) throw ConfigError("run.jobs", "must be >= 1");
    ctx.cfg.unsigned_integer("run.seed");
    ctx.out = out_dir;
    for (const auto& [name, fn] : commands) {
      if (subs[name]->parsed()) return fn(ctx);
    }
  } catch (const Error& e) {
    std::cerr << "error[" << e.code() << "]: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
