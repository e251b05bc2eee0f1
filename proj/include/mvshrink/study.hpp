#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "mvshrink/backtest.hpp"
#include "mvshrink/rng.hpp"

// Resampling layer over the rolling backtest: draw random asset subsets from
// the universe, backtest each draw, aggregate certainty equivalents, Sharpe
// ratios and tail measures across draws, and run paired t tests on the
// per-draw certainty equivalents of each strategy pair. One cell per
// requested concentration (the estimation window is sized as p / c).

namespace mvshrink {

struct StudyConfig {
  std::vector<double> c_targets;  // empty: use base.window as the single cell
  BacktestConfig base;
  int subset_size = 0;  // 0 or p: the full universe, a single draw
  int num_draws = 1;
  std::uint64_t seed = 0;
  double trim = 0.10;
};

struct StrategyStudy {
  PerformanceReport report;
  int draws_used = 0;    // draws with enough realized days for measures
  int draws_dropped = 0;
  int total_gaps = 0;
};

struct PerDayRecord {
  double c = 0.0;
  int draw = 0;
  std::string date;
  std::string strategy;
  double value = 0.0;
};

struct StudyCell {
  double c_requested = 0.0;
  int window = 0;
  std::map<std::string, StrategyStudy> strategies;
  std::map<std::string, PairedTest> ce_tests;  // only pairs with >= 10 common draws
};

struct StudyResult {
  std::vector<StudyCell> cells;
  std::vector<PerDayRecord> per_day;
};

inline StudyResult run_backtest_study(const ReturnsPanel& panel,
                                      const std::optional<FactorPanel>& factors,
                                      const StudyConfig& cfg) {
  const int p_total = static_cast<int>(panel.y.rows());
  require(cfg.num_draws >= 1, "bad_draws", "study: num_draws must be >= 1");
  require(cfg.subset_size >= 0 && cfg.subset_size <= p_total, "bad_subset",
          "study: subset_size must lie in [0, p]");
  require(cfg.trim >= 0.0 && cfg.trim < 1.0, "bad_trim",
          "study: trim must lie in [0, 1)");
  const int p_eff = (cfg.subset_size == 0) ? p_total : cfg.subset_size;
  const bool resampling = p_eff < p_total;
  const int draws = resampling ? cfg.num_draws : 1;

  std::vector<double> cells_c;
  if (cfg.c_targets.empty()) {
    require(cfg.base.window >= 2, "bad_window",
            "study: need base.window when c_targets is empty");
    cells_c.push_back(static_cast<double>(p_eff) /
                      static_cast<double>(cfg.base.window));
  } else {
    cells_c = cfg.c_targets;
  }

  StudyResult out;
  const std::vector<std::string> names = {"traditional", "bona_fide", "target"};

  for (std::size_t cell_idx = 0; cell_idx < cells_c.size(); ++cell_idx) {
    const double c_req = cells_c[cell_idx];
    require(c_req > 0.0, "bad_grid", "study: c targets must be positive");
    StudyCell cell;
    cell.c_requested = c_req;
    cell.window = cfg.c_targets.empty()
                      ? cfg.base.window
                      : static_cast<int>(std::lround(p_eff / c_req));

    BacktestConfig bc = cfg.base;
    bc.window = cell.window;

    std::map<std::string, std::vector<SeriesMeasures>> measures;
    std::map<std::string, std::vector<int>> measure_draw;  // draw id per entry
    std::map<std::string, StrategyStudy> partial;
    for (const auto& n : names) partial[n] = StrategyStudy{};

    for (int draw = 0; draw < draws; ++draw) {
      ReturnsPanel sub;
      const ReturnsPanel* use = &panel;
      if (resampling) {
        std::vector<int> idx(p_total);
        std::iota(idx.begin(), idx.end(), 0);
        std::mt19937_64 gen =
            make_stream(cfg.seed, static_cast<std::uint64_t>(cell_idx),
                        static_cast<std::uint64_t>(draw));
        std::shuffle(idx.begin(), idx.end(), gen);
        idx.resize(p_eff);
        std::sort(idx.begin(), idx.end());
        sub.dates = panel.dates;
        sub.y.resize(p_eff, panel.y.cols());
        sub.assets.reserve(p_eff);
        for (int r = 0; r < p_eff; ++r) {
          sub.y.row(r) = panel.y.row(idx[r]);
          sub.assets.push_back(panel.assets[idx[r]]);
        }
        use = &sub;
      }

      const BacktestResult bt = rolling_backtest(*use, factors, bc);
      auto handle = [&](const char* name, const StrategySeries& s) {
        partial[name].total_gaps += s.gaps;
        for (std::size_t i = 0; i < s.returns.size(); ++i)
          out.per_day.push_back({c_req, draw, bt.eval_dates[s.day_index[i]], name,
                                 s.returns[i]});
        if (s.returns.size() >= 20) {
          measures[name].push_back(series_measures(s.returns, cfg.base.mode.gamma));
          measure_draw[name].push_back(draw);
          partial[name].draws_used += 1;
        } else {
          partial[name].draws_dropped += 1;
        }
      };
      handle("traditional", bt.traditional);
      handle("bona_fide", bt.bona_fide);
      handle("target", bt.target);
    }

    for (const auto& n : names) {
      if (!measures[n].empty())
        partial[n].report = aggregate_measures(measures[n], cfg.trim);
    }
    cell.strategies = partial;

    // Paired certainty-equivalent tests over draws both strategies completed.
    auto add_test = [&](const std::string& a, const std::string& b) {
      std::vector<double> ca, cb;
      std::size_t ia = 0, ib = 0;
      const auto &da = measure_draw[a], &db = measure_draw[b];
      while (ia < da.size() && ib < db.size()) {
        if (da[ia] == db[ib]) {
          ca.push_back(measures[a][ia].ce);
          cb.push_back(measures[b][ib].ce);
          ++ia;
          ++ib;
        } else if (da[ia] < db[ib]) {
          ++ia;
        } else {
          ++ib;
        }
      }
      if (ca.size() < 10) return;
      try {
        cell.ce_tests[a + "_vs_" + b] = paired_comparison(ca, cb);
      } catch (const NumericError&) {
        // zero-variance differences: comparison undefined, cell omitted
      }
    };
    add_test("bona_fide", "traditional");
    add_test("bona_fide", "target");
    add_test("traditional", "target");

    out.cells.push_back(std::move(cell));
  }
  return out;
}

inline std::string per_day_records_to_csv(const std::vector<PerDayRecord>& recs) {
  std::string out = "c,draw,date,strategy,value\n";
  for (const auto& r : recs) {
    out += format_double(r.c);
    out += ',';
    out += std::to_string(r.draw);
    out += ',';
    out += r.date;
    out += ',';
    out += r.strategy;
    out += ',';
    out += format_double(r.value);
    out += '\n';
  }
  return out;
}

}  // namespace mvshrink
