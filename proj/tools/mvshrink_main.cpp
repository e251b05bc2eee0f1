#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mvshrink/mvshrink.hpp"

// Command line surface. Four subcommands share the same plumbing: defaults,
// overlaid by a JSON config file, overlaid by explicit flags; every run
// prints a report and, when --out is given, writes the artifacts plus a
// metadata sidecar atomically. Exit codes: 0 success, 2 validation or config
// error, 3 numerical or regime error, 4 I/O error.

namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// config plumbing

json load_config_file(const std::string& path) {
  const std::string text = mvshrink::read_text_file(path);
  json parsed;
  try {
    parsed = json::parse(text);
  } catch (const json::exception& e) {
    throw mvshrink::ValidationError("config_parse_error",
                                    "config '" + path + "': " + e.what());
  }
  if (!parsed.is_object())
    throw mvshrink::ValidationError("config_parse_error",
                                    "config '" + path + "': expected a JSON object");
  return parsed;
}

void check_allowed_keys(const json& cfg, const std::vector<std::string>& allowed,
                        const char* command) {
  for (const auto& item : cfg.items()) {
    bool known = false;
    for (const auto& k : allowed)
      if (item.key() == k) {
        known = true;
        break;
      }
    if (!known)
      throw mvshrink::ValidationError(
          "config_unknown_key",
          std::string(command) + ": unknown config key '" + item.key() + "'");
  }
}

double get_num(const json& cfg, const char* key) {
  const auto& v = cfg.at(key);
  if (!v.is_number())
    throw mvshrink::ValidationError("config_type_error",
                                    std::string("config key '") + key +
                                        "' must be a number");
  return v.get<double>();
}

int get_int(const json& cfg, const char* key) {
  const auto& v = cfg.at(key);
  if (!v.is_number_integer())
    throw mvshrink::ValidationError("config_type_error",
                                    std::string("config key '") + key +
                                        "' must be an integer");
  return v.get<int>();
}

std::uint64_t get_seed(const json& cfg, const char* key) {
  const auto& v = cfg.at(key);
  if (!v.is_number_integer() || v.get<double>() < 0)
    throw mvshrink::ValidationError("config_type_error",
                                    std::string("config key '") + key +
                                        "' must be a non-negative integer");
  return v.get<std::uint64_t>();
}

bool get_bool(const json& cfg, const char* key) {
  const auto& v = cfg.at(key);
  if (!v.is_boolean())
    throw mvshrink::ValidationError("config_type_error",
                                    std::string("config key '") + key +
                                        "' must be a boolean");
  return v.get<bool>();
}

std::string get_str(const json& cfg, const char* key) {
  const auto& v = cfg.at(key);
  if (!v.is_string())
    throw mvshrink::ValidationError("config_type_error",
                                    std::string("config key '") + key +
                                        "' must be a string");
  return v.get<std::string>();
}

std::vector<double> get_num_list(const json& cfg, const char* key) {
  const auto& v = cfg.at(key);
  if (!v.is_array())
    throw mvshrink::ValidationError("config_type_error",
                                    std::string("config key '") + key +
                                        "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number())
      throw mvshrink::ValidationError("config_type_error",
                                      std::string("config key '") + key +
                                          "' must be an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

std::vector<std::string> get_str_list(const json& cfg, const char* key) {
  const auto& v = cfg.at(key);
  if (!v.is_array())
    throw mvshrink::ValidationError("config_type_error",
                                    std::string("config key '") + key +
                                        "' must be an array of strings");
  std::vector<std::string> out;
  for (const auto& x : v) {
    if (!x.is_string())
      throw mvshrink::ValidationError("config_type_error",
                                      std::string("config key '") + key +
                                          "' must be an array of strings");
    out.push_back(x.get<std::string>());
  }
  return out;
}

mvshrink::Criterion parse_criterion(const std::string& s) {
  if (s == "mean_variance") return mvshrink::Criterion::MeanVariance;
  if (s == "min_variance") return mvshrink::Criterion::MinVariance;
  if (s == "sharpe_ratio") return mvshrink::Criterion::SharpeRatio;
  throw mvshrink::ValidationError(
      "bad_criterion", "unknown criterion '" + s +
                           "' (expected mean_variance, min_variance or sharpe_ratio)");
}

mvshrink::TargetChoice parse_target(const std::string& s) {
  if (s == "equal_weight") return mvshrink::TargetChoice::EqualWeight;
  if (s == "equal_correlation") return mvshrink::TargetChoice::EqualCorrelation;
  if (s == "fama_french") return mvshrink::TargetChoice::FamaFrench;
  throw mvshrink::ValidationError(
      "bad_target", "unknown target '" + s +
                        "' (expected equal_weight, equal_correlation or fama_french)");
}

mvshrink::ReturnDistribution parse_dist(const std::string& s) {
  if (s == "gaussian") return mvshrink::ReturnDistribution::Gaussian;
  if (s == "student_t") return mvshrink::ReturnDistribution::StudentT;
  throw mvshrink::ValidationError(
      "bad_distribution",
      "unknown distribution '" + s + "' (expected gaussian or student_t)");
}

mvshrink::CalibrationMode mode_from_config(const json& cfg) {
  mvshrink::CalibrationMode mode;
  mode.criterion = parse_criterion(get_str(cfg, "criterion"));
  mode.gamma = get_num(cfg, "gamma");
  if (!cfg.at("beta").is_null()) mode.beta_override = get_num(cfg, "beta");
  return mode;
}

// ---------------------------------------------------------------------------
// output plumbing

json vector_to_json(const mvshrink::Vector& v) {
  json arr = json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

json make_metadata(const char* command, const json& resolved) {
  return json{{"artifact", "mvshrink"},
              {"version", mvshrink::version_string},
              {"command", command},
              {"config", resolved}};
}

void emit_file(const std::string& out_dir, const std::string& name,
               const std::string& content) {
  if (out_dir.empty()) return;
  mvshrink::atomic_write_text(std::filesystem::path(out_dir) / name, content);
}

// ---------------------------------------------------------------------------
// weights

int run_weights(const json& cfg) {
  const std::string returns_path = get_str(cfg, "returns");
  if (returns_path.empty())
    throw mvshrink::ValidationError("missing_option",
                                    "weights: a returns csv is required");
  const mvshrink::ReturnsPanel panel = mvshrink::load_returns_csv(returns_path);
  const auto p = panel.y.rows();
  const auto n = panel.y.cols();
  const double c_hat = mvshrink::concentration(panel.y);
  mvshrink::check_guard_band(c_hat, "weights");
  const bool singular = c_hat > 1.0;

  const mvshrink::Vector ybar = mvshrink::sample_mean(panel.y);
  const mvshrink::Matrix s = mvshrink::sample_covariance(panel.y);
  const mvshrink::Matrix inv_like =
      singular ? mvshrink::moore_penrose_pinv(s) : mvshrink::spd_inverse(s);

  const mvshrink::CalibrationMode mode = mode_from_config(cfg);
  const mvshrink::Vector w_trad =
      mvshrink::sample_eu_weights(inv_like, ybar, mode.gamma);
  const mvshrink::FrontierParams f_c =
      singular ? mvshrink::consistent_frontier_gt1(inv_like, ybar, c_hat)
               : mvshrink::consistent_frontier_lt1(
                     mvshrink::plugin_frontier(ybar, inv_like), c_hat);

  const mvshrink::TargetChoice choice = parse_target(get_str(cfg, "target"));
  mvshrink::Vector b;
  switch (choice) {
    case mvshrink::TargetChoice::EqualWeight:
      b = mvshrink::target_equal_weight(static_cast<int>(p));
      break;
    case mvshrink::TargetChoice::EqualCorrelation:
      b = mvshrink::target_equal_correlation(s);
      break;
    case mvshrink::TargetChoice::FamaFrench: {
      const std::string factors_path = get_str(cfg, "factors");
      if (factors_path.empty())
        throw mvshrink::ValidationError(
            "missing_factors", "weights: fama_french target needs a factor csv");
      const mvshrink::FactorPanel factors =
          mvshrink::load_factors_csv(factors_path);
      mvshrink::require(factors.dates == panel.dates, "factor_dates_mismatch",
                        "weights: factor dates must match the returns dates");
      b = mvshrink::target_fama_french(panel.y, factors.f);
      break;
    }
  }

  const mvshrink::TargetStats t_hat = mvshrink::target_stats(b, ybar, s);
  const double alpha = mvshrink::bona_fide_alpha(f_c, t_hat, c_hat, mode);
  const mvshrink::Vector w_gse = mvshrink::gse_weights(alpha, w_trad, b);

  json report;
  report["metadata"] = make_metadata("weights", cfg);
  report["p"] = p;
  report["n"] = n;
  report["c_hat"] = c_hat;
  report["regime"] = singular ? "c>1" : "c<1";
  report["inverse_path"] = singular ? "moore_penrose" : "cholesky";
  report["alpha"] = alpha;
  report["frontier"] = {{"r_gmv", f_c.r_gmv}, {"v_gmv", f_c.v_gmv}, {"s", f_c.s}};
  report["target_stats"] = {{"r_b", t_hat.r_b}, {"v_b", t_hat.v_b}};
  report["assets"] = panel.assets;
  report["weights"] = {{"traditional", vector_to_json(w_trad)},
                       {"bona_fide", vector_to_json(w_gse)},
                       {"target", vector_to_json(b)}};

  std::cout << report.dump(2) << "\n";
  const std::string out = get_str(cfg, "out");
  emit_file(out, "weights.json", report.dump(2) + "\n");
  emit_file(out, "metadata.json", report["metadata"].dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------------------
// simulate

int run_simulate(const json& cfg) {
  mvshrink::ExperimentSpec spec;
  spec.c_grid = get_num_list(cfg, "c_grid");
  spec.p = get_int(cfg, "p");
  spec.condition_index = get_num(cfg, "condition_index");
  spec.lambda_min = get_num(cfg, "lambda_min");
  spec.rotate = get_bool(cfg, "rotate");
  spec.replications = get_int(cfg, "replications");
  spec.seed = get_seed(cfg, "seed");
  spec.gamma = get_num(cfg, "gamma");
  spec.dist = parse_dist(get_str(cfg, "dist"));
  spec.t_df = get_num(cfg, "t_df");
  spec.modes.clear();
  for (const auto& name : get_str_list(cfg, "modes"))
    spec.modes.push_back(parse_criterion(name));
  const int threads = get_int(cfg, "threads");

  const auto rows = mvshrink::run_loss_experiment(spec, threads);
  const std::string csv = mvshrink::experiment_rows_to_csv(rows);

  std::string out = get_str(cfg, "out");
  if (out.empty()) out = ".";
  emit_file(out, "experiment.csv", csv);
  emit_file(out, "metadata.json", make_metadata("simulate", cfg).dump(2) + "\n");

  std::cout << "wrote " << rows.size() << " rows ("
            << spec.c_grid.size() * spec.modes.size() << " cells, "
            << spec.replications << " replications) to "
            << (std::filesystem::path(out) / "experiment.csv").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// verify

int run_verify(const json& cfg) {
  const int p = get_int(cfg, "p");
  const int n = get_int(cfg, "n");
  const std::uint64_t seed = get_seed(cfg, "seed");
  const double rel_tol = get_num(cfg, "rel_tol");
  const double abs_tol = get_num(cfg, "abs_tol");
  const double identity_tol = get_num(cfg, "identity_tol");

  const auto rows = mvshrink::verify_rmt_limits(p, n, seed);

  json report;
  report["metadata"] = make_metadata("verify", cfg);
  report["p"] = p;
  report["n"] = n;
  report["c_hat"] = static_cast<double>(p) / static_cast<double>(n);
  report["tolerances"] = {
      {"relative", rel_tol}, {"absolute", abs_tol}, {"identity", identity_tol}};

  int failures = 0;
  json out_rows = json::array();
  std::printf("%-18s %14s %14s %12s %12s  %s\n", "quantity", "empirical", "limit",
              "gap", "allowed", "status");
  for (const auto& r : rows) {
    double gap = 0.0;
    double allowed = 0.0;
    const char* kind = nullptr;
    if (r.exact_identity) {
      gap = r.abs_gap();
      allowed = identity_tol;
      kind = "identity";
    } else if (r.zero_limit) {
      gap = r.abs_gap();
      allowed = abs_tol;
      kind = "absolute";
    } else {
      gap = r.rel_gap();
      allowed = rel_tol;
      kind = "relative";
    }
    const bool ok = gap <= allowed;
    if (!ok) ++failures;
    std::printf("%-18s %14.6g %14.6g %12.4g %12.4g  %s\n", r.quantity.c_str(),
                r.empirical, r.limit, gap, allowed, ok ? "ok" : "FAIL");
    out_rows.push_back(json{{"quantity", r.quantity},
                            {"empirical", r.empirical},
                            {"limit", r.limit},
                            {"kind", kind},
                            {"gap", gap},
                            {"allowed", allowed},
                            {"pass", ok}});
  }
  report["rows"] = out_rows;
  report["failures"] = failures;
  std::printf("%d of %zu quantities outside tolerance\n", failures, rows.size());

  const std::string out = get_str(cfg, "out");
  emit_file(out, "verify.json", report.dump(2) + "\n");
  emit_file(out, "metadata.json", report["metadata"].dump(2) + "\n");

  if (failures > 0)
    throw mvshrink::NumericError("rmt_tolerance_exceeded",
                                 std::to_string(failures) +
                                     " limit quantities outside tolerance");
  return 0;
}

// ---------------------------------------------------------------------------
// backtest

json report_to_json(const mvshrink::PerformanceReport& rep) {
  json j{{"ce_mean", rep.ce_mean},     {"ce_median", rep.ce_median},
         {"var95", rep.var95},         {"var99", rep.var99},
         {"es95", rep.es95},           {"es99", rep.es99},
         {"trim", rep.trim},           {"draws", rep.draws},
         {"sr_draws", rep.sr_draws}};
  j["sr_mean"] = rep.sr_mean ? json(*rep.sr_mean) : json(nullptr);
  j["sr_median"] = rep.sr_median ? json(*rep.sr_median) : json(nullptr);
  return j;
}

int run_backtest(const json& cfg) {
  const std::string returns_path = get_str(cfg, "returns");
  if (returns_path.empty())
    throw mvshrink::ValidationError("missing_option",
                                    "backtest: a returns csv is required");
  const mvshrink::ReturnsPanel panel = mvshrink::load_returns_csv(returns_path);
  std::optional<mvshrink::FactorPanel> factors;
  const std::string factors_path = get_str(cfg, "factors");
  if (!factors_path.empty()) factors = mvshrink::load_factors_csv(factors_path);

  mvshrink::StudyConfig sc;
  sc.c_targets = get_num_list(cfg, "c_targets");
  sc.base.window = get_int(cfg, "window");
  sc.base.eval_days = get_int(cfg, "eval_days");
  sc.base.mode = mode_from_config(cfg);
  sc.base.target = parse_target(get_str(cfg, "target"));
  sc.subset_size = get_int(cfg, "subset_size");
  sc.num_draws = get_int(cfg, "num_draws");
  sc.seed = get_seed(cfg, "seed");
  sc.trim = get_num(cfg, "trim");

  const mvshrink::StudyResult res = mvshrink::run_backtest_study(panel, factors, sc);

  json cells = json::array();
  for (const auto& cell : res.cells) {
    json jc;
    jc["c_requested"] = cell.c_requested;
    jc["window"] = cell.window;
    json strategies;
    for (const auto& [name, st] : cell.strategies) {
      json js;
      js["draws_used"] = st.draws_used;
      js["draws_dropped"] = st.draws_dropped;
      js["total_gaps"] = st.total_gaps;
      js["report"] = st.draws_used > 0 ? report_to_json(st.report) : json(nullptr);
      strategies[name] = js;
    }
    jc["strategies"] = strategies;
    json tests;
    for (const auto& [pair, t] : cell.ce_tests)
      tests[pair] = json{{"t_stat", t.t_stat},
                         {"p_value", t.p_value},
                         {"significant_5pct", t.significant_5pct},
                         {"mean_diff", t.mean_diff}};
    jc["ce_tests"] = tests;
    cells.push_back(jc);
  }

  json report;
  report["metadata"] = make_metadata("backtest", cfg);
  report["assets"] = static_cast<int>(panel.y.rows());
  report["days"] = static_cast<int>(panel.y.cols());
  report["cells"] = cells;

  std::cout << report.dump(2) << "\n";
  const std::string out = get_str(cfg, "out");
  emit_file(out, "backtest.json", report.dump(2) + "\n");
  emit_file(out, "per_day.csv", mvshrink::per_day_records_to_csv(res.per_day));
  emit_file(out, "metadata.json", report["metadata"].dump(2) + "\n");
  return 0;
}

void print_error(const std::string& name, const std::string& message) {
  const json err{{"error", name}, {"message", message}};
  std::cerr << err.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shrinkage-based mean-variance portfolio toolkit"};
  app.require_subcommand(1);

  // weights ------------------------------------------------------------
  auto* cmd_w = app.add_subcommand("weights", "Estimate portfolio weights from a returns csv");
  std::string w_config, w_returns, w_factors, w_target, w_criterion, w_out;
  double w_gamma = 1.0, w_beta = 0.0;
  std::uint64_t w_seed = 0;
  cmd_w->add_option("--config", w_config, "JSON config file");
  cmd_w->add_option("--returns", w_returns, "returns csv (date,asset1,...)");
  cmd_w->add_option("--factors", w_factors, "factor csv (date,mkt,smb,hml)");
  cmd_w->add_option("--target", w_target,
                    "target portfolio: equal_weight|equal_correlation|fama_french");
  cmd_w->add_option("--criterion", w_criterion,
                    "calibration: mean_variance|min_variance|sharpe_ratio");
  cmd_w->add_option("--gamma", w_gamma, "risk aversion");
  cmd_w->add_option("--beta", w_beta, "calibration coefficient override");
  cmd_w->add_option("--seed", w_seed, "seed recorded in metadata");
  cmd_w->add_option("--out", w_out, "output directory");

  // simulate -----------------------------------------------------------
  auto* cmd_s = app.add_subcommand("simulate", "Run a Monte Carlo loss sweep over a concentration grid");
  std::string s_config, s_dist, s_out;
  std::vector<double> s_c_grid;
  std::vector<std::string> s_modes;
  int s_p = 0, s_reps = 0, s_threads = 0;
  double s_ci = 0.0, s_lmin = 0.0, s_gamma = 0.0, s_tdf = 0.0;
  std::uint64_t s_seed = 0;
  bool s_no_rotate = false;
  cmd_s->add_option("--config", s_config, "JSON config file");
  cmd_s->add_option("--c", s_c_grid, "concentration grid")->delimiter(',');
  cmd_s->add_option("--p", s_p, "asset count");
  cmd_s->add_option("--replications", s_reps, "replications per cell");
  cmd_s->add_option("--condition-index", s_ci, "spectrum condition index");
  cmd_s->add_option("--lambda-min", s_lmin, "smallest eigenvalue");
  cmd_s->add_flag("--no-rotate", s_no_rotate, "keep the covariance diagonal");
  cmd_s->add_option("--criterion", s_modes, "calibration modes")->delimiter(',');
  cmd_s->add_option("--gamma", s_gamma, "risk aversion");
  cmd_s->add_option("--dist", s_dist, "innovations: gaussian|student_t");
  cmd_s->add_option("--t-df", s_tdf, "student t degrees of freedom");
  cmd_s->add_option("--seed", s_seed, "base seed");
  cmd_s->add_option("--threads", s_threads, "worker threads");
  cmd_s->add_option("--out", s_out, "output directory (default .)");

  // verify ---------------------------------------------------------------
  auto* cmd_v = app.add_subcommand("verify", "Check the random-matrix limit quantities against tolerances");
  std::string v_config, v_out;
  int v_p = 0, v_n = 0;
  double v_rel = 0.0, v_abs = 0.0, v_id = 0.0;
  std::uint64_t v_seed = 0;
  cmd_v->add_option("--config", v_config, "JSON config file");
  cmd_v->add_option("--p", v_p, "dimension");
  cmd_v->add_option("--n", v_n, "sample size");
  cmd_v->add_option("--seed", v_seed, "seed");
  cmd_v->add_option("--rel-tol", v_rel, "relative tolerance");
  cmd_v->add_option("--abs-tol", v_abs, "absolute tolerance for zero limits");
  cmd_v->add_option("--identity-tol", v_id, "tolerance for exact identities");
  cmd_v->add_option("--out", v_out, "output directory");

  // backtest -------------------------------------------------------------
  auto* cmd_b = app.add_subcommand("backtest", "Rolling-window out-of-sample strategy comparison");
  std::string b_config, b_returns, b_factors, b_target, b_criterion, b_out;
  std::vector<double> b_c_targets;
  int b_window = 0, b_eval = 0, b_subset = 0, b_draws = 0;
  double b_gamma = 0.0, b_beta = 0.0, b_trim = 0.0;
  std::uint64_t b_seed = 0;
  cmd_b->add_option("--config", b_config, "JSON config file");
  cmd_b->add_option("--returns", b_returns, "returns csv");
  cmd_b->add_option("--factors", b_factors, "factor csv");
  cmd_b->add_option("--window", b_window, "estimation window length");
  cmd_b->add_option("--eval-days", b_eval, "evaluation days at the end of the panel");
  cmd_b->add_option("--c", b_c_targets, "concentration targets (window = p / c)")
      ->delimiter(',');
  cmd_b->add_option("--target", b_target,
                    "target portfolio: equal_weight|equal_correlation|fama_french");
  cmd_b->add_option("--criterion", b_criterion,
                    "calibration: mean_variance|min_variance|sharpe_ratio");
  cmd_b->add_option("--gamma", b_gamma, "risk aversion");
  cmd_b->add_option("--beta", b_beta, "calibration coefficient override");
  cmd_b->add_option("--trim", b_trim, "trimmed-mean fraction");
  cmd_b->add_option("--subset-size", b_subset, "assets per resampled draw (0: all)");
  cmd_b->add_option("--num-draws", b_draws, "resampled draws");
  cmd_b->add_option("--seed", b_seed, "resampling seed");
  cmd_b->add_option("--out", b_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (cmd_w->parsed()) {
      json cfg{{"returns", ""},         {"factors", ""}, {"target", "equal_weight"},
               {"criterion", "mean_variance"}, {"gamma", 1.0}, {"beta", nullptr},
               {"seed", 0},             {"out", ""}};
      if (!w_config.empty()) {
        const json file = load_config_file(w_config);
        check_allowed_keys(file, {"returns", "factors", "target", "criterion",
                                  "gamma", "beta", "seed", "out"},
                           "weights");
        cfg.update(file);
      }
      if (cmd_w->count("--returns")) cfg["returns"] = w_returns;
      if (cmd_w->count("--factors")) cfg["factors"] = w_factors;
      if (cmd_w->count("--target")) cfg["target"] = w_target;
      if (cmd_w->count("--criterion")) cfg["criterion"] = w_criterion;
      if (cmd_w->count("--gamma")) cfg["gamma"] = w_gamma;
      if (cmd_w->count("--beta")) cfg["beta"] = w_beta;
      if (cmd_w->count("--seed")) cfg["seed"] = w_seed;
      if (cmd_w->count("--out")) cfg["out"] = w_out;
      return run_weights(cfg);
    }
    if (cmd_s->parsed()) {
      json cfg{{"c_grid", json::array()},
               {"p", 100},
               {"replications", 100},
               {"condition_index", 150.0},
               {"lambda_min", 0.1},
               {"rotate", true},
               {"modes", json::array({"mean_variance"})},
               {"gamma", 1.0},
               {"dist", "gaussian"},
               {"t_df", 5.0},
               {"seed", 1},
               {"threads", 1},
               {"out", ""}};
      if (!s_config.empty()) {
        const json file = load_config_file(s_config);
        check_allowed_keys(file,
                           {"c_grid", "p", "replications", "condition_index",
                            "lambda_min", "rotate", "modes", "gamma", "dist",
                            "t_df", "seed", "threads", "out"},
                           "simulate");
        cfg.update(file);
      }
      if (cmd_s->count("--c")) cfg["c_grid"] = s_c_grid;
      if (cmd_s->count("--p")) cfg["p"] = s_p;
      if (cmd_s->count("--replications")) cfg["replications"] = s_reps;
      if (cmd_s->count("--condition-index")) cfg["condition_index"] = s_ci;
      if (cmd_s->count("--lambda-min")) cfg["lambda_min"] = s_lmin;
      if (s_no_rotate) cfg["rotate"] = false;
      if (cmd_s->count("--criterion")) cfg["modes"] = s_modes;
      if (cmd_s->count("--gamma")) cfg["gamma"] = s_gamma;
      if (cmd_s->count("--dist")) cfg["dist"] = s_dist;
      if (cmd_s->count("--t-df")) cfg["t_df"] = s_tdf;
      if (cmd_s->count("--seed")) cfg["seed"] = s_seed;
      if (cmd_s->count("--threads")) cfg["threads"] = s_threads;
      if (cmd_s->count("--out")) cfg["out"] = s_out;
      return run_simulate(cfg);
    }
    if (cmd_v->parsed()) {
      json cfg{{"p", 500},           {"n", 1000},      {"seed", 1},
               {"rel_tol", 0.07},    {"abs_tol", 0.02}, {"identity_tol", 1e-8},
               {"out", ""}};
      if (!v_config.empty()) {
        const json file = load_config_file(v_config);
        check_allowed_keys(
            file, {"p", "n", "seed", "rel_tol", "abs_tol", "identity_tol", "out"},
            "verify");
        cfg.update(file);
      }
      if (cmd_v->count("--p")) cfg["p"] = v_p;
      if (cmd_v->count("--n")) cfg["n"] = v_n;
      if (cmd_v->count("--seed")) cfg["seed"] = v_seed;
      if (cmd_v->count("--rel-tol")) cfg["rel_tol"] = v_rel;
      if (cmd_v->count("--abs-tol")) cfg["abs_tol"] = v_abs;
      if (cmd_v->count("--identity-tol")) cfg["identity_tol"] = v_id;
      if (cmd_v->count("--out")) cfg["out"] = v_out;
      return run_verify(cfg);
    }
    if (cmd_b->parsed()) {
      json cfg{{"returns", ""},
               {"factors", ""},
               {"window", 120},
               {"eval_days", 200},
               {"c_targets", json::array()},
               {"target", "equal_weight"},
               {"criterion", "mean_variance"},
               {"gamma", 1.0},
               {"beta", nullptr},
               {"trim", 0.10},
               {"subset_size", 0},
               {"num_draws", 1},
               {"seed", 0},
               {"out", ""}};
      if (!b_config.empty()) {
        const json file = load_config_file(b_config);
        check_allowed_keys(file,
                           {"returns", "factors", "window", "eval_days",
                            "c_targets", "target", "criterion", "gamma", "beta",
                            "trim", "subset_size", "num_draws", "seed", "out"},
                           "backtest");
        cfg.update(file);
      }
      if (cmd_b->count("--returns")) cfg["returns"] = b_returns;
      if (cmd_b->count("--factors")) cfg["factors"] = b_factors;
      if (cmd_b->count("--window")) cfg["window"] = b_window;
      if (cmd_b->count("--eval-days")) cfg["eval_days"] = b_eval;
      if (cmd_b->count("--c")) cfg["c_targets"] = b_c_targets;
      if (cmd_b->count("--target")) cfg["target"] = b_target;
      if (cmd_b->count("--criterion")) cfg["criterion"] = b_criterion;
      if (cmd_b->count("--gamma")) cfg["gamma"] = b_gamma;
      if (cmd_b->count("--beta")) cfg["beta"] = b_beta;
      if (cmd_b->count("--trim")) cfg["trim"] = b_trim;
      if (cmd_b->count("--subset-size")) cfg["subset_size"] = b_subset;
      if (cmd_b->count("--num-draws")) cfg["num_draws"] = b_draws;
      if (cmd_b->count("--seed")) cfg["seed"] = b_seed;
      if (cmd_b->count("--out")) cfg["out"] = b_out;
      return run_backtest(cfg);
    }
  } catch (const mvshrink::ValidationError& e) {
    print_error(e.name(), e.what());
    return 2;
  } catch (const mvshrink::NumericError& e) {
    print_error(e.name(), e.what());
    return 3;
  } catch (const mvshrink::IoError& e) {
    print_error(e.name(), e.what());
    return 4;
  } catch (const std::exception& e) {
    print_error("internal_error", e.what());
    return 2;
  }
  return 2;
}
