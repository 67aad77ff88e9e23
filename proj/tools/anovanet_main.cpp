// anovanet: experiment driver for the structured interaction estimator.
//
// Subcommands: gen | fit | fit-sparse | pipeline | rates | lowerbound | eval.
// All numerics go through the C API in anovanet.h; this file is plumbing
// (config merging, run directories, manifests, tables).
//
// Config precedence: file < ANOVANET_* environment < --set < dedicated flags.
// Every run writes into a fresh --out-dir; a directory that already holds a
// manifest.json is refused.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "anovanet.h"
#include "core/config.hpp"
#include "core/experiment.hpp"

extern char** environ;

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kOk = 0;
constexpr int kUsage = 2;
constexpr int kIo = 3;
constexpr int kNumeric = 4;
constexpr int kInternal = 5;

constexpr int kManifestVersion = 1;

struct CliError : std::runtime_error {
  int code;
  CliError(int c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

int status_exit(anv_status st) {
  switch (st) {
    case ANV_OK: return kOk;
    case ANV_EINVAL: return kUsage;
    case ANV_EIO: return kIo;
    case ANV_EDIVERGED: return kNumeric;
    default: return kInternal;
  }
}

void check(anv_status st, const std::string& what) {
  if (st == ANV_OK) return;
  throw CliError(status_exit(st), what + ": " + anv_last_error());
}

// RAII wrappers over the opaque C handles.
struct DsFree { void operator()(anv_dataset* p) const { anv_dataset_free(p); } };
struct ModelFree { void operator()(anv_model* p) const { anv_model_free(p); } };
struct PlanFree { void operator()(anv_plan* p) const { anv_plan_free(p); } };
struct FitFree { void operator()(anv_fit* p) const { anv_fit_free(p); } };
struct PipeFree { void operator()(anv_pipeline_result* p) const { anv_pipeline_free(p); } };
using DsPtr = std::unique_ptr<anv_dataset, DsFree>;
using ModelPtr = std::unique_ptr<anv_model, ModelFree>;
using PlanPtr = std::unique_ptr<anv_plan, PlanFree>;
using FitPtr = std::unique_ptr<anv_fit, FitFree>;
using PipePtr = std::unique_ptr<anv_pipeline_result, PipeFree>;

std::string take_string(char* s) {
  std::string out = s ? s : "";
  anv_string_free(s);
  return out;
}

// ---- common flags --------------------------------------------------------

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int threads = 1;
  bool deterministic = false;
  std::string out_dir;

  CLI::Option* seed_opt = nullptr;
  CLI::Option* threads_opt = nullptr;
  CLI::Option* det_opt = nullptr;
  CLI::Option* out_opt = nullptr;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--config", a.config_path, "key = value config file");
  cmd->add_option("--set", a.sets, "config override key=value (repeatable)")
      ->take_all()
      ->expected(0, -1);
  a.seed_opt = cmd->add_option("--seed", a.seed, "seed override");
  a.threads_opt = cmd->add_option("--threads", a.threads, "worker threads")->check(CLI::Range(1, 1024));
  a.det_opt = cmd->add_flag("--deterministic", a.deterministic,
                            "byte-stable outputs: zeroed timings, sequential reduction");
  a.out_opt = cmd->add_option("--out-dir", a.out_dir, "run directory (write-once)");
}

bool parse_env_bool(const std::string& v) {
  std::string s;
  for (char c : v) s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  throw CliError(kUsage, "environment flag expects a boolean, got: " + v);
}

// Reserved ANOVANET_* names that map to flags rather than config keys.
bool env_reserved(const std::string& name) {
  return name == "SEED" || name == "THREADS" || name == "OUT_DIR" || name == "DETERMINISTIC";
}

// Flags not given on the command line fall back to the environment.
void apply_env_flags(CommonArgs& a) {
  if (const char* v = std::getenv("ANOVANET_SEED"); v && a.seed_opt->count() == 0) {
    char* end = nullptr;
    a.seed = std::strtoull(v, &end, 10);
    if (!end || *end != '\0') throw CliError(kUsage, "ANOVANET_SEED expects an integer");
    a.seed_given = true;
  }
  if (a.seed_opt->count() > 0) a.seed_given = true;
  if (const char* v = std::getenv("ANOVANET_THREADS"); v && a.threads_opt->count() == 0) {
    a.threads = std::max(1, std::atoi(v));
  }
  if (const char* v = std::getenv("ANOVANET_OUT_DIR"); v && a.out_opt->count() == 0) {
    a.out_dir = v;
  }
  if (const char* v = std::getenv("ANOVANET_DETERMINISTIC"); v && a.det_opt->count() == 0) {
    a.deterministic = parse_env_bool(v);
  }
  if (a.out_dir.empty())
    throw CliError(kUsage, "--out-dir is required (or set ANOVANET_OUT_DIR)");
}

std::string to_lower(const std::string& s) {
  std::string out;
  for (char c : s) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Merged view: file, then ANOVANET_* config overrides, then --set pairs.
// Unknown keys in the file or in --set are rejected; environment overrides
// that do not fit the command's schema are skipped with a warning so one CI
// environment can drive several subcommands.
anovanet::Config merge_config(const CommonArgs& a, const std::set<std::string>& allowed) {
  anovanet::Config cfg;
  if (!a.config_path.empty()) cfg = anovanet::Config::parse_file(a.config_path);

  for (char** e = environ; e && *e; ++e) {
    const std::string entry = *e;
    if (entry.rfind("ANOVANET_", 0) != 0) continue;
    const auto eq = entry.find('=');
    if (eq == std::string::npos) continue;
    const std::string name = entry.substr(9, eq - 9);
    const std::string value = entry.substr(eq + 1);
    if (env_reserved(name)) continue;
    if (allowed.count(name)) {
      cfg.set(name, value);
    } else if (allowed.count(to_lower(name))) {
      cfg.set(to_lower(name), value);
    } else {
      std::fprintf(stderr, "warning: ANOVANET_%s does not match a config key of this command\n",
                   name.c_str());
    }
  }

  for (const std::string& s : a.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0)
      throw CliError(kUsage, "--set expects key=value, got: " + s);
    cfg.set(s.substr(0, eq), s.substr(eq + 1));
  }

  cfg.require_known(allowed);
  return cfg;
}

// Serializes the keys of `cfg` that fall in `subset` back to config text,
// so the C API sees exactly the merged values.
std::string render_config(const anovanet::Config& cfg, const std::set<std::string>& subset) {
  std::string out;
  for (const std::string& k : cfg.keys()) {
    if (!subset.count(k)) continue;
    out += k;
    out += " = ";
    out += cfg.get_string(k, "");
    out += "\n";
  }
  return out;
}

std::set<std::string> set_union(const std::set<std::string>& a, const std::set<std::string>& b) {
  std::set<std::string> out = a;
  out.insert(b.begin(), b.end());
  return out;
}

// ---- run directory + manifest --------------------------------------------

fs::path manifest_path(const CommonArgs& a) { return fs::path(a.out_dir) / "manifest.json"; }

void refuse_reuse(const CommonArgs& a) {
  std::error_code ec;
  if (fs::exists(manifest_path(a), ec))
    throw CliError(kUsage, "out dir already holds a run (manifest.json exists): " + a.out_dir);
}

void ensure_out_dir(const CommonArgs& a) {
  refuse_reuse(a);
  std::error_code ec;
  fs::create_directories(a.out_dir, ec);
  if (ec) throw CliError(kIo, "cannot create out dir " + a.out_dir + ": " + ec.message());
}

void write_text(const fs::path& p, const std::string& content) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw CliError(kIo, "cannot open for writing: " + p.string());
  f << content;
  if (!f) throw CliError(kIo, "write failed: " + p.string());
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json manifest_base(const std::string& command, const CommonArgs& a) {
  json m{{"schema_version", kManifestVersion},
         {"command", command},
         {"config", a.config_path.empty() ? json() : json(a.config_path)},
         {"overrides", a.sets},
         {"seed", a.seed_given ? json(a.seed) : json()},
         {"threads", a.threads},
         {"deterministic", a.deterministic},
         {"outputs", json::object()}};
  if (!a.deterministic) m["created_utc"] = utc_now();
  return m;
}

json output_entry(const std::string& kind, const std::string& description) {
  return json{{"kind", kind}, {"description", description}};
}

void write_manifest(const CommonArgs& a, json m) { write_text(manifest_path(a), m.dump(2) + "\n"); }

// Divergence is surfaced as a failed-run record plus a numeric exit code.
[[noreturn]] void fail_run(const CommonArgs& a, const std::string& command,
                           const std::string& message) {
  ensure_out_dir(a);
  const json rec{{"status", "failed"}, {"reason", "diverged"}, {"message", message}};
  write_text(fs::path(a.out_dir) / "failed_run.json", rec.dump(2) + "\n");
  json m = manifest_base(command, a);
  m["outputs"]["failed_run.json"] = output_entry("record", "failure diagnostic for this run");
  write_manifest(a, m);
  throw CliError(kNumeric, message);
}

// ---- shared loaders -------------------------------------------------------

DsPtr load_dataset(const std::string& path) {
  anv_dataset* ds = nullptr;
  if (to_lower(fs::path(path).extension().string()) == ".csv")
    check(anv_dataset_load_csv(path.c_str(), &ds), "load dataset " + path);
  else
    check(anv_dataset_load_bin(path.c_str(), &ds), "load dataset " + path);
  return DsPtr(ds);
}

anv_opt opt_from(const anovanet::Config& cfg, const CommonArgs& a) {
  anv_opt opt;
  anv_opt_default(&opt);
  opt.steps = cfg.get_int("steps", opt.steps);
  opt.restarts = cfg.get_int("restarts", opt.restarts);
  opt.lr = cfg.get_double("lr", opt.lr);
  opt.cosine_decay = cfg.get_bool("cosine_decay", opt.cosine_decay != 0) ? 1 : 0;
  opt.eps_norm = cfg.get_double("eps_norm", opt.eps_norm);
  opt.threads = a.threads;
  opt.seed = a.seed_given ? a.seed : 1;
  return opt;
}

PlanPtr plan_from(const anovanet::Config& cfg, const std::string& default_regime, long n, int d,
                  double sigma_pilot) {
  std::string text = render_config(cfg, anovanet::plan_config_keys());
  if (!cfg.has("regime")) text += "regime = " + default_regime + "\n";
  if (sigma_pilot > 0 && cfg.get_double("sigma_hat", 0.0) <= 0)
    text += "sigma_hat = " + std::to_string(sigma_pilot) + "\n";
  anv_plan* plan = nullptr;
  check(anv_plan_from_config(text.c_str(), n, d, &plan), "build plan");
  return PlanPtr(plan);
}

json dataset_columns(int d) {
  json cols = json::object();
  cols["x1.." + ("x" + std::to_string(d))] = "covariates in [0,1], one column per coordinate";
  cols["y"] = "response";
  return cols;
}

// ---- gen -------------------------------------------------------------------

int run_gen(CommonArgs& a) {
  auto cfg = merge_config(a, anovanet::dgp_config_keys());
  refuse_reuse(a);
  if (a.seed_given) cfg.set("seed", std::to_string(a.seed));
  const std::string text = render_config(cfg, anovanet::dgp_config_keys());

  anv_dataset* raw = nullptr;
  check(anv_dataset_generate(text.c_str(), &raw), "generate dataset");
  DsPtr ds(raw);
  int64_t n = 0;
  int32_t d = 0;
  check(anv_dataset_dims(ds.get(), &n, &d), "dataset dims");

  char* rep = nullptr;
  check(anv_signal_report(text.c_str(), &rep), "signal report");
  json report = json::parse(take_string(rep));
  report["n"] = n;
  report["d"] = d;

  anv_model* truth_raw = nullptr;
  check(anv_dataset_truth(ds.get(), &truth_raw), "extract truth");
  ModelPtr truth(truth_raw);

  ensure_out_dir(a);
  const fs::path dir(a.out_dir);
  check(anv_dataset_save_csv(ds.get(), (dir / "dataset.csv").c_str()), "write dataset.csv");
  check(anv_dataset_save_bin(ds.get(), (dir / "dataset.bin").c_str()), "write dataset.bin");
  check(anv_model_save(truth.get(), (dir / "truth.model").c_str()), "write truth.model");
  write_text(dir / "gen_report.json", report.dump(2) + "\n");

  json m = manifest_base("gen", a);
  json csv = output_entry("table", "sampled design matrix and responses");
  csv["columns"] = dataset_columns(d);
  m["outputs"]["dataset.csv"] = csv;
  m["outputs"]["dataset.bin"] = output_entry("dataset", "binary dataset (same contents as the CSV)");
  m["outputs"]["truth.model"] = output_entry("model", "ground-truth regression function");
  m["outputs"]["gen_report.json"] =
      output_entry("report", "signal strength: smallest component L2 norms, sup norm");
  write_manifest(a, m);
  return kOk;
}

// ---- fit / fit-sparse ------------------------------------------------------

int run_fit(CommonArgs& a, const std::string& data_path, bool penalized) {
  const std::string command = penalized ? "fit-sparse" : "fit";
  auto cfg = merge_config(
      a, set_union(anovanet::plan_config_keys(), anovanet::opt_config_keys()));
  refuse_reuse(a);

  DsPtr ds = load_dataset(data_path);
  int64_t n = 0;
  int32_t d = 0;
  check(anv_dataset_dims(ds.get(), &n, &d), "dataset dims");

  double sigma_pilot = 0;
  if (penalized && cfg.get_double("sigma_hat", 0.0) <= 0)
    check(anv_sigma_hat(ds.get(), &sigma_pilot), "pilot noise scale");

  PlanPtr plan = plan_from(cfg, penalized ? "highdim-rsc" : "lowdim", n, d, sigma_pilot);
  const anv_opt opt = opt_from(cfg, a);

  anv_fit* fit_raw = nullptr;
  const anv_status st =
      penalized ? anv_fit_penalized(ds.get(), plan.get(), &opt, &fit_raw)
                : anv_fit_erm(ds.get(), plan.get(), nullptr, 0, nullptr, 0, &opt, &fit_raw);
  if (st == ANV_EDIVERGED) fail_run(a, command, anv_last_error());
  check(st, command);
  FitPtr fit(fit_raw);

  char* summary_raw = nullptr;
  check(anv_fit_summary(fit.get(), a.deterministic ? 1 : 0, &summary_raw), "fit summary");
  const std::string summary = take_string(summary_raw);

  anv_model* model_raw = nullptr;
  check(anv_fit_model(fit.get(), &model_raw), "extract model");
  ModelPtr model(model_raw);

  anv_model* proj_raw = nullptr;
  char* proj_report_raw = nullptr;
  check(anv_model_project(model.get(), &proj_raw, &proj_report_raw), "projection");
  ModelPtr projected(proj_raw);
  const std::string proj_report = take_string(proj_report_raw);

  char* plan_raw = nullptr;
  check(anv_plan_describe(plan.get(), &plan_raw), "plan description");
  const std::string plan_desc = take_string(plan_raw);

  ensure_out_dir(a);
  const fs::path dir(a.out_dir);
  check(anv_model_save(model.get(), (dir / "fit.model").c_str()), "write fit.model");
  check(anv_model_save(projected.get(), (dir / "fit_projected.model").c_str()),
        "write fit_projected.model");
  write_text(dir / "fit_summary.json", summary + "\n");
  write_text(dir / "projection_report.json", proj_report + "\n");
  write_text(dir / "plan.json", plan_desc + "\n");

  json m = manifest_base(command, a);
  m["outputs"]["fit.model"] = output_entry("model", "fitted model as returned by the optimizer");
  m["outputs"]["fit_projected.model"] =
      output_entry("model", "fitted model after the identifiability projection");
  m["outputs"]["fit_summary.json"] =
      output_entry("report", "objective, training loss, component norms, trace");
  m["outputs"]["projection_report.json"] =
      output_entry("report", "marginal defects before/after projection");
  m["outputs"]["plan.json"] = output_entry("report", "realized widths and penalty levels");
  write_manifest(a, m);
  return kOk;
}

// ---- pipeline ---------------------------------------------------------------

int run_pipeline(CommonArgs& a, const std::string& data_path) {
  const bool inline_gen = data_path.empty();
  std::set<std::string> allowed =
      set_union(anovanet::plan_config_keys(), anovanet::opt_config_keys());
  if (inline_gen) allowed = set_union(allowed, anovanet::dgp_config_keys());
  auto cfg = merge_config(a, allowed);
  refuse_reuse(a);

  DsPtr ds;
  if (inline_gen) {
    if (a.seed_given && !cfg.has("seed")) cfg.set("seed", std::to_string(a.seed));
    const std::string text = render_config(cfg, anovanet::dgp_config_keys());
    anv_dataset* raw = nullptr;
    check(anv_dataset_generate(text.c_str(), &raw), "generate dataset");
    ds.reset(raw);
  } else {
    ds = load_dataset(data_path);
  }
  int64_t n = 0;
  int32_t d = 0;
  check(anv_dataset_dims(ds.get(), &n, &d), "dataset dims");

  PlanPtr plan = plan_from(cfg, "highdim-rsc", n, d, 0.0);
  const anv_opt opt = opt_from(cfg, a);

  anv_pipeline_result* res_raw = nullptr;
  const anv_status st = anv_pipeline_run(ds.get(), plan.get(), &opt, &res_raw);
  if (st == ANV_EDIVERGED) fail_run(a, "pipeline", anv_last_error());
  check(st, "pipeline");
  PipePtr res(res_raw);

  char* record_raw = nullptr;
  check(anv_pipeline_record(res.get(), a.deterministic ? 1 : 0, &record_raw), "pipeline record");
  const std::string record = take_string(record_raw);

  anv_model* final_raw = nullptr;
  check(anv_pipeline_final_model(res.get(), &final_raw), "final model");
  ModelPtr final_model(final_raw);

  ensure_out_dir(a);
  const fs::path dir(a.out_dir);
  write_text(dir / "pipeline_record.json", record + "\n");
  check(anv_model_save(final_model.get(), (dir / "final.model").c_str()), "write final.model");
  if (inline_gen)
    check(anv_dataset_save_bin(ds.get(), (dir / "dataset.bin").c_str()), "write dataset.bin");

  json m = manifest_base("pipeline", a);
  m["outputs"]["pipeline_record.json"] = output_entry(
      "record", "realized plan, screening-fit summary, active sets, refit summary, recovery");
  m["outputs"]["final.model"] =
      output_entry("model", "projected refit on the selected components");
  if (inline_gen)
    m["outputs"]["dataset.bin"] = output_entry("dataset", "dataset generated for this run");
  write_manifest(a, m);
  return kOk;
}

// ---- rates -------------------------------------------------------------------

const std::set<std::string>& rates_extra_keys() {
  static const std::set<std::string> keys{"n_grid",     "seeds",  "estimator", "mock_c",
                                          "mock_power", "mc_points", "slots"};
  return keys;
}

struct RateRow {
  long n = 0;
  int d = 0;
  std::uint64_t seed = 0;
  double error = 0;
  double stderr_mc = 0;
  double train_loss = 0;
  double wall = 0;
};

struct RateCell {
  std::size_t n_index = 0;
  long n = 0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string message;
  RateRow row;
};

// Least-squares line through (x, y); se has k - 2 degrees of freedom.
void ols_slope(const std::vector<double>& x, const std::vector<double>& y, double& slope,
               double& se) {
  const std::size_t k = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < k; ++i) { mx += x[i]; my += y[i]; }
  mx /= static_cast<double>(k);
  my /= static_cast<double>(k);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double rss = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double r = y[i] - intercept - slope * x[i];
    rss += r * r;
  }
  se = k > 2 ? std::sqrt(rss / static_cast<double>(k - 2) / sxx) : 0.0;
}

int run_rates(CommonArgs& a) {
  std::set<std::string> dgp_no_n = anovanet::dgp_config_keys();
  dgp_no_n.erase("n");
  const std::set<std::string> allowed = set_union(
      set_union(dgp_no_n, rates_extra_keys()),
      set_union(anovanet::plan_config_keys(), anovanet::opt_config_keys()));
  auto cfg = merge_config(a, allowed);
  refuse_reuse(a);

  const std::vector<long> n_grid = cfg.get_long_list("n_grid", {});
  if (n_grid.size() < 3)
    throw CliError(kUsage, "rates needs n_grid with at least 3 sample sizes");
  const int seeds = cfg.get_int("seeds", 1);
  if (seeds < 1) throw CliError(kUsage, "seeds must be >= 1");
  const std::string estimator = cfg.get_string("estimator", "nn");
  if (estimator != "nn" && estimator != "mock")
    throw CliError(kUsage, "estimator: expected nn|mock");
  const double mock_c = cfg.get_double("mock_c", 1.0);
  const double mock_power = cfg.get_double("mock_power", 1.0);
  const long mc_points = cfg.get_long("mc_points", 8192);
  const std::string slots = cfg.get_string("slots", "all");
  if (slots != "all" && slots != "uni") throw CliError(kUsage, "slots: expected all|uni");
  const double beta1 = cfg.get_double("beta1", 2.0);
  const double beta2 = cfg.get_double("beta2", 2.0);
  const std::uint64_t base_seed =
      a.seed_given ? a.seed : static_cast<std::uint64_t>(cfg.get_long("seed", 1));

  std::vector<RateCell> cells;
  for (std::size_t ni = 0; ni < n_grid.size(); ++ni)
    for (int s = 1; s <= seeds; ++s) {
      RateCell c;
      c.n_index = ni;
      c.n = n_grid[ni];
      c.seed = base_seed + 7919ull * static_cast<std::uint64_t>(ni) +
               static_cast<std::uint64_t>(s);
      cells.push_back(c);
    }

  const int cell_workers = a.deterministic ? 1 : std::max(1, a.threads);
  const int inner_threads = cell_workers > 1 ? 1 : a.threads;

  const auto run_cell = [&](RateCell& c) {
    const auto t0 = std::chrono::steady_clock::now();
    if (estimator == "mock") {
      c.row = {c.n,
               cfg.get_int("d", 1),
               c.seed,
               mock_c * std::pow(static_cast<double>(c.n), -mock_power),
               0.0,
               0.0,
               0.0};
      return;
    }
    std::string dgp_text = render_config(cfg, dgp_no_n);
    // render_config drops nothing from the merged values, so remove the
    // per-cell keys before appending them.
    {
      std::istringstream in(dgp_text);
      std::string line, kept;
      while (std::getline(in, line))
        if (line.rfind("seed ", 0) != 0 && line.rfind("seed=", 0) != 0) kept += line + "\n";
      dgp_text = kept;
    }
    dgp_text += "n = " + std::to_string(c.n) + "\n";
    dgp_text += "seed = " + std::to_string(c.seed) + "\n";

    anv_dataset* ds_raw = nullptr;
    check(anv_dataset_generate(dgp_text.c_str(), &ds_raw), "generate cell dataset");
    DsPtr ds(ds_raw);
    int64_t n_rows = 0;
    int32_t d = 0;
    check(anv_dataset_dims(ds.get(), &n_rows, &d), "cell dims");

    anv_model* truth_raw = nullptr;
    check(anv_dataset_truth(ds.get(), &truth_raw), "cell truth");
    ModelPtr truth(truth_raw);

    PlanPtr plan = plan_from(cfg, "lowdim", n_rows, d, 0.0);
    anv_opt opt = opt_from(cfg, a);
    opt.threads = inner_threads;
    opt.seed = c.seed;

    anv_fit* fit_raw = nullptr;
    if (slots == "uni") {
      std::vector<int32_t> uni(static_cast<std::size_t>(d));
      for (int j = 0; j < d; ++j) uni[static_cast<std::size_t>(j)] = j + 1;
      check(anv_fit_erm(ds.get(), plan.get(), uni.data(), d, nullptr, 0, &opt, &fit_raw),
            "cell fit");
    } else {
      check(anv_fit_erm(ds.get(), plan.get(), nullptr, 0, nullptr, 0, &opt, &fit_raw), "cell fit");
    }
    FitPtr fit(fit_raw);

    anv_model* model_raw = nullptr;
    check(anv_fit_model(fit.get(), &model_raw), "cell model");
    ModelPtr model(model_raw);

    double est = 0, se = 0;
    check(anv_model_mc_l2(model.get(), truth.get(), mc_points, c.seed ^ 0xabcd1234ull, &est, &se),
          "cell error");

    char* sum_raw = nullptr;
    check(anv_fit_summary(fit.get(), 1, &sum_raw), "cell summary");
    const json summary = json::parse(take_string(sum_raw));

    const double wall =
        a.deterministic
            ? 0.0
            : std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.row = {c.n, d, c.seed, est, se, summary.at("train_mse").get<double>(), wall};
  };

  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      try {
        run_cell(cells[i]);
      } catch (const std::exception& e) {
        cells[i].failed = true;
        cells[i].message = e.what();
      }
    }
  };
  if (cell_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < cell_workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // Index-ordered reduction keeps the outputs identical across worker counts.
  std::string csv = "n,d,seed,mc_l2_error,stderr,train_loss,wall_time\n";
  std::map<long, std::vector<double>> by_n;
  json failures = json::array();
  char buf[256];
  for (const RateCell& c : cells) {
    if (c.failed) {
      failures.push_back(json{{"n", c.n}, {"seed", c.seed}, {"message", c.message}});
      continue;
    }
    std::snprintf(buf, sizeof buf, "%ld,%d,%llu,%.17g,%.17g,%.17g,%.17g\n", c.row.n, c.row.d,
                  static_cast<unsigned long long>(c.row.seed), c.row.error, c.row.stderr_mc,
                  c.row.train_loss, c.row.wall);
    csv += buf;
    by_n[c.n].push_back(c.row.error);
  }

  json medians = json::object();
  std::vector<double> log_n, log_med;
  for (auto& [n_val, errs] : by_n) {
    std::sort(errs.begin(), errs.end());
    const std::size_t k = errs.size();
    const double med = k % 2 ? errs[k / 2] : 0.5 * (errs[k / 2 - 1] + errs[k / 2]);
    medians[std::to_string(n_val)] = med;
    if (med > 0) {
      log_n.push_back(std::log(static_cast<double>(n_val)));
      log_med.push_back(std::log(med));
    }
  }

  json summary{{"estimator", estimator},
               {"n_grid", n_grid},
               {"seeds", seeds},
               {"mc_points", mc_points},
               {"slots", slots},
               {"medians", medians},
               {"beta1", beta1},
               {"beta2", beta2},
               {"theory_slope_uni", -2.0 * beta1 / (2.0 * beta1 + 1.0)},
               {"theory_slope_bi", -beta2 / (beta2 + 1.0)},
               {"failures", failures}};
  if (log_n.size() >= 3) {
    double slope = 0, se = 0;
    ols_slope(log_n, log_med, slope, se);
    summary["slope"] = slope;
    summary["slope_stderr"] = se;
  } else {
    summary["slope"] = nullptr;
    summary["note"] = "fewer than 3 surviving sample sizes; slope not computed";
  }

  ensure_out_dir(a);
  const fs::path dir(a.out_dir);
  write_text(dir / "rate_table.csv", csv);
  write_text(dir / "rates_summary.json", summary.dump(2) + "\n");

  json m = manifest_base("rates", a);
  json table = output_entry("table", "one row per (sample size, seed) cell");
  table["columns"] = json{{"n", "sample size"},
                          {"d", "ambient dimension"},
                          {"seed", "cell seed (data and optimizer)"},
                          {"mc_l2_error", "Monte Carlo squared L2 distance to the truth"},
                          {"stderr", "Monte Carlo standard error of that estimate"},
                          {"train_loss", "training mean squared error"},
                          {"wall_time", "wall seconds (0 when deterministic)"}};
  m["outputs"]["rate_table.csv"] = table;
  m["outputs"]["rates_summary.json"] =
      output_entry("report", "per-n medians, log-log slope with standard error, references");
  write_manifest(a, m);
  return kOk;
}

// ---- lowerbound ---------------------------------------------------------------

int run_lowerbound(CommonArgs& a) {
  auto cfg = merge_config(a, anovanet::lowerbound_config_keys());
  if (a.seed_given) cfg.set("seed", std::to_string(a.seed));
  refuse_reuse(a);
  const std::string text = render_config(cfg, anovanet::lowerbound_config_keys());

  char* rep_raw = nullptr;
  check(anv_lowerbound_report(text.c_str(), &rep_raw), "lower-bound report");
  const std::string report = take_string(rep_raw);
  const json parsed = json::parse(report);

  ensure_out_dir(a);
  write_text(fs::path(a.out_dir) / "lowerbound_report.json", report + "\n");
  json m = manifest_base("lowerbound", a);
  m["outputs"]["lowerbound_report.json"] = output_entry(
      "report", "packing parameters, codebook statistics, closed-form vs quadrature discrepancy");
  write_manifest(a, m);

  if (!parsed.at("within_tol").get<bool>()) {
    std::fprintf(stderr, "packing discrepancy %.3e exceeds tolerance %.3e\n",
                 parsed.at("max_relative_discrepancy").get<double>(),
                 parsed.at("tol").get<double>());
    return kNumeric;
  }
  return kOk;
}

// ---- eval -----------------------------------------------------------------------

int run_eval(CommonArgs& a, const std::string& model_path, const std::string& data_path,
             const std::string& truth_path) {
  static const std::set<std::string> allowed{"mc_points"};
  auto cfg = merge_config(a, allowed);
  refuse_reuse(a);

  anv_model* model_raw = nullptr;
  check(anv_model_load(model_path.c_str(), &model_raw), "load model " + model_path);
  ModelPtr model(model_raw);
  DsPtr ds = load_dataset(data_path);
  int64_t n = 0;
  int32_t d = 0;
  check(anv_dataset_dims(ds.get(), &n, &d), "dataset dims");

  std::vector<double> x(static_cast<std::size_t>(d));
  double mse = 0;
  for (int64_t i = 0; i < n; ++i) {
    double y = 0, fx = 0;
    check(anv_dataset_row(ds.get(), i, x.data(), &y), "dataset row");
    check(anv_model_eval(model.get(), x.data(), d, &fx), "model eval");
    mse += (fx - y) * (fx - y);
  }
  mse /= static_cast<double>(n);

  json out{{"mse", mse}, {"n", n}, {"d", d}};
  if (!truth_path.empty()) {
    anv_model* truth_raw = nullptr;
    check(anv_model_load(truth_path.c_str(), &truth_raw), "load truth " + truth_path);
    ModelPtr truth(truth_raw);
    const long mc_points = cfg.get_long("mc_points", 8192);
    double est = 0, se = 0;
    check(anv_model_mc_l2(model.get(), truth.get(), mc_points,
                          a.seed_given ? a.seed : 1, &est, &se),
          "mc l2");
    out["mc_l2"] = est;
    out["mc_l2_stderr"] = se;
    out["mc_points"] = mc_points;
  }

  ensure_out_dir(a);
  write_text(fs::path(a.out_dir) / "eval.json", out.dump(2) + "\n");
  json m = manifest_base("eval", a);
  m["outputs"]["eval.json"] =
      output_entry("report", "held-out mean squared error and optional distance to a truth model");
  write_manifest(a, m);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"structured interaction-model estimation toolkit"};
  app.require_subcommand(1);

  CommonArgs gen_args, fit_args, sparse_args, pipe_args, rates_args, lb_args, eval_args;
  std::string fit_data, sparse_data, pipe_data, eval_model, eval_data, eval_truth;

  CLI::App* gen = app.add_subcommand("gen", "sample a synthetic dataset and its ground truth");
  add_common(gen, gen_args);

  CLI::App* fit = app.add_subcommand("fit", "joint least-squares fit over all component slots");
  add_common(fit, fit_args);
  fit->add_option("--data", fit_data, "dataset file (.csv or .bin)")->required();

  CLI::App* fit_sparse =
      app.add_subcommand("fit-sparse", "group-penalized fit over all component slots");
  add_common(fit_sparse, sparse_args);
  fit_sparse->add_option("--data", sparse_data, "dataset file (.csv or .bin)")->required();

  CLI::App* pipeline = app.add_subcommand(
      "pipeline", "split, penalized screening, threshold, refit, projection");
  add_common(pipeline, pipe_args);
  pipeline->add_option("--data", pipe_data, "dataset file; omitted = generate from config");

  CLI::App* rates = app.add_subcommand("rates", "error-vs-n experiment with a log-log slope");
  add_common(rates, rates_args);

  CLI::App* lowerbound =
      app.add_subcommand("lowerbound", "packing lower-bound verification suite");
  add_common(lowerbound, lb_args);

  CLI::App* eval = app.add_subcommand("eval", "evaluate a saved model on a dataset");
  add_common(eval, eval_args);
  eval->add_option("--model", eval_model, "model file")->required();
  eval->add_option("--data", eval_data, "dataset file (.csv or .bin)")->required();
  eval->add_option("--truth", eval_truth, "truth model for a distance estimate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsage;
  }

  try {
    if (gen->parsed()) { apply_env_flags(gen_args); return run_gen(gen_args); }
    if (fit->parsed()) { apply_env_flags(fit_args); return run_fit(fit_args, fit_data, false); }
    if (fit_sparse->parsed()) {
      apply_env_flags(sparse_args);
      return run_fit(sparse_args, sparse_data, true);
    }
    if (pipeline->parsed()) {
      apply_env_flags(pipe_args);
      return run_pipeline(pipe_args, pipe_data);
    }
    if (rates->parsed()) { apply_env_flags(rates_args); return run_rates(rates_args); }
    if (lowerbound->parsed()) { apply_env_flags(lb_args); return run_lowerbound(lb_args); }
    if (eval->parsed()) {
      apply_env_flags(eval_args);
      return run_eval(eval_args, eval_model, eval_data, eval_truth);
    }
    return kUsage;
  } catch (const CliError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.code;
  } catch (const std::runtime_error& e) {
    // config parsing/validation helpers report through std::runtime_error
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kInternal;
  }
}
