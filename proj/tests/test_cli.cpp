// Black-box tests: spawn the installed CLI binary and inspect exit codes,
// run directories, and report files.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Invariant: ANV_CLI_BIN is injected by the build and points at the binary.
const std::string kBin = ANV_CLI_BIN;

int run_cli(const std::string& args, const std::string& env_prefix = "") {
  std::string cmd;
  if (!env_prefix.empty()) cmd += env_prefix + " ";
  cmd += kBin + " " + args + " >/dev/null 2>/dev/null";
  const int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  REQUIRE(WIFEXITED(rc));
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

json slurp_json(const fs::path& p) { return json::parse(slurp(p)); }

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream f(p, std::ios::binary);
  REQUIRE(f.good());
  f << content;
}

// Fresh scratch area per test case; removed on destruction.
struct Scratch {
  fs::path root;
  explicit Scratch(const std::string& tag) {
    root = fs::temp_directory_path() / ("anv_cli_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(root, ec);
  }
  fs::path dir(const std::string& name) const { return root / name; }
  std::string file(const std::string& name, const std::string& content) const {
    const fs::path p = root / name;
    write_file(p, content);
    return p.string();
  }
};

const std::string kGenCfg =
    "n = 80\n"
    "d = 3\n"
    "S1 = 1\n"
    "S2 = 2-3\n"
    "family = harmonic\n"
    "sigma_eps = 0.3\n"
    "seed = 7\n";

}  // namespace

TEST_CASE("gen writes a complete deterministic run directory") {
  Scratch s("gen");
  const std::string cfg = s.file("gen.cfg", kGenCfg);
  const fs::path a = s.dir("a"), b = s.dir("b");

  CHECK(run_cli("gen --config " + cfg + " --deterministic --out-dir " + a.string()) == 0);
  for (const char* name :
       {"dataset.csv", "dataset.bin", "truth.model", "gen_report.json", "manifest.json"})
    CHECK(fs::exists(a / name));

  const json report = slurp_json(a / "gen_report.json");
  CHECK(report.at("n").get<long>() == 80);
  CHECK(report.at("d").get<int>() == 3);
  CHECK(report.at("min_uni_l2").get<double>() > 0.0);
  CHECK(report.at("min_bi_l2").get<double>() > 0.0);

  const json manifest = slurp_json(a / "manifest.json");
  CHECK(manifest.at("command").get<std::string>() == "gen");
  CHECK(manifest.at("deterministic").get<bool>() == true);
  CHECK(!manifest.contains("created_utc"));
  CHECK(manifest.at("outputs").contains("dataset.csv"));

  CHECK(run_cli("gen --config " + cfg + " --deterministic --out-dir " + b.string()) == 0);
  CHECK(slurp(a / "dataset.csv") == slurp(b / "dataset.csv"));
  CHECK(slurp(a / "dataset.bin") == slurp(b / "dataset.bin"));
  CHECK(slurp(a / "truth.model") == slurp(b / "truth.model"));
}

TEST_CASE("run directories are write-once") {
  Scratch s("reuse");
  const std::string cfg = s.file("gen.cfg", kGenCfg);
  const fs::path a = s.dir("a");
  CHECK(run_cli("gen --config " + cfg + " --out-dir " + a.string()) == 0);
  CHECK(run_cli("gen --config " + cfg + " --out-dir " + a.string()) == 2);
}

TEST_CASE("usage errors exit 2 and leave no run record") {
  Scratch s("usage");
  const fs::path a = s.dir("a");

  SUBCASE("unknown config key") {
    const std::string cfg = s.file("bad.cfg", kGenCfg + "bogus_key = 1\n");
    CHECK(run_cli("gen --config " + cfg + " --out-dir " + a.string()) == 2);
    CHECK(!fs::exists(a / "manifest.json"));
  }
  SUBCASE("missing out dir") {
    const std::string cfg = s.file("gen.cfg", kGenCfg);
    CHECK(run_cli("gen --config " + cfg) == 2);
  }
  SUBCASE("malformed --set") {
    const std::string cfg = s.file("gen.cfg", kGenCfg);
    CHECK(run_cli("gen --config " + cfg + " --set novalue --out-dir " + a.string()) == 2);
  }
  SUBCASE("short n_grid for rates") {
    const std::string cfg = s.file("rates.cfg", "n_grid = 128, 256\nestimator = mock\n");
    CHECK(run_cli("rates --config " + cfg + " --out-dir " + a.string()) == 2);
  }
  SUBCASE("bad lowerbound mode") {
    const std::string cfg = s.file("lb.cfg", "mode = wrong\nn = 128\nd = 3\n");
    CHECK(run_cli("lowerbound --config " + cfg + " --out-dir " + a.string()) == 2);
  }
}

TEST_CASE("missing data file exits 3 without partial outputs") {
  Scratch s("io");
  const fs::path a = s.dir("a");
  CHECK(run_cli("fit --data " + (s.root / "nope.csv").string() +
                " --out-dir " + a.string()) == 3);
  CHECK(!fs::exists(a / "fit.model"));
  CHECK(!fs::exists(a / "manifest.json"));
}

TEST_CASE("config precedence: file, then environment, then --set") {
  Scratch s("prec");
  const std::string cfg = s.file("gen.cfg", kGenCfg);

  const fs::path a = s.dir("a");
  CHECK(run_cli("gen --config " + cfg + " --deterministic --out-dir " + a.string(),
                "ANOVANET_N=60") == 0);
  CHECK(slurp_json(a / "gen_report.json").at("n").get<long>() == 60);

  const fs::path b = s.dir("b");
  CHECK(run_cli("gen --config " + cfg + " --set n=40 --deterministic --out-dir " + b.string(),
                "ANOVANET_N=60") == 0);
  CHECK(slurp_json(b / "gen_report.json").at("n").get<long>() == 40);

  // Env entries that fit no config key of the command warn but do not fail.
  const fs::path c = s.dir("c");
  CHECK(run_cli("gen --config " + cfg + " --deterministic --out-dir " + c.string(),
                "ANOVANET_STEPS=5") == 0);
}

TEST_CASE("reserved environment flags mirror the command line") {
  Scratch s("env");
  const std::string cfg = s.file("gen.cfg", kGenCfg);

  const fs::path a = s.dir("a"), b = s.dir("b");
  CHECK(run_cli("gen --config " + cfg + " --seed 11 --deterministic --out-dir " + a.string()) ==
        0);
  CHECK(run_cli("gen --config " + cfg + " --deterministic --out-dir " + b.string(),
                "ANOVANET_SEED=11") == 0);
  CHECK(slurp(a / "dataset.csv") == slurp(b / "dataset.csv"));

  const fs::path c = s.dir("c");
  CHECK(run_cli("gen --config " + cfg, "ANOVANET_OUT_DIR=" + c.string()) == 0);
  CHECK(fs::exists(c / "manifest.json"));

  CHECK(run_cli("gen --config " + cfg + " --out-dir " + s.dir("d").string(),
                "ANOVANET_SEED=junk") == 2);
  CHECK(run_cli("gen --config " + cfg + " --out-dir " + s.dir("e").string(),
                "ANOVANET_DETERMINISTIC=maybe") == 2);
}

TEST_CASE("fit run directory holds model, projection, summary, and plan") {
  Scratch s("fit");
  const std::string gen_cfg = s.file("gen.cfg",
                                     "n = 60\n"
                                     "d = 2\n"
                                     "S1 = 1\n"
                                     "sigma_eps = 0.1\n"
                                     "seed = 3\n");
  const fs::path g = s.dir("g");
  REQUIRE(run_cli("gen --config " + gen_cfg + " --deterministic --out-dir " + g.string()) == 0);

  const std::string fit_cfg = s.file("fit.cfg", "steps = 40\nrestarts = 1\n");
  const fs::path f = s.dir("f");
  CHECK(run_cli("fit --config " + fit_cfg + " --data " + (g / "dataset.csv").string() +
                " --deterministic --seed 1 --out-dir " + f.string()) == 0);
  for (const char* name : {"fit.model", "fit_projected.model", "fit_summary.json",
                           "projection_report.json", "plan.json", "manifest.json"})
    CHECK(fs::exists(f / name));

  const json summary = slurp_json(f / "fit_summary.json");
  CHECK(std::isfinite(summary.at("objective").get<double>()));
  CHECK(summary.at("train_mse").get<double>() >= 0.0);
  CHECK(summary.at("wall_seconds").get<double>() == 0.0);

  const json plan = slurp_json(f / "plan.json");
  CHECK(plan.at("regime").get<std::string>() == "lowdim");
  CHECK(plan.at("n").get<long>() == 60);
  CHECK(plan.at("d").get<int>() == 2);

  const json proj = slurp_json(f / "projection_report.json");
  CHECK(proj.at("max_uni_after").get<double>() < 1e-9);
  CHECK(proj.at("max_bi_after").get<double>() < 1e-6);

  // Binary dataset loads through the same front door.
  const fs::path f2 = s.dir("f2");
  CHECK(run_cli("fit --config " + fit_cfg + " --data " + (g / "dataset.bin").string() +
                " --deterministic --seed 1 --out-dir " + f2.string()) == 0);
  CHECK(slurp(f / "fit.model") == slurp(f2 / "fit.model"));
}

TEST_CASE("rates with the mock estimator recovers the decay exponent exactly") {
  Scratch s("rates");
  const std::string cfg = s.file("rates.cfg",
                                 "n_grid = 256, 512, 1024, 2048\n"
                                 "seeds = 2\n"
                                 "estimator = mock\n"
                                 "mock_c = 2.0\n");
  const fs::path a = s.dir("a");
  CHECK(run_cli("rates --config " + cfg + " --deterministic --out-dir " + a.string()) == 0);

  const std::string table = slurp(a / "rate_table.csv");
  CHECK(table.rfind("n,d,seed,mc_l2_error,stderr,train_loss,wall_time\n", 0) == 0);
  int lines = 0;
  for (char ch : table)
    if (ch == '\n') ++lines;
  CHECK(lines == 1 + 4 * 2);

  const json summary = slurp_json(a / "rates_summary.json");
  CHECK(summary.at("estimator").get<std::string>() == "mock");
  CHECK(summary.at("medians").size() == 4);
  CHECK(summary.at("slope").get<double>() == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(summary.at("theory_slope_uni").get<double>() == doctest::Approx(-0.8));
  CHECK(summary.at("theory_slope_bi").get<double>() ==
        doctest::Approx(-2.0 / 3.0).epsilon(1e-12));
  CHECK(summary.at("failures").empty());

  // A flat mock curve has slope zero.
  const std::string flat = s.file("flat.cfg",
                                  "n_grid = 256, 512, 1024\n"
                                  "seeds = 1\n"
                                  "estimator = mock\n"
                                  "mock_power = 0\n");
  const fs::path b = s.dir("b");
  CHECK(run_cli("rates --config " + flat + " --deterministic --out-dir " + b.string()) == 0);
  CHECK(std::abs(slurp_json(b / "rates_summary.json").at("slope").get<double>()) < 1e-9);
}

TEST_CASE("pipeline reruns are byte-identical in deterministic mode") {
  Scratch s("pipe");
  const std::string cfg = s.file("pipe.cfg",
                                 "n = 120\n"
                                 "d = 4\n"
                                 "S1 = 1\n"
                                 "S2 = 2-3\n"
                                 "sigma_eps = 0.3\n"
                                 "seed = 5\n"
                                 "steps = 60\n"
                                 "restarts = 1\n");
  const fs::path a = s.dir("a"), b = s.dir("b");
  CHECK(run_cli("pipeline --config " + cfg + " --deterministic --seed 9 --out-dir " +
                a.string()) == 0);
  for (const char* name : {"pipeline_record.json", "final.model", "dataset.bin", "manifest.json"})
    CHECK(fs::exists(a / name));

  const json record = slurp_json(a / "pipeline_record.json");
  CHECK(record.contains("plan"));
  CHECK(record.contains("initial"));
  CHECK(record.contains("final"));
  CHECK(record.contains("active_sets"));
  CHECK(record.at("wall_seconds").get<double>() == 0.0);

  CHECK(run_cli("pipeline --config " + cfg + " --deterministic --seed 9 --out-dir " +
                b.string()) == 0);
  CHECK(slurp(a / "pipeline_record.json") == slurp(b / "pipeline_record.json"));
  CHECK(slurp(a / "final.model") == slurp(b / "final.model"));
  CHECK(slurp(a / "manifest.json") == slurp(b / "manifest.json"));
}

TEST_CASE("lowerbound run reports a verified packing construction") {
  Scratch s("lb");
  const std::string cfg = s.file("lb.cfg",
                                 "mode = dense\n"
                                 "n = 256\n"
                                 "d = 3\n"
                                 "pairs = 8\n"
                                 "seed = 3\n");
  const fs::path a = s.dir("a");
  CHECK(run_cli("lowerbound --config " + cfg + " --deterministic --out-dir " + a.string()) == 0);

  const json report = slurp_json(a / "lowerbound_report.json");
  CHECK(report.at("mode").get<std::string>() == "dense");
  CHECK(report.at("within_tol").get<bool>());
  CHECK(report.at("max_relative_discrepancy").get<double>() < 1e-6);
  CHECK(report.at("pairs_checked").get<int>() >= 8);
  CHECK(report.at("codebooks").is_array());
}

TEST_CASE("eval reports held-out error and optional truth distance") {
  Scratch s("eval");
  const std::string gen_cfg = s.file("gen.cfg",
                                     "n = 100\n"
                                     "d = 2\n"
                                     "S1 = 1\n"
                                     "sigma_eps = 0.2\n"
                                     "seed = 2\n");
  const fs::path g = s.dir("g");
  REQUIRE(run_cli("gen --config " + gen_cfg + " --deterministic --out-dir " + g.string()) == 0);

  const std::string fit_cfg = s.file("fit.cfg", "steps = 60\nrestarts = 1\n");
  const fs::path f = s.dir("f");
  REQUIRE(run_cli("fit --config " + fit_cfg + " --data " + (g / "dataset.csv").string() +
                  " --deterministic --seed 1 --out-dir " + f.string()) == 0);

  const fs::path e = s.dir("e");
  CHECK(run_cli("eval --model " + (f / "fit_projected.model").string() + " --data " +
                (g / "dataset.csv").string() + " --truth " + (g / "truth.model").string() +
                " --set mc_points=4000 --deterministic --seed 1 --out-dir " + e.string()) == 0);
  const json report = slurp_json(e / "eval.json");
  CHECK(report.at("n").get<long>() == 100);
  CHECK(report.at("d").get<int>() == 2);
  CHECK(report.at("mse").get<double>() > 0.0);
  CHECK(report.at("mc_l2").get<double>() >= 0.0);
  CHECK(report.at("mc_points").get<long>() == 4000);

  const fs::path e2 = s.dir("e2");
  CHECK(run_cli("eval --model " + (f / "fit.model").string() + " --data " +
                (g / "dataset.bin").string() + " --deterministic --out-dir " + e2.string()) == 0);
  const json bare = slurp_json(e2 / "eval.json");
  CHECK(bare.contains("mse"));
  CHECK(!bare.contains("mc_l2"));
}
