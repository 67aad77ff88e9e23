#include "core/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "core/record_json.hpp"
#include "core/rng.hpp"

namespace anovanet {

using nlohmann::json;

const std::set<std::string>& dgp_config_keys() {
  static const std::set<std::string> keys{
      "n",        "d",         "S1",       "S2",         "family", "amp_uni_lo",
      "amp_uni_hi", "amp_bi_lo", "amp_bi_hi", "beta1",     "beta2",  "sigma_eps",
      "noise",    "covariates", "beta_a",   "beta_b",     "B",      "seed"};
  return keys;
}

const std::set<std::string>& plan_config_keys() {
  static const std::set<std::string> keys{"regime", "beta1", "beta2", "sigma_hat", "C3",
                                          "C4",     "c1",    "c2",    "depth",     "B"};
  return keys;
}

const std::set<std::string>& opt_config_keys() {
  static const std::set<std::string> keys{"steps", "restarts", "lr",
                                          "cosine_decay", "eps_norm"};
  return keys;
}

const std::set<std::string>& lowerbound_config_keys() {
  static const std::set<std::string> keys{
      "mode", "n",  "d",  "beta1",          "beta2",          "c0",    "c1",
      "c2",   "s1", "s2", "holder_budget1", "holder_budget2", "pairs", "codebook_target",
      "seed", "tol"};
  return keys;
}

DgpConfig dgp_from_config(const Config& cfg) {
  DgpConfig dgp;
  dgp.n = cfg.get_long("n", 256);
  dgp.d = cfg.get_int("d", 2);
  dgp.S1 = cfg.get_int_list("S1", {});
  dgp.S2 = cfg.get_pair_list("S2", {});
  const std::string family = cfg.get_string("family", "harmonic");
  if (family == "harmonic")
    dgp.family = Family::harmonic;
  else if (family == "bump")
    dgp.family = Family::bump;
  else if (family == "mixed")
    dgp.family = Family::mixed;
  else
    throw std::runtime_error("config key family: expected harmonic|bump|mixed");
  dgp.amp_uni_lo = cfg.get_double("amp_uni_lo", 0.5);
  dgp.amp_uni_hi = cfg.get_double("amp_uni_hi", 1.0);
  dgp.amp_bi_lo = cfg.get_double("amp_bi_lo", 0.5);
  dgp.amp_bi_hi = cfg.get_double("amp_bi_hi", 1.0);
  dgp.beta1 = cfg.get_double("beta1", 2.0);
  dgp.beta2 = cfg.get_double("beta2", 2.0);
  dgp.sigma_eps = cfg.get_double("sigma_eps", 1.0);
  const std::string noise = cfg.get_string("noise", "gaussian");
  if (noise == "gaussian")
    dgp.noise = NoiseLaw::gaussian;
  else if (noise == "bounded")
    dgp.noise = NoiseLaw::bounded;
  else
    throw std::runtime_error("config key noise: expected gaussian|bounded");
  const std::string cov = cfg.get_string("covariates", "uniform");
  if (cov == "uniform")
    dgp.covariates = McLaw::uniform;
  else if (cov == "beta")
    dgp.covariates = McLaw::independent_beta;
  else
    throw std::runtime_error("config key covariates: expected uniform|beta");
  dgp.beta_a = cfg.get_double("beta_a", 2.0);
  dgp.beta_b = cfg.get_double("beta_b", 2.0);
  dgp.B = cfg.get_double("B", 10.0);
  dgp.seed = static_cast<std::uint64_t>(cfg.get_long("seed", 0));
  dgp.validate();
  return dgp;
}

OptConfig opt_from_config(const Config& cfg) {
  OptConfig opt;
  opt.steps = cfg.get_int("steps", opt.steps);
  opt.restarts = cfg.get_int("restarts", opt.restarts);
  opt.lr = cfg.get_double("lr", opt.lr);
  opt.cosine_decay = cfg.get_bool("cosine_decay", opt.cosine_decay);
  opt.eps_norm = cfg.get_double("eps_norm", opt.eps_norm);
  return opt;
}

HyperPlan plan_from_config(const Config& cfg, long n, int d) {
  const std::string regime = cfg.get_string("regime", "highdim-rsc");
  const double beta1 = cfg.get_double("beta1", 2.0);
  const double beta2 = cfg.get_double("beta2", 2.0);
  const double B = cfg.get_double("B", 10.0);
  if (regime == "lowdim") return plan_lowdim(n, d, beta1, beta2, B);
  PlanConstants constants;
  constants.C3 = cfg.get_double("C3", constants.C3);
  constants.C4 = cfg.get_double("C4", constants.C4);
  constants.c1 = cfg.get_double("c1", constants.c1);
  constants.c2 = cfg.get_double("c2", constants.c2);
  constants.depth = cfg.get_int("depth", constants.depth);
  const double sigma_hat = cfg.get_double("sigma_hat", 0.0);
  if (regime == "highdim-rsc")
    return plan_highdim(n, d, beta1, beta2, sigma_hat, constants, B, false);
  if (regime == "highdim-erm-free")
    return plan_highdim(n, d, beta1, beta2, sigma_hat, constants, B, true);
  throw std::runtime_error("config key regime: expected lowdim|highdim-rsc|highdim-erm-free");
}

std::string fit_summary_json(const FitResult& fit, bool deterministic) {
  return fit_to_json(fit, deterministic).dump(2);
}

std::string anova_report_json(const AnovaReport& report) {
  json uni_before = json::object(), uni_after = json::object();
  for (const auto& [j, v] : report.uni_defect_before) uni_before[std::to_string(j)] = v;
  for (const auto& [j, v] : report.uni_defect_after) uni_after[std::to_string(j)] = v;
  json bi_before = json::object(), bi_after = json::object();
  const auto pair_key = [](const std::pair<int, int>& jk) {
    return std::to_string(jk.first) + "-" + std::to_string(jk.second);
  };
  for (const auto& [jk, v] : report.bi_defect_before) bi_before[pair_key(jk)] = v;
  for (const auto& [jk, v] : report.bi_defect_after) bi_after[pair_key(jk)] = v;
  return json{{"uni_defect_before", uni_before},
              {"uni_defect_after", uni_after},
              {"bi_defect_before", bi_before},
              {"bi_defect_after", bi_after},
              {"max_uni_after", report.max_uni_after()},
              {"max_bi_after", report.max_bi_after()},
              {"intercept_shift", report.intercept_shift}}
      .dump(2);
}

namespace {

const char* source_kind_uni(const UniComponent& comp) {
  if (std::holds_alternative<Mlp>(comp.source)) return "mlp";
  if (std::holds_alternative<HarmonicUni>(comp.source)) return "harmonic";
  if (std::holds_alternative<BumpUni>(comp.source)) return "bump";
  return "grid";
}

const char* source_kind_bi(const BiComponent& comp) {
  if (std::holds_alternative<Mlp>(comp.source)) return "mlp";
  if (std::holds_alternative<HarmonicBi>(comp.source)) return "harmonic";
  return "bump";
}

}  // namespace

std::string model_describe_json(const StructuredModel& m) {
  json uni = json::array(), bi = json::array();
  for (const auto& [j, comp] : m.uni)
    uni.push_back(json{{"j", j}, {"kind", source_kind_uni(comp)}});
  for (const auto& [jk, comp] : m.bi)
    bi.push_back(json{{"j", jk.first}, {"k", jk.second}, {"kind", source_kind_bi(comp)}});
  return json{{"d", m.d}, {"B", m.B}, {"mu", m.mu}, {"uni", uni}, {"bi", bi}}.dump(2);
}

std::string plan_describe_json(const HyperPlan& p) { return plan_to_json(p).dump(2); }

std::string lowerbound_report_json(const Config& cfg) {
  cfg.require_known(lowerbound_config_keys());
  const std::string mode = cfg.get_string("mode", "dense");
  const long n = cfg.get_long("n", 512);
  const int d = cfg.get_int("d", 3);
  const double beta1 = cfg.get_double("beta1", 2.0);
  const double beta2 = cfg.get_double("beta2", 2.0);
  const double budget1 = cfg.get_double("holder_budget1", 1.0);
  const double budget2 = cfg.get_double("holder_budget2", 1.0);
  const int pairs = cfg.get_int("pairs", 50);
  const std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_long("seed", 1));

  LbParams p;
  if (mode == "dense") {
    p = lb_params_dense(n, d, beta1, beta2, cfg.get_double("c0", 1.0), budget1, budget2);
  } else if (mode == "sparse") {
    p = lb_params_sparse(n, d, cfg.get_int("s1", 1), cfg.get_int("s2", 1), beta1, beta2,
                         cfg.get_double("c1", 1.0), cfg.get_double("c2", 1.0), budget1, budget2);
  } else
    throw std::runtime_error("config key mode: expected dense|sparse");

  json report{{"mode", mode},
              {"params",
               json{{"n", p.n},
                    {"d", p.d},
                    {"beta1", p.beta1},
                    {"beta2", p.beta2},
                    {"m1", p.m1},
                    {"m2", p.m2},
                    {"h1", p.h1},
                    {"h2", p.h2},
                    {"L1", p.L1},
                    {"L2", p.L2},
                    {"uni_bits", p.uni_bits()},
                    {"bi_bits", p.bi_bits()},
                    {"kernel_l2sq", bump_kernel_l2sq()},
                    {"kernel_sup", bump_kernel_sup()}}}};
  if (p.sparse) {
    report["params"]["s1"] = p.s1;
    report["params"]["s2"] = p.s2;
    report["delta_sq"] = sparse_delta_sq(p);
  }

  json codebooks = json::array();
  for (const long bits : {p.uni_bits(), p.bi_bits()}) {
    if (bits < 8) {
      codebooks.push_back(json{{"bits", bits}, {"skipped", "code length below 8"}});
      continue;
    }
    const int M = static_cast<int>(std::min<long>(bits, 24));
    const int target =
        static_cast<int>(std::min<long>(cfg.get_long("codebook_target", 16), 1L << (M / 8)));
    const Codebook book = vg_codebook(M, std::max(1, target), Rng::derive(seed, 0xc0deull));
    codebooks.push_back(json{{"bits", bits},
                             {"M", book.M},
                             {"words", book.words.size()},
                             {"min_dist", book.min_dist},
                             {"required_dist", (book.M + 7) / 8},
                             {"target_reached", book.target_reached}});
  }
  report["codebooks"] = codebooks;

  Rng rng(Rng::derive(seed, 0xfadeull));
  const auto random_word = [&](long bits) {
    std::vector<std::uint8_t> w(static_cast<std::size_t>(bits));
    for (auto& b : w) b = rng.next_u64() & 1u;
    return w;
  };
  double max_rel = 0;
  for (int t = 0; t < pairs; ++t) {
    const auto w1a = random_word(p.uni_bits());
    const auto w1b = random_word(p.uni_bits());
    const auto w2a = random_word(p.bi_bits());
    const auto w2b = random_word(p.bi_bits());
    const PackingDistance dist = packing_distance(p, w1a, w1b, w2a, w2b);
    const double scale = std::max({std::fabs(dist.closed_form), std::fabs(dist.quadrature), 1e-30});
    max_rel = std::max(max_rel, std::fabs(dist.closed_form - dist.quadrature) / scale);
  }
  report["pairs_checked"] = pairs;
  report["max_relative_discrepancy"] = max_rel;
  report["tol"] = cfg.get_double("tol", 1e-6);
  report["within_tol"] = max_rel < cfg.get_double("tol", 1e-6);
  return report.dump(2);
}

}  // namespace anovanet
