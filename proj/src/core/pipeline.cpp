#include "core/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "core/quadrature.hpp"
#include "core/record_json.hpp"
#include "core/rng.hpp"

namespace anovanet {

ActiveSets threshold_components(const FitResult& fit, const HyperPlan& plan) {
  if (plan.regime == Regime::lowdim)
    throw std::invalid_argument("thresholding requires a high-dimensional plan");
  ActiveSets sets;
  sets.threshold1 = plan.c1 * plan.lambda1;
  sets.threshold2 = plan.c2 * plan.lambda2;
  sets.norms = fit.norms;
  for (const auto& [key, norm] : fit.norms) {
    if (key.is_uni()) {
      if (norm >= sets.threshold1) sets.S1.push_back(key.j);
    } else if (norm >= sets.threshold2)
      sets.S2.emplace_back(key.j, key.k);
  }
  std::sort(sets.S1.begin(), sets.S1.end());
  std::sort(sets.S2.begin(), sets.S2.end());
  return sets;
}

RecoveryMetrics recovery_metrics(const ActiveSets& sets, const std::vector<int>& S1,
                                 const std::vector<std::pair<int, int>>& S2) {
  RecoveryMetrics m;
  int hit1 = 0;
  for (const int j : sets.S1)
    if (std::find(S1.begin(), S1.end(), j) != S1.end())
      ++hit1;
    else
      ++m.gamma1;
  int hit2 = 0;
  for (const auto& jk : sets.S2)
    if (std::find(S2.begin(), S2.end(), jk) != S2.end())
      ++hit2;
    else
      ++m.gamma2;
  m.contain1 = hit1 == static_cast<int>(S1.size());
  m.contain2 = hit2 == static_cast<int>(S2.size());
  m.precision1 = sets.S1.empty() ? 1.0 : static_cast<double>(hit1) / sets.S1.size();
  m.precision2 = sets.S2.empty() ? 1.0 : static_cast<double>(hit2) / sets.S2.size();
  m.recall1 = S1.empty() ? 1.0 : static_cast<double>(hit1) / S1.size();
  m.recall2 = S2.empty() ? 1.0 : static_cast<double>(hit2) / S2.size();
  return m;
}

PipelineResult run_pipeline(const Dataset& ds, const HyperPlan& plan, const OptConfig& opt) {
  if (ds.n() < 4) throw std::invalid_argument("pipeline needs at least four samples");
  if (plan.regime == Regime::lowdim)
    throw std::invalid_argument("pipeline requires a high-dimensional plan");
  const auto t0 = std::chrono::steady_clock::now();

  PipelineResult result;
  const auto [half1, half2] = split_dataset(ds);

  // Realize the plan at the fitting-half size; the pilot scale comes from the
  // fitting half unless the caller fixed one.
  double sigma = plan.sigma_hat;
  if (!(sigma > 0)) sigma = sigma_hat_pilot(half1);
  PlanConstants constants;
  constants.C3 = plan.C3;
  constants.C4 = plan.C4;
  constants.c1 = plan.c1;
  constants.c2 = plan.c2;
  constants.depth = plan.depth1;
  result.plan = plan_highdim(half1.n(), plan.d, plan.beta1, plan.beta2, sigma, constants, plan.B,
                             plan.regime == Regime::highdim_erm_free);

  OptConfig opt1 = opt;
  opt1.seed = Rng::derive(opt.seed, 0x9a9e0001ull);
  result.initial = fit_penalized(half1, result.plan, opt1);
  result.active = threshold_components(result.initial, result.plan);

  if (result.active.empty()) {
    result.intercept_only = true;
    result.final_fit.model.d = plan.d;
    result.final_fit.model.B = plan.B;
    result.final_fit.model.mu = half2.y.mean();
    result.final_fit.objective =
        (half2.y.array() - half2.y.mean()).square().sum() / static_cast<double>(half2.n());
    result.final_fit.train_mse = result.final_fit.objective;
    result.final_fit.restarts = 0;
  } else {
    std::vector<ComponentKey> keys;
    for (const int j : result.active.S1) keys.push_back(ComponentKey::uni(j));
    for (const auto& [j, k] : result.active.S2) keys.push_back(ComponentKey::bi(j, k));

    HyperPlan refit_plan = result.plan;  // same widths, no penalty
    refit_plan.regime = Regime::lowdim;
    refit_plan.lambda1 = 0;
    refit_plan.lambda2 = 0;
    OptConfig opt2 = opt;
    opt2.seed = Rng::derive(opt.seed, 0x9a9e0002ull);
    result.final_fit = fit_erm(half2, refit_plan, keys, opt2);

    const Quad1D rule = Quad1D::gauss_legendre(kDefaultGaussOrder);
    auto [projected, report] = anova_project(result.final_fit.model, rule);
    result.final_fit.model = std::move(projected);
  }

  if (ds.truth) {
    std::vector<int> S1;
    std::vector<std::pair<int, int>> S2;
    for (const auto& [j, _] : ds.truth->uni) S1.push_back(j);
    for (const auto& [jk, _] : ds.truth->bi) S2.push_back(jk);
    result.recovery = recovery_metrics(result.active, S1, S2);
  }
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

nlohmann::json norms_to_json(const std::map<ComponentKey, double>& norms) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [key, v] : norms) out[key.str()] = v;
  return out;
}

nlohmann::json plan_to_json(const HyperPlan& p) {
  const char* regime = p.regime == Regime::lowdim
                           ? "lowdim"
                           : (p.regime == Regime::highdim_rsc ? "highdim-rsc" : "highdim-erm-free");
  return nlohmann::json{{"regime", regime}, {"n", p.n},
                        {"d", p.d},         {"beta1", p.beta1},
                        {"beta2", p.beta2}, {"N1", p.N1},
                        {"N2", p.N2},       {"width1", p.width1},
                        {"width2", p.width2}, {"depth1", p.depth1},
                        {"depth2", p.depth2}, {"V1", p.V1},
                        {"V2", p.V2},       {"lambda1", p.lambda1},
                        {"lambda2", p.lambda2}, {"c1", p.c1},
                        {"c2", p.c2},       {"C3", p.C3},
                        {"C4", p.C4},       {"sigma_hat", p.sigma_hat},
                        {"B", p.B}};
}

nlohmann::json fit_to_json(const FitResult& fit, bool deterministic) {
  return nlohmann::json{{"objective", fit.objective},
                        {"train_mse", fit.train_mse},
                        {"restarts", fit.restarts},
                        {"steps_traced", fit.trace.size()},
                        {"final_trace", fit.trace.empty() ? 0.0 : fit.trace.back()},
                        {"norms", norms_to_json(fit.norms)},
                        {"wall_seconds", deterministic ? 0.0 : fit.wall_seconds}};
}

std::string pipeline_record(const PipelineResult& result, bool deterministic) {
  nlohmann::json active{{"S1", result.active.S1},
                        {"S2", nlohmann::json::array()},
                        {"threshold1", result.active.threshold1},
                        {"threshold2", result.active.threshold2}};
  for (const auto& [j, k] : result.active.S2) active["S2"].push_back({j, k});

  nlohmann::json rec{{"plan", plan_to_json(result.plan)},
                     {"initial", fit_to_json(result.initial, deterministic)},
                     {"active_sets", active},
                     {"final", fit_to_json(result.final_fit, deterministic)},
                     {"intercept_only", result.intercept_only},
                     {"wall_seconds", deterministic ? 0.0 : result.wall_seconds}};
  if (result.recovery) {
    const RecoveryMetrics& m = *result.recovery;
    rec["recovery"] = nlohmann::json{{"contain1", m.contain1},   {"contain2", m.contain2},
                                     {"gamma1", m.gamma1},       {"gamma2", m.gamma2},
                                     {"precision1", m.precision1}, {"recall1", m.recall1},
                                     {"precision2", m.precision2}, {"recall2", m.recall2}};
  }
  return rec.dump(2);
}

}  // namespace anovanet
