#pragma once

#include <optional>
#include <string>
#include <vector>

#include "core/train.hpp"

namespace anovanet {

struct ActiveSets {
  std::vector<int> S1;                       // selected univariate keys, sorted
  std::vector<std::pair<int, int>> S2;       // selected pairs, sorted
  double threshold1 = 0;                     // c1 * lambda1
  double threshold2 = 0;
  std::map<ComponentKey, double> norms;      // the table the cut was made from

  bool empty() const { return S1.empty() && S2.empty(); }
};

// Inclusive cut: keep keys whose recorded norm is >= threshold.
ActiveSets threshold_components(const FitResult& fit, const HyperPlan& plan);

struct RecoveryMetrics {
  bool contain1 = false, contain2 = false;   // S subset of S-hat per order
  int gamma1 = 0, gamma2 = 0;                // false positives per order
  double precision1 = 1, recall1 = 1;
  double precision2 = 1, recall2 = 1;
};

// Empty-set conventions: recall vacuously 1 when the true set is empty,
// precision vacuously 1 when the estimate is empty.
RecoveryMetrics recovery_metrics(const ActiveSets& sets, const std::vector<int>& S1,
                                 const std::vector<std::pair<int, int>>& S2);

struct PipelineResult {
  HyperPlan plan;                  // plan realized on the fitting half
  FitResult initial;
  ActiveSets active;
  FitResult final_fit;             // ANOVA-projected final model
  bool intercept_only = false;     // empty active sets fallback
  std::optional<RecoveryMetrics> recovery;  // present when ds carries a truth
  double wall_seconds = 0;
};

// Sample split, penalized fit on the first half, inclusive thresholding of
// the first-half norms, unpenalized refit on the second half restricted to
// the selected keys (same widths), identifiability projection of the result.
// plan.sigma_hat <= 0 requests a pilot estimate on the fitting half; the plan
// is recomputed for the fitting-half size either way.
PipelineResult run_pipeline(const Dataset& ds, const HyperPlan& plan, const OptConfig& opt);

// JSON run record: plan, thresholds, norm tables, active sets, metrics,
// timing. deterministic=true zeroes wall-clock fields.
std::string pipeline_record(const PipelineResult& result, bool deterministic);

}  // namespace anovanet
