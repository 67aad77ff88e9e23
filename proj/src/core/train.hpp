#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "core/structured_model.hpp"
#include "core/synthdata.hpp"

namespace anovanet {

enum class Regime { lowdim, highdim_erm_free, highdim_rsc };

struct PlanConstants {
  double C3 = 0.5;   // scale on the univariate penalty level
  double C4 = 0.5;   // scale on the bivariate penalty level
  double c1 = 1.0;   // univariate screening threshold multiplier
  double c2 = 1.0;   // bivariate screening threshold multiplier
  int depth = 3;     // hidden layers per subnet
};

// Architecture and penalty levels; a pure function of
// (n, d, beta1, beta2, sigma_hat, constants).
struct HyperPlan {
  Regime regime = Regime::lowdim;
  long n = 0;
  int d = 0;
  double beta1 = 2, beta2 = 2;
  int N1 = 2, N2 = 2;
  int depth1 = 3, depth2 = 3;
  int width1 = 4, width2 = 4;     // realized widths ceil(N * max(1, ln N)), floor 4
  double V1 = 1, V2 = 1;          // N^2 (ln N)^3 capped below at 1
  double lambda1 = 0, lambda2 = 0;
  double c1 = 1.0, c2 = 1.0;
  double C3 = 0.5, C4 = 0.5;
  double sigma_hat = 0;
  double B = 10;

  std::vector<int> uni_sizes() const;  // [1, w1, w1, w1, 1] for depth 3
  std::vector<int> bi_sizes() const;
};

HyperPlan plan_lowdim(long n, int d, double beta1, double beta2, double B = 10);

// RSC-regime widths by default; erm_free selects the assumption-free variant
// with wider exponent denominators. Penalty levels
// lambda_i = C * sigma_hat * sqrt(V_i ln n / n + (i+1) ln d / n).
HyperPlan plan_highdim(long n, int d, double beta1, double beta2, double sigma_hat,
                       const PlanConstants& constants = {}, double B = 10,
                       bool erm_free = false);

struct OptConfig {
  int steps = 5000;
  int restarts = 3;
  double lr = 1e-2;
  bool cosine_decay = true;
  int threads = 1;
  std::uint64_t seed = 0;
  double eps_norm = 1e-8;  // group-norm smoothing
};

struct FitResult {
  StructuredModel model;
  std::vector<double> trace;             // best-so-far objective, winning restart
  int restarts = 0;
  double objective = 0;                  // fresh single-pass recomputation
  double train_mse = 0;
  std::map<ComponentKey, double> norms;  // empirical norms of truncated components
  double wall_seconds = 0;
};

// Joint full-batch squared-error minimization over the given component slots
// (empty keys = every univariate and bivariate slot for plan.d).
FitResult fit_erm(const Dataset& ds, const HyperPlan& plan,
                  const std::vector<ComponentKey>& keys, const OptConfig& opt);

// Adds the smoothed group penalty lambda1 sum_j ||phi_j||_{n,eps} +
// lambda2 sum_{k<l} ||phi_kl||_{n,eps}; components truncated at B inside the
// loss and the norms. Rejects lambda = 0.
FitResult fit_penalized(const Dataset& ds, const HyperPlan& plan, const OptConfig& opt);

// Loss (+ penalty when the plan carries positive lambda) of a model on a
// dataset, evaluated in one pass through the model itself.
double model_objective(const Dataset& ds, const StructuredModel& m, const HyperPlan& plan,
                       double eps_norm = 1e-8);

// Empirical norms of the truncated components of a model on a dataset.
std::map<ComponentKey, double> component_norms(const Dataset& ds, const StructuredModel& m,
                                               double B);

// Residual scale from a pilot ridge fit: MAD of residuals times 1.4826.
double sigma_hat_pilot(const Dataset& ds);

struct RscReport {
  double lhs = 0;             // ||sum of component differences||_n^2
  double rhs_uni = 0;         // sum over true univariate support of squared norms
  double rhs_bi = 0;
  double kappa_sq = 0;        // lhs / (rhs_uni + rhs_bi); +inf sentinel when rhs = 0
  double cone_lhs = 0;        // off-support weighted norms
  double cone_rhs = 0;        // 3 * on-support weighted norms + slack terms
  double cone_residual = 0;   // cone_lhs - cone_rhs (<= 0 inside the cone)
};

// Diagnostic only: evaluates the restricted-strong-convexity inequality on the
// fitted direction against a reference model, on the sample points.
RscReport rsc_diagnostic(const Dataset& ds, const StructuredModel& fit,
                         const StructuredModel& reference, const HyperPlan& plan,
                         const std::vector<int>& S1, const std::vector<std::pair<int, int>>& S2,
                         double rho1 = 0, double rho2 = 0);

}  // namespace anovanet
