#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "core/structured_model.hpp"

namespace anovanet {

enum class Family { harmonic, bump, mixed };
enum class NoiseLaw { gaussian, bounded };

// Ground-truth recipe: which components exist, which atom family builds them,
// how strong they are, and how the data around them is sampled.
struct DgpConfig {
  long n = 0;
  int d = 0;
  std::vector<int> S1;                       // active feature indices, 1-based
  std::vector<std::pair<int, int>> S2;       // active ordered pairs, 1-based
  Family family = Family::harmonic;
  double amp_uni_lo = 0.5, amp_uni_hi = 1.0;
  double amp_bi_lo = 0.5, amp_bi_hi = 1.0;
  double beta1 = 2.0, beta2 = 2.0;
  double sigma_eps = 1.0;
  NoiseLaw noise = NoiseLaw::gaussian;
  McLaw covariates = McLaw::uniform;
  double beta_a = 2.0, beta_b = 2.0;         // shape of the independent-beta law
  double B = 10.0;
  std::uint64_t seed = 0;

  void validate() const;  // throws std::invalid_argument
};

// Minimal quadrature L2 norms across generated components; +inf when a class
// is empty. Supports minimum-signal-strength checks in experiments.
struct SignalReport {
  double min_uni_l2 = 0;
  double min_bi_l2 = 0;
  double sup_abs = 0;  // probe-grid sup of the full truth
};

struct Dataset {
  Eigen::MatrixXd X;   // n x d, entries in [0,1]
  Eigen::VectorXd y;
  std::shared_ptr<const StructuredModel> truth;  // may be null
  std::uint64_t seed = 0;

  long n() const { return X.rows(); }
  int d() const { return static_cast<int>(X.cols()); }
};

// Builds an identifiable truth: zero-integral univariate atoms and
// zero-marginal bivariate atoms on exactly the requested supports.
// Throws if the probe-grid sup norm exceeds cfg.B.
StructuredModel make_truth(const DgpConfig& cfg, SignalReport* report = nullptr);

// X i.i.d. from the covariate law, y = truth(X) + noise; deterministic given
// cfg.seed with a per-row derived stream.
Dataset sample_dataset(const StructuredModel& truth, const DgpConfig& cfg, int threads = 1);

// Order-preserving halves of sizes ceil(n/2), floor(n/2).
std::pair<Dataset, Dataset> split_dataset(const Dataset& ds);

}  // namespace anovanet
