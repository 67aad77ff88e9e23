#include "core/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "core/mlp.hpp"
#include "core/parallel.hpp"
#include "core/rng.hpp"

namespace anovanet {

std::vector<int> HyperPlan::uni_sizes() const {
  std::vector<int> sizes{1};
  for (int l = 0; l < depth1; ++l) sizes.push_back(width1);
  sizes.push_back(1);
  return sizes;
}

std::vector<int> HyperPlan::bi_sizes() const {
  std::vector<int> sizes{2};
  for (int l = 0; l < depth2; ++l) sizes.push_back(width2);
  sizes.push_back(1);
  return sizes;
}

namespace {

int realized_width(int N) {
  const double w = N * std::max(1.0, std::log(static_cast<double>(N)));
  return std::max(4, static_cast<int>(std::ceil(w)));
}

double capacity_v(int N) {
  const double lg = std::log(static_cast<double>(N));
  return std::max(1.0, static_cast<double>(N) * N * lg * lg * lg);
}

int width_param(long n, double exponent) {
  return std::max(2, static_cast<int>(std::llround(std::pow(static_cast<double>(n), exponent))));
}

}  // namespace

HyperPlan plan_lowdim(long n, int d, double beta1, double beta2, double B) {
  if (n < 2 || d < 1 || !(beta1 > 0) || !(beta2 > 0) || !(B > 0))
    throw std::invalid_argument("invalid plan inputs");
  HyperPlan p;
  p.regime = Regime::lowdim;
  p.n = n;
  p.d = d;
  p.beta1 = beta1;
  p.beta2 = beta2;
  p.B = B;
  p.N1 = width_param(n, 1.0 / (2.0 * (2.0 * beta1 + 1.0)));
  p.N2 = width_param(n, 1.0 / (2.0 * (beta2 + 1.0)));
  p.width1 = realized_width(p.N1);
  p.width2 = realized_width(p.N2);
  p.V1 = capacity_v(p.N1);
  p.V2 = capacity_v(p.N2);
  p.lambda1 = 0;
  p.lambda2 = 0;
  return p;
}

HyperPlan plan_highdim(long n, int d, double beta1, double beta2, double sigma_hat,
                       const PlanConstants& constants, double B, bool erm_free) {
  if (n < 2 || d < 1 || !(beta1 > 0) || !(beta2 > 0) || !(sigma_hat >= 0) || !(B > 0))
    throw std::invalid_argument("invalid plan inputs");
  HyperPlan p;
  p.regime = erm_free ? Regime::highdim_erm_free : Regime::highdim_rsc;
  p.n = n;
  p.d = d;
  p.beta1 = beta1;
  p.beta2 = beta2;
  p.B = B;
  p.sigma_hat = sigma_hat;
  p.C3 = constants.C3;
  p.C4 = constants.C4;
  p.c1 = constants.c1;
  p.c2 = constants.c2;
  p.depth1 = constants.depth;
  p.depth2 = constants.depth;
  const double e1 = erm_free ? 1.0 / (2.0 * (1.0 + 4.0 * beta1)) : 1.0 / (2.0 * (1.0 + 2.0 * beta1));
  const double e2 = erm_free ? 1.0 / (2.0 * (1.0 + 2.0 * beta2)) : 1.0 / (2.0 * (1.0 + beta2));
  p.N1 = width_param(n, e1);
  p.N2 = width_param(n, e2);
  p.width1 = realized_width(p.N1);
  p.width2 = realized_width(p.N2);
  p.V1 = capacity_v(p.N1);
  p.V2 = capacity_v(p.N2);
  const double nn = static_cast<double>(n);
  const double logn = std::log(nn);
  const double logd = std::log(static_cast<double>(d));
  p.lambda1 = p.C3 * sigma_hat * std::sqrt(p.V1 * logn / nn + 2.0 * logd / nn);
  p.lambda2 = p.C4 * sigma_hat * std::sqrt(p.V2 * logn / nn + 3.0 * logd / nn);
  return p;
}

namespace {

struct SubnetSlot {
  ComponentKey key;
  Mlp net;
  MlpBatch batch;
  MlpGrads grads;
  AdamState adam;
  Eigen::MatrixXd X;  // n x 1 or n x 2 slice of the design
  double lambda = 0;
  double smooth_norm = 0;
};

void validate_keys(const std::vector<ComponentKey>& keys, int d) {
  for (const auto& key : keys) {
    if (key.is_uni()) {
      if (key.j < 1 || key.j > d) throw std::invalid_argument("component index out of range");
    } else if (key.j < 1 || key.k <= key.j || key.k > d)
      throw std::invalid_argument("component pair out of range");
  }
  std::vector<ComponentKey> sorted = keys;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end(),
                         [](const ComponentKey& a, const ComponentKey& b) {
                           return !(a < b) && !(b < a);
                         }) != sorted.end())
    throw std::invalid_argument("duplicate component keys");
}

struct ObjectiveDetail {
  double objective = 0;
  double loss = 0;
  std::map<ComponentKey, double> norms;
};

// Single fresh pass through a model: per-component values at the sample
// points, truncation at B in the penalized regimes, smoothed group penalty.
ObjectiveDetail objective_detail(const Dataset& ds, const StructuredModel& m,
                                 const HyperPlan& plan, double eps_norm) {
  const long n = ds.n();
  const bool clamp = plan.regime != Regime::lowdim;
  ObjectiveDetail out;
  Eigen::VectorXd total = Eigen::VectorXd::Constant(n, m.mu);
  double penalty = 0;
  const auto accumulate = [&](const ComponentKey& key, const Eigen::VectorXd& vals,
                              double lambda) {
    Eigen::VectorXd v = vals;
    if (clamp) v = v.cwiseMax(-m.B).cwiseMin(m.B);
    total += v;
    const double nsq = v.squaredNorm() / static_cast<double>(n);
    out.norms[key] = std::sqrt(nsq);
    if (lambda > 0) penalty += lambda * std::sqrt(nsq + eps_norm * eps_norm);
  };
  for (const auto& [j, comp] : m.uni) {
    Eigen::VectorXd vals(n);
    for (long i = 0; i < n; ++i) vals(i) = comp.eval(ds.X(i, j - 1));
    accumulate(ComponentKey::uni(j), vals, clamp ? plan.lambda1 : 0.0);
  }
  for (const auto& [jk, comp] : m.bi) {
    Eigen::VectorXd vals(n);
    for (long i = 0; i < n; ++i) vals(i) = comp.eval(ds.X(i, jk.first - 1), ds.X(i, jk.second - 1));
    accumulate(ComponentKey::bi(jk.first, jk.second), vals, clamp ? plan.lambda2 : 0.0);
  }
  out.loss = (ds.y - total).squaredNorm() / static_cast<double>(n);
  out.objective = out.loss + penalty;
  return out;
}

struct RestartOutcome {
  StructuredModel model;
  std::vector<double> trace;
  double objective = std::numeric_limits<double>::infinity();
};

RestartOutcome run_restart(const Dataset& ds, const HyperPlan& plan,
                           const std::vector<ComponentKey>& keys, const OptConfig& opt,
                           bool penalized, std::uint64_t restart_seed) {
  const long n = ds.n();
  const int K = static_cast<int>(keys.size());
  const bool clamp = penalized;
  const double B = plan.B;

  std::vector<SubnetSlot> slots(static_cast<std::size_t>(K));
  for (int idx = 0; idx < K; ++idx) {
    SubnetSlot& slot = slots[static_cast<std::size_t>(idx)];
    slot.key = keys[static_cast<std::size_t>(idx)];
    const auto sizes = slot.key.is_uni() ? plan.uni_sizes() : plan.bi_sizes();
    slot.net = Mlp::init(sizes, Rng::derive(restart_seed, static_cast<std::uint64_t>(idx)));
    slot.grads.zero_like(slot.net);
    slot.adam.zero_like(slot.net);
    slot.adam.lr = opt.lr;
    slot.lambda = penalized ? (slot.key.is_uni() ? plan.lambda1 : plan.lambda2) : 0.0;
    if (slot.key.is_uni()) {
      slot.X = ds.X.col(slot.key.j - 1);
    } else {
      slot.X.resize(n, 2);
      slot.X.col(0) = ds.X.col(slot.key.j - 1);
      slot.X.col(1) = ds.X.col(slot.key.k - 1);
    }
  }

  Eigen::MatrixXd O(n, K), Oc(n, K);
  Eigen::VectorXd resid(n);
  double mu = 0;
  const double eps2 = opt.eps_norm * opt.eps_norm;

  double best_obj = std::numeric_limits<double>::infinity();
  std::vector<Mlp> best_nets(static_cast<std::size_t>(K));
  double best_mu = 0;
  std::vector<double> trace;
  trace.reserve(static_cast<std::size_t>(opt.steps) + 1);

  const auto forward_all = [&] {
    parallel_for(K, opt.threads, [&](long idx) {
      SubnetSlot& slot = slots[static_cast<std::size_t>(idx)];
      mlp_forward_batch(slot.net, slot.X, slot.batch);
      O.col(idx) = slot.batch.a.back().col(0);
      if (clamp) {
        Oc.col(idx) = O.col(idx).cwiseMax(-B).cwiseMin(B);
      } else {
        Oc.col(idx) = O.col(idx);
      }
    });
    mu = (ds.y - Oc.rowwise().sum()).mean();
    resid = ds.y - Oc.rowwise().sum() - Eigen::VectorXd::Constant(n, mu);
  };

  const auto objective_now = [&] {
    double obj = resid.squaredNorm() / static_cast<double>(n);
    for (int idx = 0; idx < K; ++idx) {
      SubnetSlot& slot = slots[static_cast<std::size_t>(idx)];
      if (slot.lambda > 0) {
        const double nsq = Oc.col(idx).squaredNorm() / static_cast<double>(n);
        slot.smooth_norm = std::sqrt(nsq + eps2);
        obj += slot.lambda * slot.smooth_norm;
      }
    }
    return obj;
  };

  for (int step = 0; step < opt.steps; ++step) {
    const double lr_scale =
        opt.cosine_decay ? 0.5 * (1.0 + std::cos(M_PI * step / std::max(1, opt.steps))) : 1.0;
    forward_all();
    const double obj = objective_now();
    if (!std::isfinite(obj)) throw std::runtime_error("non-finite objective: optimization diverged");
    if (obj < best_obj) {
      best_obj = obj;
      best_mu = mu;
      for (int idx = 0; idx < K; ++idx)
        best_nets[static_cast<std::size_t>(idx)] = slots[static_cast<std::size_t>(idx)].net;
    }
    trace.push_back(best_obj);

    parallel_for(K, opt.threads, [&](long idx) {
      SubnetSlot& slot = slots[static_cast<std::size_t>(idx)];
      Eigen::VectorXd dout(n);
      const double inv_n = 1.0 / static_cast<double>(n);
      for (long i = 0; i < n; ++i) {
        const double raw = O(i, idx);
        const bool inside = !clamp || std::fabs(raw) < B;
        double g = inside ? -2.0 * inv_n * resid(i) : 0.0;
        if (inside && slot.lambda > 0)
          g += slot.lambda * Oc(i, idx) * inv_n / slot.smooth_norm;
        dout(i) = g;
      }
      mlp_backward_batch(slot.net, slot.batch, dout, slot.grads);
      adam_step(slot.net, slot.grads, slot.adam, lr_scale);
    });
  }

  forward_all();
  const double obj = objective_now();
  if (std::isfinite(obj) && obj < best_obj) {
    best_obj = obj;
    best_mu = mu;
    for (int idx = 0; idx < K; ++idx)
      best_nets[static_cast<std::size_t>(idx)] = slots[static_cast<std::size_t>(idx)].net;
  }
  trace.push_back(best_obj);
  if (!std::isfinite(best_obj))
    throw std::runtime_error("non-finite objective: optimization diverged");

  RestartOutcome out;
  out.model.d = plan.d;
  out.model.B = plan.B;
  out.model.mu = best_mu;
  for (int idx = 0; idx < K; ++idx) {
    const ComponentKey& key = keys[static_cast<std::size_t>(idx)];
    if (key.is_uni()) {
      UniComponent comp;
      comp.source = std::move(best_nets[static_cast<std::size_t>(idx)]);
      out.model.uni[key.j] = std::move(comp);
    } else {
      BiComponent comp;
      comp.source = std::move(best_nets[static_cast<std::size_t>(idx)]);
      out.model.bi[{key.j, key.k}] = std::move(comp);
    }
  }
  out.trace = std::move(trace);
  out.objective = best_obj;
  return out;
}

FitResult run_fit(const Dataset& ds, const HyperPlan& plan, std::vector<ComponentKey> keys,
                  const OptConfig& opt, bool penalized) {
  if (ds.n() < 2) throw std::invalid_argument("need at least two samples");
  if (ds.d() != plan.d) throw std::invalid_argument("plan dimension does not match data");
  if (opt.steps < 1 || opt.restarts < 1 || !(opt.lr > 0))
    throw std::invalid_argument("invalid optimizer configuration");
  if (keys.empty()) keys = all_component_keys(plan.d);
  validate_keys(keys, plan.d);
  std::sort(keys.begin(), keys.end());

  const auto t0 = std::chrono::steady_clock::now();
  RestartOutcome best;
  bool any = false;
  std::string last_error = "optimization diverged";
  for (int r = 0; r < opt.restarts; ++r) {
    try {
      RestartOutcome got =
          run_restart(ds, plan, keys, opt, penalized,
                      Rng::derive(opt.seed, 0x5eed0000ull + static_cast<std::uint64_t>(r)));
      if (!any || got.objective < best.objective) best = std::move(got);
      any = true;
    } catch (const std::runtime_error& e) {
      last_error = e.what();
    }
  }
  if (!any) throw std::runtime_error(last_error + " in every restart");

  FitResult fit;
  fit.model = std::move(best.model);
  fit.trace = std::move(best.trace);
  fit.restarts = opt.restarts;
  const ObjectiveDetail detail = objective_detail(ds, fit.model, plan, opt.eps_norm);
  fit.objective = detail.objective;
  fit.train_mse = detail.loss;
  fit.norms = detail.norms;
  fit.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return fit;
}

}  // namespace

FitResult fit_erm(const Dataset& ds, const HyperPlan& plan,
                  const std::vector<ComponentKey>& keys, const OptConfig& opt) {
  if (plan.regime != Regime::lowdim)
    throw std::invalid_argument("joint ERM requires an unpenalized plan");
  return run_fit(ds, plan, keys, opt, /*penalized=*/false);
}

FitResult fit_penalized(const Dataset& ds, const HyperPlan& plan, const OptConfig& opt) {
  if (plan.regime == Regime::lowdim)
    throw std::invalid_argument("penalized fitting requires a high-dimensional plan");
  if (!(plan.lambda1 > 0) || !(plan.lambda2 > 0))
    throw std::invalid_argument("penalty levels must be positive in this regime");
  return run_fit(ds, plan, {}, opt, /*penalized=*/true);
}

double model_objective(const Dataset& ds, const StructuredModel& m, const HyperPlan& plan,
                       double eps_norm) {
  return objective_detail(ds, m, plan, eps_norm).objective;
}

std::map<ComponentKey, double> component_norms(const Dataset& ds, const StructuredModel& m,
                                               double B) {
  const long n = ds.n();
  std::map<ComponentKey, double> norms;
  for (const auto& [j, comp] : m.uni) {
    double acc = 0;
    for (long i = 0; i < n; ++i) {
      const double v = std::clamp(comp.eval(ds.X(i, j - 1)), -B, B);
      acc += v * v;
    }
    norms[ComponentKey::uni(j)] = std::sqrt(acc / static_cast<double>(n));
  }
  for (const auto& [jk, comp] : m.bi) {
    double acc = 0;
    for (long i = 0; i < n; ++i) {
      const double v =
          std::clamp(comp.eval(ds.X(i, jk.first - 1), ds.X(i, jk.second - 1)), -B, B);
      acc += v * v;
    }
    norms[ComponentKey::bi(jk.first, jk.second)] = std::sqrt(acc / static_cast<double>(n));
  }
  return norms;
}

double sigma_hat_pilot(const Dataset& ds) {
  const long n = ds.n();
  const int d = ds.d();
  if (n < 2) throw std::invalid_argument("need at least two samples");
  Eigen::MatrixXd A(n, d + 1);
  A.col(0).setOnes();
  A.rightCols(d) = ds.X;
  Eigen::MatrixXd G = A.transpose() * A;
  G.diagonal().array() += 1e-3 * static_cast<double>(n);
  const Eigen::VectorXd beta = G.ldlt().solve(A.transpose() * ds.y);
  Eigen::VectorXd e = ds.y - A * beta;

  std::vector<double> v(e.data(), e.data() + n);
  const auto median_of = [](std::vector<double>& w) {
    const std::size_t mid = w.size() / 2;
    std::nth_element(w.begin(), w.begin() + static_cast<long>(mid), w.end());
    double m = w[mid];
    if (w.size() % 2 == 0) {
      std::nth_element(w.begin(), w.begin() + static_cast<long>(mid) - 1, w.end());
      m = 0.5 * (m + w[mid - 1]);
    }
    return m;
  };
  const double med = median_of(v);
  for (double& x : v) x = std::fabs(x - med);
  return 1.4826 * median_of(v);
}

RscReport rsc_diagnostic(const Dataset& ds, const StructuredModel& fit,
                         const StructuredModel& reference, const HyperPlan& plan,
                         const std::vector<int>& S1, const std::vector<std::pair<int, int>>& S2,
                         double rho1, double rho2) {
  const long n = ds.n();
  const double B = plan.B;
  RscReport rep;
  Eigen::VectorXd total = Eigen::VectorXd::Zero(n);

  std::map<int, double> uni_nsq;
  std::map<std::pair<int, int>, double> bi_nsq;
  for (int j = 1; j <= plan.d; ++j) {
    const bool in_fit = fit.uni.count(j) > 0;
    const bool in_ref = reference.uni.count(j) > 0;
    if (!in_fit && !in_ref) continue;
    Eigen::VectorXd diff(n);
    for (long i = 0; i < n; ++i) {
      const double x = ds.X(i, j - 1);
      const double a = in_fit ? std::clamp(fit.uni.at(j).eval(x), -B, B) : 0.0;
      const double b = in_ref ? std::clamp(reference.uni.at(j).eval(x), -B, B) : 0.0;
      diff(i) = a - b;
    }
    total += diff;
    uni_nsq[j] = diff.squaredNorm() / static_cast<double>(n);
  }
  for (int j = 1; j <= plan.d; ++j) {
    for (int k = j + 1; k <= plan.d; ++k) {
      const bool in_fit = fit.bi.count({j, k}) > 0;
      const bool in_ref = reference.bi.count({j, k}) > 0;
      if (!in_fit && !in_ref) continue;
      Eigen::VectorXd diff(n);
      for (long i = 0; i < n; ++i) {
        const double x = ds.X(i, j - 1), y = ds.X(i, k - 1);
        const double a = in_fit ? std::clamp(fit.bi.at({j, k}).eval(x, y), -B, B) : 0.0;
        const double b = in_ref ? std::clamp(reference.bi.at({j, k}).eval(x, y), -B, B) : 0.0;
        diff(i) = a - b;
      }
      total += diff;
      bi_nsq[{j, k}] = diff.squaredNorm() / static_cast<double>(n);
    }
  }

  rep.lhs = total.squaredNorm() / static_cast<double>(n);
  double on_uni = 0, off_uni = 0, on_bi = 0, off_bi = 0;
  for (const auto& [j, nsq] : uni_nsq) {
    const bool on = std::find(S1.begin(), S1.end(), j) != S1.end();
    if (on) {
      rep.rhs_uni += nsq;
      on_uni += std::sqrt(nsq);
    } else
      off_uni += std::sqrt(nsq);
  }
  for (const auto& [jk, nsq] : bi_nsq) {
    const bool on = std::find(S2.begin(), S2.end(), jk) != S2.end();
    if (on) {
      rep.rhs_bi += nsq;
      on_bi += std::sqrt(nsq);
    } else
      off_bi += std::sqrt(nsq);
  }
  const double denom = rep.rhs_uni + rep.rhs_bi;
  rep.kappa_sq = denom > 0 ? rep.lhs / denom : std::numeric_limits<double>::infinity();
  const double s1 = static_cast<double>(S1.size());
  const double s2 = static_cast<double>(S2.size());
  rep.cone_lhs = plan.lambda1 * off_uni + plan.lambda2 * off_bi;
  rep.cone_rhs = 4.0 * (s1 * rho1 * rho1 + s2 * rho2 * rho2) + 3.0 * plan.lambda1 * on_uni +
                 3.0 * plan.lambda2 * on_bi + s1 * plan.lambda1 * plan.lambda1 +
                 s2 * plan.lambda2 * plan.lambda2;
  rep.cone_residual = rep.cone_lhs - rep.cone_rhs;
  return rep;
}

}  // namespace anovanet
