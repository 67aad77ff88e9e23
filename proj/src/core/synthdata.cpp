#include "core/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "core/lowerbound.hpp"
#include "core/parallel.hpp"
#include "core/quadrature.hpp"
#include "core/rng.hpp"

namespace anovanet {

void DgpConfig::validate() const {
  if (d < 1) throw std::invalid_argument("dimension must be >= 1");
  if (static_cast<int>(S1.size()) > d) throw std::invalid_argument("|S1| exceeds dimension");
  for (const int j : S1)
    if (j < 1 || j > d) throw std::invalid_argument("S1 index out of range");
  for (const auto& [j, k] : S2)
    if (j < 1 || k <= j || k > d)
      throw std::invalid_argument("S2 pair must satisfy 1 <= j < k <= d");
  for (std::size_t i = 1; i < S1.size(); ++i)
    if (S1[i] <= S1[i - 1]) throw std::invalid_argument("S1 must be strictly increasing");
  for (std::size_t i = 1; i < S2.size(); ++i)
    if (S2[i] <= S2[i - 1]) throw std::invalid_argument("S2 must be strictly increasing");
  if (!(sigma_eps >= 0)) throw std::invalid_argument("noise level must be >= 0");
  if (!(beta1 > 0) || !(beta2 > 0)) throw std::invalid_argument("smoothness must be positive");
  if (!(amp_uni_lo > 0) || !(amp_uni_hi >= amp_uni_lo) || !(amp_bi_lo > 0) ||
      !(amp_bi_hi >= amp_bi_lo))
    throw std::invalid_argument("amplitude ranges must be positive and ordered");
  if (!(B > 0)) throw std::invalid_argument("truncation bound must be positive");
  if (covariates == McLaw::independent_beta && (!(beta_a > 0) || !(beta_b > 0)))
    throw std::invalid_argument("beta law shapes must be positive");
}

namespace {

constexpr int kProbePoints = 101;

bool use_bump(Family fam, std::size_t ordinal) {
  if (fam == Family::bump) return true;
  if (fam == Family::harmonic) return false;
  return ordinal % 2 == 1;
}

HarmonicUni harmonic_uni_atom(Rng& rng, const DgpConfig& cfg, int j) {
  HarmonicUni src;
  const double a = rng.uniform(cfg.amp_uni_lo, cfg.amp_uni_hi) * (rng.uniform() < 0.5 ? -1 : 1);
  const int k = 1 + (j - 1) % 3;
  src.terms.push_back({a, k});
  src.terms.push_back({a / 2.0, k + 1});
  return src;
}

HarmonicBi harmonic_bi_atom(Rng& rng, const DgpConfig& cfg, int j, int k) {
  HarmonicBi src;
  const double b = rng.uniform(cfg.amp_bi_lo, cfg.amp_bi_hi) * (rng.uniform() < 0.5 ? -1 : 1);
  src.terms.push_back({b, 1 + (j - 1) % 2, 1 + (k - 1) % 2});
  return src;
}

BumpUni bump_uni_atom(Rng& rng, const DgpConfig& cfg) {
  BumpUni src;
  const int m = 4;
  src.h = 1.0 / m;
  src.beta = cfg.beta1;
  // The atom sup is amp * h^beta * sup|K|; rescale so amplitude ranges mean
  // the same thing across families.
  src.amp = rng.uniform(cfg.amp_uni_lo, cfg.amp_uni_hi) * (rng.uniform() < 0.5 ? -1 : 1) /
            (std::pow(src.h, src.beta) * bump_kernel_sup());
  const int c1 = rng.uniform_int(1, m);
  int c2 = rng.uniform_int(1, m - 1);
  if (c2 >= c1) ++c2;
  src.cells = {std::min(c1, c2), std::max(c1, c2)};
  return src;
}

BumpBi bump_bi_atom(Rng& rng, const DgpConfig& cfg) {
  BumpBi src;
  const int m = 3;
  src.h = 1.0 / m;
  src.beta = cfg.beta2;
  const double k_sup = bump_kernel_sup();
  src.amp = rng.uniform(cfg.amp_bi_lo, cfg.amp_bi_hi) * (rng.uniform() < 0.5 ? -1 : 1) /
            (std::pow(src.h, src.beta) * k_sup * k_sup);
  src.cells = {{rng.uniform_int(1, m), rng.uniform_int(1, m)}};
  return src;
}

}  // namespace

StructuredModel make_truth(const DgpConfig& cfg, SignalReport* report) {
  cfg.validate();
  StructuredModel m;
  m.d = cfg.d;
  m.B = cfg.B;

  Rng mu_rng(Rng::derive(cfg.seed, 1));
  m.mu = mu_rng.uniform(-0.5, 0.5);

  std::size_t ordinal = 0;
  for (const int j : cfg.S1) {
    Rng rng(Rng::derive(cfg.seed, 100 + j));
    UniComponent comp;
    if (use_bump(cfg.family, ordinal))
      comp.source = bump_uni_atom(rng, cfg);
    else
      comp.source = harmonic_uni_atom(rng, cfg, j);
    m.uni[j] = std::move(comp);
    ++ordinal;
  }
  ordinal = 0;
  for (const auto& [j, k] : cfg.S2) {
    Rng rng(Rng::derive(cfg.seed, 100000 + static_cast<std::uint64_t>(j) * 1000 + k));
    BiComponent comp;
    if (use_bump(cfg.family, ordinal))
      comp.source = bump_bi_atom(rng, cfg);
    else
      comp.source = harmonic_bi_atom(rng, cfg, j, k);
    m.bi[{j, k}] = std::move(comp);
    ++ordinal;
  }
  m.check_valid();

  // Probe-grid amplitude budget: sup of the full sum is bounded by |mu| plus
  // per-component probe sups because components touch disjoint coordinates
  // only through the shared sum.
  double sup_total = std::fabs(m.mu);
  for (const auto& [j, comp] : m.uni) {
    double s = 0;
    for (int i = 0; i < kProbePoints; ++i)
      s = std::max(s, std::fabs(comp.eval(i / static_cast<double>(kProbePoints - 1))));
    sup_total += s;
  }
  for (const auto& [jk, comp] : m.bi) {
    double s = 0;
    for (int a = 0; a < kProbePoints; ++a)
      for (int b = 0; b < kProbePoints; ++b)
        s = std::max(s, std::fabs(comp.eval(a / static_cast<double>(kProbePoints - 1),
                                            b / static_cast<double>(kProbePoints - 1))));
    sup_total += s;
  }
  if (sup_total > cfg.B)
    throw std::runtime_error("amplitude budget violated: sup bound " + std::to_string(sup_total) +
                             " exceeds B=" + std::to_string(cfg.B));

  if (report) {
    const Quad1D rule = Quad1D::gauss_legendre(kDefaultGaussOrder);
    const Quad2D rule2 = Quad2D::tensor(rule, rule);
    report->min_uni_l2 = std::numeric_limits<double>::infinity();
    report->min_bi_l2 = std::numeric_limits<double>::infinity();
    report->sup_abs = sup_total;
    for (const auto& [j, comp] : m.uni)
      report->min_uni_l2 = std::min(
          report->min_uni_l2, l2_norm_1d([&](double x) { return comp.eval(x); }, rule));
    for (const auto& [jk, comp] : m.bi)
      report->min_bi_l2 =
          std::min(report->min_bi_l2,
                   l2_norm_2d([&](double x, double y) { return comp.eval(x, y); }, rule2));
  }
  return m;
}

Dataset sample_dataset(const StructuredModel& truth, const DgpConfig& cfg, int threads) {
  cfg.validate();
  if (truth.d != cfg.d) throw std::invalid_argument("truth dimension does not match config");
  if (cfg.n < 1) throw std::invalid_argument("sample count must be >= 1");

  Dataset ds;
  ds.seed = cfg.seed;
  ds.X.resize(cfg.n, cfg.d);
  ds.y.resize(cfg.n);
  ds.truth = std::make_shared<StructuredModel>(truth);

  const double half_width = cfg.sigma_eps * std::sqrt(3.0);
  parallel_for(cfg.n, threads, [&](long i) {
    Rng rng(Rng::derive(cfg.seed, 1000000 + static_cast<std::uint64_t>(i)));
    std::vector<double> row(static_cast<std::size_t>(cfg.d));
    for (int j = 0; j < cfg.d; ++j) {
      const double x = cfg.covariates == McLaw::uniform ? rng.uniform()
                                                        : rng.beta(cfg.beta_a, cfg.beta_b);
      row[static_cast<std::size_t>(j)] = x;
      ds.X(i, j) = x;
    }
    double eps = 0;
    if (cfg.sigma_eps > 0)
      eps = cfg.noise == NoiseLaw::gaussian ? cfg.sigma_eps * rng.normal()
                                            : rng.uniform(-half_width, half_width);
    ds.y(i) = truth.eval(row) + eps;
  });
  return ds;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& ds) {
  const long n = ds.n();
  if (n < 2) throw std::invalid_argument("need at least two rows to split");
  const long n1 = (n + 1) / 2;
  Dataset a, b;
  a.X = ds.X.topRows(n1);
  a.y = ds.y.head(n1);
  b.X = ds.X.bottomRows(n - n1);
  b.y = ds.y.tail(n - n1);
  a.truth = ds.truth;
  b.truth = ds.truth;
  a.seed = ds.seed;
  b.seed = ds.seed;
  return {std::move(a), std::move(b)};
}

}  // namespace anovanet
