#include "core/structured_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "core/lowerbound.hpp"
#include "core/rng.hpp"

namespace anovanet {

std::string ComponentKey::str() const {
  if (is_uni()) return "u:" + std::to_string(j);
  return "b:" + std::to_string(j) + "-" + std::to_string(k);
}

namespace {

double harmonic_uni_eval(const HarmonicUni& h, double x) {
  constexpr double two_pi = 6.283185307179586476925286766559;
  double acc = 0.0;
  for (const auto& t : h.terms) acc += t.a * std::cos(two_pi * t.k * x);
  return acc;
}

double harmonic_bi_eval(const HarmonicBi& h, double x, double y) {
  constexpr double two_pi = 6.283185307179586476925286766559;
  double acc = 0.0;
  for (const auto& t : h.terms)
    acc += t.b * std::cos(two_pi * t.p * x) * std::cos(two_pi * t.q * y);
  return acc;
}

double bump_uni_source_eval(const BumpUni& s, double x) {
  const double scale = s.amp * std::pow(s.h, s.beta);
  double acc = 0.0;
  for (const int c : s.cells) {
    const double center = (c - 0.5) * s.h;
    acc += scale * bump_kernel((x - center) / s.h);
  }
  return acc;
}

double bump_bi_source_eval(const BumpBi& s, double x, double y) {
  const double scale = s.amp * std::pow(s.h, s.beta);
  double acc = 0.0;
  for (const auto& [cx, cy] : s.cells) {
    const double ux = (x - (cx - 0.5) * s.h) / s.h;
    const double uy = (y - (cy - 0.5) * s.h) / s.h;
    acc += scale * bump_kernel(ux) * bump_kernel(uy);
  }
  return acc;
}

}  // namespace

double UniComponent::source_eval(double x) const {
  if (const auto* net = std::get_if<Mlp>(&source)) return net->eval1(x);
  if (const auto* h = std::get_if<HarmonicUni>(&source)) return harmonic_uni_eval(*h, x);
  if (const auto* bmp = std::get_if<BumpUni>(&source)) return bump_uni_source_eval(*bmp, x);
  return std::get<GridFn>(source)(x);
}

double UniComponent::eval(double x) const {
  double acc = source_eval(x) + shift;
  for (const auto& g : addends) acc += g(x);
  return acc;
}

double BiComponent::source_eval(double x, double y) const {
  if (const auto* net = std::get_if<Mlp>(&source)) return net->eval2(x, y);
  if (const auto* h = std::get_if<HarmonicBi>(&source)) return harmonic_bi_eval(*h, x, y);
  return bump_bi_source_eval(std::get<BumpBi>(source), x, y);
}

double BiComponent::eval(double x, double y) const {
  double acc = source_eval(x, y) + shift;
  for (const auto& g : addends_x) acc += g(x);
  for (const auto& g : addends_y) acc += g(y);
  return acc;
}

double StructuredModel::eval_raw(const double* x) const {
  double acc = mu;
  for (const auto& [j, comp] : uni) acc += comp.eval(x[j - 1]);
  for (const auto& [jk, comp] : bi) acc += comp.eval(x[jk.first - 1], x[jk.second - 1]);
  return acc;
}

double StructuredModel::eval(const double* x) const {
  return std::clamp(eval_raw(x), -B, B);
}

double StructuredModel::eval(const std::vector<double>& x) const {
  if (static_cast<int>(x.size()) != d)
    throw std::invalid_argument("evaluation point dimension mismatch");
  return eval(x.data());
}

std::vector<ComponentKey> StructuredModel::keys() const {
  std::vector<ComponentKey> out;
  out.reserve(uni.size() + bi.size());
  for (const auto& [j, _] : uni) out.push_back(ComponentKey::uni(j));
  for (const auto& [jk, _] : bi) out.push_back(ComponentKey::bi(jk.first, jk.second));
  return out;
}

std::vector<ComponentKey> all_component_keys(int d) {
  std::vector<ComponentKey> out;
  out.reserve(static_cast<std::size_t>(d) + static_cast<std::size_t>(d) * (d - 1) / 2);
  for (int j = 1; j <= d; ++j) out.push_back(ComponentKey::uni(j));
  for (int j = 1; j <= d; ++j)
    for (int k = j + 1; k <= d; ++k) out.push_back(ComponentKey::bi(j, k));
  std::sort(out.begin(), out.end());
  return out;
}

void StructuredModel::check_valid() const {
  if (d < 1) throw std::invalid_argument("model dimension must be >= 1");
  if (!(B > 0)) throw std::invalid_argument("truncation bound must be positive");
  for (const auto& [j, comp] : uni) {
    if (j < 1 || j > d) throw std::invalid_argument("univariate key out of range");
    if (const auto* net = std::get_if<Mlp>(&comp.source))
      if (net->input_dim() != 1) throw std::invalid_argument("univariate slot holds a 2-input net");
  }
  for (const auto& [jk, comp] : bi) {
    if (jk.first < 1 || jk.second <= jk.first || jk.second > d)
      throw std::invalid_argument("bivariate key not strictly ordered within dimension");
    if (const auto* net = std::get_if<Mlp>(&comp.source))
      if (net->input_dim() != 2) throw std::invalid_argument("bivariate slot holds a 1-input net");
  }
}

double AnovaReport::max_uni_after() const {
  double m = 0;
  for (const auto& [_, v] : uni_defect_after) m = std::max(m, v);
  return m;
}
double AnovaReport::max_bi_after() const {
  double m = 0;
  for (const auto& [_, v] : bi_defect_after) m = std::max(m, v);
  return m;
}
double AnovaReport::max_uni_before() const {
  double m = 0;
  for (const auto& [_, v] : uni_defect_before) m = std::max(m, v);
  return m;
}
double AnovaReport::max_bi_before() const {
  double m = 0;
  for (const auto& [_, v] : bi_defect_before) m = std::max(m, v);
  return m;
}

std::map<ComponentKey, double> component_l2_errors(const StructuredModel& fit,
                                                   const StructuredModel& truth,
                                                   const Quad1D& rule) {
  const AnovaReport rf = anova_defects(fit, rule);
  const AnovaReport rt = anova_defects(truth, rule);
  const double uni_gate = 100 * kUniDefectTol;
  const double bi_gate = 10 * kBiDefectTol;
  if (rf.max_uni_before() > uni_gate || rf.max_bi_before() > bi_gate ||
      rt.max_uni_before() > uni_gate || rt.max_bi_before() > bi_gate)
    throw std::invalid_argument(
        "component-wise errors require identifiable (projected) models");

  const Quad2D rule2 = Quad2D::tensor(rule, rule);
  std::map<ComponentKey, double> out;
  std::vector<ComponentKey> all;
  for (const auto& k : fit.keys()) all.push_back(k);
  for (const auto& k : truth.keys())
    if (std::find(all.begin(), all.end(), k) == all.end()) all.push_back(k);
  std::sort(all.begin(), all.end());

  for (const auto& key : all) {
    if (key.is_uni()) {
      const auto* a = fit.uni.count(key.j) ? &fit.uni.at(key.j) : nullptr;
      const auto* b = truth.uni.count(key.j) ? &truth.uni.at(key.j) : nullptr;
      out[key] = l2_norm_1d(
          [&](double x) {
            return (a ? a->eval(x) : 0.0) - (b ? b->eval(x) : 0.0);
          },
          rule);
    } else {
      const auto jk = std::make_pair(key.j, key.k);
      const auto* a = fit.bi.count(jk) ? &fit.bi.at(jk) : nullptr;
      const auto* b = truth.bi.count(jk) ? &truth.bi.at(jk) : nullptr;
      out[key] = l2_norm_2d(
          [&](double x, double y) {
            return (a ? a->eval(x, y) : 0.0) - (b ? b->eval(x, y) : 0.0);
          },
          rule2);
    }
  }
  return out;
}

McError mc_l2_error(const StructuredModel& fit, const StructuredModel& truth,
                    long n_mc, std::uint64_t seed, McLaw law, double beta_a,
                    double beta_b) {
  if (n_mc <= 0) throw std::invalid_argument("Monte Carlo sample count must be positive");
  if (fit.d != truth.d) throw std::invalid_argument("model dimensions differ");
  const int d = fit.d;
  std::vector<double> x(static_cast<std::size_t>(d));
  double sum = 0, sum_sq = 0;
  for (long i = 0; i < n_mc; ++i) {
    Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(i)));
    for (int c = 0; c < d; ++c)
      x[static_cast<std::size_t>(c)] =
          law == McLaw::uniform ? rng.uniform() : rng.beta(beta_a, beta_b);
    const double diff = fit.eval(x.data()) - truth.eval(x.data());
    const double sq = diff * diff;
    sum += sq;
    sum_sq += sq * sq;
  }
  McError e;
  e.n_mc = n_mc;
  e.estimate = sum / static_cast<double>(n_mc);
  const double var =
      std::max(0.0, sum_sq / static_cast<double>(n_mc) - e.estimate * e.estimate);
  e.std_error = std::sqrt(var / static_cast<double>(n_mc));
  return e;
}

}  // namespace anovanet
