#include "core/quadrature.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace anovanet {
namespace {

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw std::domain_error(std::string("non-finite ") + what);
}

}  // namespace

Quad1D Quad1D::gauss_legendre(int q) {
  if (q < 1) throw std::invalid_argument("quadrature order must be >= 1");
  // Newton iteration on P_q with Chebyshev initial guesses; standard
  // symmetric construction on [-1,1], then mapped to [0,1].
  Quad1D rule;
  rule.nodes.resize(static_cast<std::size_t>(q));
  rule.weights.resize(static_cast<std::size_t>(q));
  const int half = (q + 1) / 2;
  constexpr double pi = 3.14159265358979323846264338327950288;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(pi * (i + 0.75) / (q + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= q; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = q * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    // x is the (i+1)-th root from the +1 end; mirror for the other half.
    rule.nodes[static_cast<std::size_t>(q - 1 - i)] = 0.5 * (x + 1.0);
    rule.nodes[static_cast<std::size_t>(i)] = 0.5 * (1.0 - x);
    rule.weights[static_cast<std::size_t>(q - 1 - i)] = 0.5 * w;
    rule.weights[static_cast<std::size_t>(i)] = 0.5 * w;
  }
  return rule;
}

double integrate_1d(const Fn1& f, const Quad1D& rule) {
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double v = f(rule.nodes[i]);
    check_finite(v, "integrand value");
    acc += rule.weights[i] * v;
  }
  return acc;
}

double integrate_2d(const Fn2& f, const Quad2D& rule) {
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.x.nodes.size(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < rule.y.nodes.size(); ++j) {
      const double v = f(rule.x.nodes[i], rule.y.nodes[j]);
      check_finite(v, "integrand value");
      row += rule.y.weights[j] * v;
    }
    acc += rule.x.weights[i] * row;
  }
  return acc;
}

double integrate_cell_1d(const Fn1& f, const Quad1D& rule, double a, double b) {
  const double len = b - a;
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double v = f(a + len * rule.nodes[i]);
    check_finite(v, "integrand value");
    acc += rule.weights[i] * v;
  }
  return acc * len;
}

double integrate_cell_2d(const Fn2& f, const Quad2D& rule, double ax, double bx,
                         double ay, double by) {
  const double lx = bx - ax, ly = by - ay;
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.x.nodes.size(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < rule.y.nodes.size(); ++j) {
      const double v = f(ax + lx * rule.x.nodes[i], ay + ly * rule.y.nodes[j]);
      check_finite(v, "integrand value");
      row += rule.y.weights[j] * v;
    }
    acc += rule.x.weights[i] * row;
  }
  return acc * lx * ly;
}

GridFn marginal_1d(const Fn2& f, Axis integrate_out, const Quad1D& rule,
                   int grid_count) {
  const auto nodes = GridFn::uniform_nodes(grid_count);
  std::vector<double> ys(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double t = nodes[i];
    double acc = 0.0;
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
      const double s = rule.nodes[j];
      const double v = integrate_out == Axis::y ? f(t, s) : f(s, t);
      check_finite(v, "marginal integrand value");
      acc += rule.weights[j] * v;
    }
    ys[i] = acc;
  }
  return GridFn(nodes, std::move(ys));
}

double l2_norm_1d(const Fn1& f, const Quad1D& rule) {
  const double sq = integrate_1d([&](double x) { const double v = f(x); return v * v; }, rule);
  return std::sqrt(std::max(0.0, sq));
}

double l2_norm_2d(const Fn2& f, const Quad2D& rule) {
  const double sq =
      integrate_2d([&](double x, double y) { const double v = f(x, y); return v * v; }, rule);
  return std::sqrt(std::max(0.0, sq));
}

double empirical_norm(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("empirical norm of empty sample");
  double acc = 0.0;
  for (const double v : values) acc += v * v;
  return std::sqrt(acc / static_cast<double>(values.size()));
}

}  // namespace anovanet
