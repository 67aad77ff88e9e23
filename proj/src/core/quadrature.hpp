#pragma once

#include <functional>
#include <vector>

#include "core/grid_fn.hpp"

namespace anovanet {

using Fn1 = std::function<double(double)>;
using Fn2 = std::function<double(double, double)>;

// Gauss-Legendre rule mapped to [0,1]: weights sum to 1, exact for
// polynomials up to degree 2Q-1.
struct Quad1D {
  std::vector<double> nodes;
  std::vector<double> weights;

  static Quad1D gauss_legendre(int q);
  int size() const { return static_cast<int>(nodes.size()); }
};

struct Quad2D {
  Quad1D x;
  Quad1D y;
  static Quad2D tensor(const Quad1D& rx, const Quad1D& ry) { return {rx, ry}; }
};

inline constexpr int kDefaultQuadNodes = 257;  // marginal grid resolution
inline constexpr int kDefaultGaussOrder = 64;  // nodes per axis

double integrate_1d(const Fn1& f, const Quad1D& rule);
double integrate_2d(const Fn2& f, const Quad2D& rule);

// Gauss-Legendre integral over a subinterval [a, b] (rule mapped affinely).
double integrate_cell_1d(const Fn1& f, const Quad1D& rule, double a, double b);
double integrate_cell_2d(const Fn2& f, const Quad2D& rule, double ax, double bx,
                         double ay, double by);

enum class Axis { x, y };

// Integrates the named axis out; returns a grid interpolant in the other
// variable on `grid_count` uniform nodes.
GridFn marginal_1d(const Fn2& f, Axis integrate_out, const Quad1D& rule,
                   int grid_count = kDefaultQuadNodes);

double l2_norm_1d(const Fn1& f, const Quad1D& rule);
double l2_norm_2d(const Fn2& f, const Quad2D& rule);

double empirical_norm(const std::vector<double>& values);

}  // namespace anovanet
