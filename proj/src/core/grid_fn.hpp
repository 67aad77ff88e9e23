#pragma once

#include <functional>
#include <vector>

namespace anovanet {

// Piecewise-linear interpolant on a strictly increasing node set spanning
// [0, 1]. Evaluation outside the node range clamps to the end values.
struct GridFn {
  std::vector<double> xs;
  std::vector<double> ys;

  GridFn() = default;
  GridFn(std::vector<double> nodes, std::vector<double> values);

  double operator()(double x) const;
  double trapz() const;  // exact integral of the interpolant
  double sup_abs() const;
  GridFn& shift(double c);
  GridFn& scale(double c);

  static std::vector<double> uniform_nodes(int count);
  static GridFn sample(const std::function<double(double)>& f,
                       const std::vector<double>& nodes);
};

// Sorted union of two node sets with near-duplicates (within 1e-14) merged.
std::vector<double> merge_nodes(const std::vector<double>& a,
                                const std::vector<double>& b);

}  // namespace anovanet
