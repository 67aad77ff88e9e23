#include "core/grid_fn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace anovanet {

GridFn::GridFn(std::vector<double> nodes, std::vector<double> values)
    : xs(std::move(nodes)), ys(std::move(values)) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw std::invalid_argument("grid function needs >= 2 matching nodes/values");
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (!(xs[i] > xs[i - 1]))
      throw std::invalid_argument("grid nodes must be strictly increasing");
}

double GridFn::operator()(double x) const {
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const std::size_t hi = static_cast<std::size_t>(it - xs.begin());
  const std::size_t lo = hi - 1;
  const double t = (x - xs[lo]) / (xs[hi] - xs[lo]);
  return ys[lo] + t * (ys[hi] - ys[lo]);
}

double GridFn::trapz() const {
  double acc = 0.0;
  for (std::size_t i = 1; i < xs.size(); ++i)
    acc += 0.5 * (ys[i] + ys[i - 1]) * (xs[i] - xs[i - 1]);
  return acc;
}

double GridFn::sup_abs() const {
  double m = 0.0;
  for (const double v : ys) m = std::max(m, std::fabs(v));
  return m;
}

GridFn& GridFn::shift(double c) {
  for (double& v : ys) v += c;
  return *this;
}

GridFn& GridFn::scale(double c) {
  for (double& v : ys) v *= c;
  return *this;
}

std::vector<double> GridFn::uniform_nodes(int count) {
  if (count < 2) throw std::invalid_argument("need >= 2 nodes");
  std::vector<double> xs(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    xs[static_cast<std::size_t>(i)] = static_cast<double>(i) / (count - 1);
  return xs;
}

GridFn GridFn::sample(const std::function<double(double)>& f,
                      const std::vector<double>& nodes) {
  std::vector<double> ys(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) ys[i] = f(nodes[i]);
  return GridFn(nodes, std::move(ys));
}

std::vector<double> merge_nodes(const std::vector<double>& a,
                                const std::vector<double>& b) {
  std::vector<double> out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  std::sort(out.begin(), out.end());
  std::vector<double> dedup;
  dedup.reserve(out.size());
  for (const double x : out)
    if (dedup.empty() || x - dedup.back() > 1e-14) dedup.push_back(x);
  return dedup;
}

}  // namespace anovanet
