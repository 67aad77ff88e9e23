#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "core/mlp.hpp"
#include "core/rng.hpp"
#include "core/structured_model.hpp"
#include "core/synthdata.hpp"

namespace anovanet::testing {

// Hand-built ReLU net computing a*x + b*y + c exactly on [0,1]^2 (a, b >= 0
// keeps the single active unit on the identity branch).
inline Mlp linear_net2(double a, double b, double c) {
  Mlp net = Mlp::init({2, 4, 4, 1}, 1);
  for (auto& w : net.W) w.setZero();
  for (auto& v : net.b) v.setZero();
  net.W[0](0, 0) = a;
  net.W[0](0, 1) = b;
  net.b[0](0) = c >= 0 ? c : 0;  // keep preactivation nonnegative
  net.W[1](0, 0) = 1;
  net.W[2](0, 0) = 1;
  if (c < 0) net.b[2](0) = c;
  return net;
}

// Univariate version: a*x + c with a >= 0.
inline Mlp linear_net1(double a, double c) {
  Mlp net = Mlp::init({1, 4, 4, 1}, 1);
  for (auto& w : net.W) w.setZero();
  for (auto& v : net.b) v.setZero();
  net.W[0](0, 0) = a;
  net.b[0](0) = c >= 0 ? c : 0;
  net.W[1](0, 0) = 1;
  net.W[2](0, 0) = 1;
  if (c < 0) net.b[2](0) = c;
  return net;
}

// Identifiable harmonic model on explicit supports; amplitude per slot.
inline StructuredModel harmonic_model(int d, const std::vector<std::pair<int, double>>& unis,
                                      const std::vector<std::pair<std::pair<int, int>, double>>& bis,
                                      double mu = 0.0, double B = 10.0) {
  StructuredModel m;
  m.d = d;
  m.mu = mu;
  m.B = B;
  int freq = 1;
  for (const auto& [j, a] : unis) {
    UniComponent c;
    c.source = HarmonicUni{{{a, freq++}}};
    m.uni.emplace(j, std::move(c));
  }
  for (const auto& [jk, b] : bis) {
    BiComponent c;
    c.source = HarmonicBi{{{b, 1, freq++}}};
    m.bi.emplace(jk, std::move(c));
  }
  return m;
}

// Random-Mlp structured model for projection stress tests: arbitrary
// (non-identifiable) component sources.
inline StructuredModel random_mlp_model(int d, std::uint64_t seed, double B = 50.0) {
  Rng rng(seed);
  StructuredModel m;
  m.d = d;
  m.B = B;
  m.mu = rng.uniform(-1.0, 1.0);
  for (int j = 1; j <= d; ++j) {
    if (rng.uniform() < 0.4) continue;
    UniComponent c;
    c.source = Mlp::init({1, 6, 6, 1}, rng.next_u64());
    c.shift = rng.uniform(-0.5, 0.5);
    m.uni.emplace(j, std::move(c));
  }
  for (int j = 1; j <= d; ++j)
    for (int k = j + 1; k <= d; ++k) {
      if (rng.uniform() < 0.6) continue;
      BiComponent c;
      c.source = Mlp::init({2, 6, 6, 1}, rng.next_u64());
      c.shift = rng.uniform(-0.5, 0.5);
      m.bi.emplace(std::make_pair(j, k), std::move(c));
    }
  return m;
}

inline std::vector<double> random_point(int d, Rng& rng) {
  std::vector<double> x(d);
  for (auto& v : x) v = rng.uniform();
  return x;
}

}  // namespace anovanet::testing
