#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace anovanet {

struct StructuredModel;
struct Quad1D;

// Odd, C-infinity kernel supported on (-1/2, 1/2): K(u) = u exp(-1/(1-4u^2)).
double bump_kernel(double u);

// High-accuracy values of ||K||_2^2 and sup|K| (cached composite quadrature).
double bump_kernel_l2sq();
double bump_kernel_sup();

// Grid-bump family parameters. Bumps are phi_k(x) = L h^beta K((x-c_k)/h)
// with c_k the center of cell k of an m-cell uniform grid, h = 1/m.
struct LbParams {
  long n = 0;
  int d = 0;
  double beta1 = 1, beta2 = 1;
  int m1 = 1, m2 = 1;
  double h1 = 1, h2 = 1;
  double L1 = 1, L2 = 1;
  bool sparse = false;
  int s1 = 0, s2 = 0;

  long uni_bits() const { return static_cast<long>(d) * m1; }
  long bi_bits() const {
    return static_cast<long>(d) * (d - 1) / 2 * static_cast<long>(m2) * m2;
  }
};

// Largest amplitude L such that the floor(beta)-th derivative of L K has
// Hölder seminorm (exponent beta - floor(beta)) within `budget`, estimated by
// finite differences on a fine grid.
double holder_amplitude(double beta, double budget);

// Dense regime: m1 = floor(c0 n^{1/(2 b1 + 1)}), m2 = floor(c0 n^{1/(2 b2 + 2)}).
LbParams lb_params_dense(long n, int d, double beta1, double beta2, double c0,
                         double holder_budget1, double holder_budget2);

// Sparse regime: m_i^{-2 b_i} = c_i (rate term  OR  8 log(slots/s_i - 2)/n),
// whichever branch is larger; log branches guarded for small slot counts.
LbParams lb_params_sparse(long n, int d, int s1, int s2, double beta1,
                          double beta2, double c1, double c2,
                          double holder_budget1, double holder_budget2);

struct Codebook {
  int M = 0;
  std::vector<std::vector<std::uint8_t>> words;
  int min_dist = 0;       // guaranteed pairwise minimum
  bool target_reached = false;
};

int hamming(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b);

// Randomized-greedy codebook at pairwise distance >= ceil(M/8); exhaustive
// fallback for M <= 24 guarantees the existence bound 2^{floor(M/8)} words.
Codebook vg_codebook(int M, int target_count, std::uint64_t seed);

// Builds the structured alternative indexed by codewords w1 (d*m1 bits, slot
// j owns bits [j*m1, (j+1)*m1)) and w2 ((d choose 2)*m2^2 bits, pair slots in
// lexicographic (j,k) order, cell (a,b) at offset a*m2+b). Either may be
// empty to omit that order.
StructuredModel assemble_alternative(const LbParams& p,
                                     const std::vector<std::uint8_t>& w1,
                                     const std::vector<std::uint8_t>& w2);

struct PackingDistance {
  double closed_form = 0;
  double quadrature = 0;
};

// Closed form L1^2 h1^{2b1+1} ||K||^2 rho(w1,w1') + L2^2 h2^{2b2+2} ||K||^4
// rho(w2,w2'), against an independent cell-wise quadrature of the full
// squared difference expansion (all cross terms computed, none assumed zero).
PackingDistance packing_distance(const LbParams& p,
                                 const std::vector<std::uint8_t>& w1a,
                                 const std::vector<std::uint8_t>& w1b,
                                 const std::vector<std::uint8_t>& w2a,
                                 const std::vector<std::uint8_t>& w2b);

// Sparse-family separation bounds: delta^2 of the proof's sandwich
// 4 delta^2 <= d^2 <= 128 delta^2.
double sparse_delta_sq(const LbParams& p);

}  // namespace anovanet
