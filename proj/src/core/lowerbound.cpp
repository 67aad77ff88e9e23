#include "core/lowerbound.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "core/quadrature.hpp"
#include "core/rng.hpp"
#include "core/structured_model.hpp"

namespace anovanet {

double bump_kernel(double u) {
  const double t = 1.0 - 4.0 * u * u;
  if (t <= 0.0) return 0.0;
  return u * std::exp(-1.0 / t);
}

namespace {

// Composite rule over [-1/2, 1/2]; the kernel is flat near the support edges
// so a handful of panels reaches full double accuracy.
double kernel_integral(const std::function<double(double)>& f) {
  static const Quad1D rule = Quad1D::gauss_legendre(32);
  const int panels = 16;
  double acc = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double a = -0.5 + p * (1.0 / panels);
    const double b = a + 1.0 / panels;
    acc += integrate_cell_1d(f, rule, a, b);
  }
  return acc;
}

}  // namespace

double bump_kernel_l2sq() {
  static const double v = kernel_integral([](double u) {
    const double k = bump_kernel(u);
    return k * k;
  });
  return v;
}

double bump_kernel_sup() {
  static const double v = [] {
    double m = 0.0;
    for (int i = 0; i <= 20000; ++i) {
      const double u = -0.5 + i / 20000.0;
      m = std::max(m, std::fabs(bump_kernel(u)));
    }
    return m;
  }();
  return v;
}

double holder_amplitude(double beta, double budget) {
  if (!(beta > 0) || !(budget > 0))
    throw std::invalid_argument("smoothness order and budget must be positive");
  const int q = static_cast<int>(std::ceil(beta)) - 1;
  const double s = beta - q;  // in (0, 1]

  // q-th derivative of K by iterated central differences on a fine grid.
  const int n = 4001;
  const double step = 1.4 / (n - 1);  // pad beyond the support
  std::vector<double> deriv(n);
  for (int i = 0; i < n; ++i) deriv[static_cast<std::size_t>(i)] = bump_kernel(-0.7 + i * step);
  for (int it = 0; it < q; ++it) {
    std::vector<double> next(n, 0.0);
    for (int i = 1; i + 1 < n; ++i)
      next[static_cast<std::size_t>(i)] =
          (deriv[static_cast<std::size_t>(i) + 1] - deriv[static_cast<std::size_t>(i) - 1]) /
          (2.0 * step);
    deriv = std::move(next);
  }

  // Hölder seminorm of the q-th derivative with exponent s over dyadic gaps.
  double seminorm = 0.0;
  for (int gap = 1; gap < n; gap *= 2) {
    const double dx = gap * step;
    for (int i = 0; i + gap < n; ++i) {
      const double diff = std::fabs(deriv[static_cast<std::size_t>(i + gap)] -
                                    deriv[static_cast<std::size_t>(i)]);
      seminorm = std::max(seminorm, diff / std::pow(dx, s));
    }
  }
  if (!(seminorm > 0)) throw std::runtime_error("degenerate kernel seminorm");
  return budget / seminorm;
}

LbParams lb_params_dense(long n, int d, double beta1, double beta2, double c0,
                         double holder_budget1, double holder_budget2) {
  if (n < 1 || d < 1 || !(beta1 > 0) || !(beta2 > 0) || !(c0 > 0))
    throw std::invalid_argument("invalid packing parameters");
  LbParams p;
  p.n = n;
  p.d = d;
  p.beta1 = beta1;
  p.beta2 = beta2;
  p.sparse = false;
  const double nn = static_cast<double>(n);
  p.m1 = std::max(1, static_cast<int>(std::floor(c0 * std::pow(nn, 1.0 / (2.0 * beta1 + 1.0)))));
  p.m2 = std::max(1, static_cast<int>(std::floor(c0 * std::pow(nn, 1.0 / (2.0 * beta2 + 2.0)))));
  p.h1 = 1.0 / p.m1;
  p.h2 = 1.0 / p.m2;
  p.L1 = holder_amplitude(beta1, holder_budget1);
  p.L2 = holder_amplitude(beta2, holder_budget2);
  return p;
}

LbParams lb_params_sparse(long n, int d, int s1, int s2, double beta1,
                          double beta2, double c1, double c2,
                          double holder_budget1, double holder_budget2) {
  if (n < 1 || d < 2 || s1 < 1 || s2 < 1 || !(beta1 > 0) || !(beta2 > 0) ||
      !(c1 > 0) || !(c2 > 0))
    throw std::invalid_argument("invalid sparse packing parameters");
  if (s1 > d || s2 > d * (d - 1) / 2)
    throw std::invalid_argument("sparsity exceeds slot count");
  LbParams p;
  p.n = n;
  p.d = d;
  p.beta1 = beta1;
  p.beta2 = beta2;
  p.sparse = true;
  p.s1 = s1;
  p.s2 = s2;
  const double nn = static_cast<double>(n);

  const double rate1 = std::pow(nn, -2.0 * beta1 / (2.0 * beta1 + 1.0));
  const double arg1 = 2.0 * d / s1 - 2.0;
  const double tail1 = arg1 > 1.0 ? 8.0 * std::log(arg1) / nn : 0.0;
  const double t1 = c1 * std::max(rate1, tail1);
  p.m1 = std::max(1, static_cast<int>(std::llround(std::pow(t1, -1.0 / (2.0 * beta1)))));

  const double rate2 = std::pow(nn, -2.0 * beta2 / (2.0 * beta2 + 2.0));
  const double arg2 = static_cast<double>(d) * (d - 1) / s2 - 2.0;
  const double tail2 = arg2 > 1.0 ? 8.0 * std::log(arg2) / nn : 0.0;
  const double t2 = c2 * std::max(rate2, tail2);
  p.m2 = std::max(1, static_cast<int>(std::llround(std::pow(t2, -1.0 / (2.0 * beta2)))));

  p.h1 = 1.0 / p.m1;
  p.h2 = 1.0 / p.m2;
  p.L1 = holder_amplitude(beta1, holder_budget1);
  p.L2 = holder_amplitude(beta2, holder_budget2);
  return p;
}

int hamming(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("codeword length mismatch");
  int dist = 0;
  for (std::size_t i = 0; i < a.size(); ++i) dist += (a[i] != b[i]) ? 1 : 0;
  return dist;
}

namespace {

int popcount32(std::uint32_t v) {
#if defined(__GNUC__) || defined(__clang__)
  return __builtin_popcount(v);
#else
  int c = 0;
  while (v) {
    v &= v - 1;
    ++c;
  }
  return c;
#endif
}

std::vector<std::uint8_t> unpack_bits(std::uint32_t v, int M) {
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(M));
  for (int i = 0; i < M; ++i) bits[static_cast<std::size_t>(i)] = (v >> i) & 1u;
  return bits;
}

}  // namespace

Codebook vg_codebook(int M, int target_count, std::uint64_t seed) {
  if (M < 8) throw std::invalid_argument("code length must be >= 8");
  if (target_count < 1) throw std::invalid_argument("target count must be >= 1");
  const int dmin = (M + 7) / 8;

  Codebook book;
  book.M = M;

  if (M <= 32) {
    std::vector<std::uint32_t> kept;
    Rng rng(seed);
    const long budget = std::max(4000L, 400L * target_count);
    const std::uint32_t mask =
        M == 32 ? 0xffffffffu : ((1u << M) - 1u);
    for (long a = 0; a < budget && static_cast<int>(kept.size()) < target_count; ++a) {
      const std::uint32_t w = static_cast<std::uint32_t>(rng.next_u64()) & mask;
      bool ok = true;
      for (const std::uint32_t k : kept)
        if (popcount32(w ^ k) < dmin) {
          ok = false;
          break;
        }
      if (ok) kept.push_back(w);
    }
    if (static_cast<int>(kept.size()) < target_count && M <= 24) {
      // Exhaustive greedy sweep; the classical volume argument guarantees at
      // least 2^M / V(M, dmin-1) >= 2^{M/8} survivors.
      kept.clear();
      const std::uint32_t limit = 1u << M;
      for (std::uint32_t w = 0; w < limit; ++w) {
        bool ok = true;
        for (const std::uint32_t k : kept)
          if (popcount32(w ^ k) < dmin) {
            ok = false;
            break;
          }
        if (ok) {
          kept.push_back(w);
          if (static_cast<int>(kept.size()) >= target_count) break;
        }
      }
    }
    for (const std::uint32_t w : kept) book.words.push_back(unpack_bits(w, M));
  } else {
    Rng rng(seed);
    const long budget = std::max(4000L, 400L * target_count);
    for (long a = 0; a < budget && static_cast<int>(book.words.size()) < target_count; ++a) {
      std::vector<std::uint8_t> w(static_cast<std::size_t>(M));
      for (int i = 0; i < M; ++i) w[static_cast<std::size_t>(i)] = rng.next_u64() & 1u;
      bool ok = true;
      for (const auto& k : book.words)
        if (hamming(w, k) < dmin) {
          ok = false;
          break;
        }
      if (ok) book.words.push_back(std::move(w));
    }
  }

  book.target_reached = static_cast<int>(book.words.size()) >= target_count;
  int mind = M;
  for (std::size_t i = 0; i < book.words.size(); ++i)
    for (std::size_t j = i + 1; j < book.words.size(); ++j)
      mind = std::min(mind, hamming(book.words[i], book.words[j]));
  book.min_dist = book.words.size() >= 2 ? mind : M;
  return book;
}

namespace {

long bi_slot_index(int j, int k, int d) {
  // Lexicographic position of (j, k), 1 <= j < k <= d.
  long idx = 0;
  for (int a = 1; a < j; ++a) idx += d - a;
  return idx + (k - j - 1);
}

}  // namespace

StructuredModel assemble_alternative(const LbParams& p,
                                     const std::vector<std::uint8_t>& w1,
                                     const std::vector<std::uint8_t>& w2) {
  if (!w1.empty() && static_cast<long>(w1.size()) != p.uni_bits())
    throw std::invalid_argument("univariate codeword length mismatch");
  if (!w2.empty() && static_cast<long>(w2.size()) != p.bi_bits())
    throw std::invalid_argument("bivariate codeword length mismatch");

  StructuredModel m;
  m.d = p.d;
  m.mu = 0;
  const double sup1 = p.L1 * std::pow(p.h1, p.beta1) * bump_kernel_sup();
  const double sup2 = p.L2 * std::pow(p.h2, p.beta2) * bump_kernel_sup() * bump_kernel_sup();
  m.B = 1.0 + 2.0 * (p.d * sup1 + 0.5 * p.d * (p.d - 1) * sup2);

  if (!w1.empty()) {
    for (int j = 1; j <= p.d; ++j) {
      BumpUni src;
      src.amp = p.L1;
      src.h = p.h1;
      src.beta = p.beta1;
      for (int c = 0; c < p.m1; ++c)
        if (w1[static_cast<std::size_t>((j - 1) * p.m1 + c)]) src.cells.push_back(c + 1);
      if (!src.cells.empty()) m.uni[j].source = std::move(src);
    }
  }
  if (!w2.empty()) {
    for (int j = 1; j <= p.d; ++j) {
      for (int k = j + 1; k <= p.d; ++k) {
        const long base = bi_slot_index(j, k, p.d) * p.m2 * p.m2;
        BumpBi src;
        src.amp = p.L2;
        src.h = p.h2;
        src.beta = p.beta2;
        for (int a = 0; a < p.m2; ++a)
          for (int b = 0; b < p.m2; ++b)
            if (w2[static_cast<std::size_t>(base + a * p.m2 + b)])
              src.cells.emplace_back(a + 1, b + 1);
        if (!src.cells.empty()) m.bi[{j, k}].source = std::move(src);
      }
    }
  }
  return m;
}

namespace {

// Composite Gauss-Legendre over [0,1] split at the given breakpoints.
double composite_1d(const std::function<double(double)>& f,
                    const std::vector<double>& breaks, const Quad1D& rule) {
  double acc = 0.0;
  for (std::size_t i = 1; i < breaks.size(); ++i)
    acc += integrate_cell_1d(f, rule, breaks[i - 1], breaks[i]);
  return acc;
}

std::vector<double> grid_breaks(int m) {
  std::vector<double> b(static_cast<std::size_t>(m) + 1);
  for (int i = 0; i <= m; ++i) b[static_cast<std::size_t>(i)] = static_cast<double>(i) / m;
  return b;
}

struct DiffUni {
  const UniComponent* a = nullptr;
  const UniComponent* b = nullptr;
  double operator()(double x) const {
    return (a ? a->eval(x) : 0.0) - (b ? b->eval(x) : 0.0);
  }
};

struct DiffBi {
  const BiComponent* a = nullptr;
  const BiComponent* b = nullptr;
  double operator()(double x, double y) const {
    return (a ? a->eval(x, y) : 0.0) - (b ? b->eval(x, y) : 0.0);
  }
};

}  // namespace

PackingDistance packing_distance(const LbParams& p,
                                 const std::vector<std::uint8_t>& w1a,
                                 const std::vector<std::uint8_t>& w1b,
                                 const std::vector<std::uint8_t>& w2a,
                                 const std::vector<std::uint8_t>& w2b) {
  if (w1a.size() != w1b.size() || w2a.size() != w2b.size())
    throw std::invalid_argument("codeword pairs must share lengths");

  PackingDistance out;
  const double kl2 = bump_kernel_l2sq();
  const double rho1 = w1a.empty() ? 0.0 : hamming(w1a, w1b);
  const double rho2 = w2a.empty() ? 0.0 : hamming(w2a, w2b);
  out.closed_form = p.L1 * p.L1 * std::pow(p.h1, 2.0 * p.beta1 + 1.0) * kl2 * rho1 +
                    p.L2 * p.L2 * std::pow(p.h2, 2.0 * p.beta2 + 2.0) * kl2 * kl2 * rho2;

  // Independent evaluation: expand the d-dimensional squared difference of
  // the two assembled models into 1D/2D integrals under the uniform product
  // law and compute every term numerically, including the cross terms the
  // closed form relies on vanishing.
  const StructuredModel fa = assemble_alternative(p, w1a, w2a);
  const StructuredModel fb = assemble_alternative(p, w1b, w2b);
  const Quad1D rule = Quad1D::gauss_legendre(64);
  const auto b1 = grid_breaks(p.m1);
  const auto b2 = grid_breaks(p.m2);
  const auto b12 = merge_nodes(b1, b2);

  std::vector<int> uni_keys;
  for (int j = 1; j <= p.d; ++j)
    if (fa.uni.count(j) || fb.uni.count(j)) uni_keys.push_back(j);
  std::vector<std::pair<int, int>> bi_keys;
  for (int j = 1; j <= p.d; ++j)
    for (int k = j + 1; k <= p.d; ++k)
      if (fa.bi.count({j, k}) || fb.bi.count({j, k})) bi_keys.emplace_back(j, k);

  std::vector<DiffUni> du(uni_keys.size());
  for (std::size_t i = 0; i < uni_keys.size(); ++i) {
    const int j = uni_keys[i];
    du[i].a = fa.uni.count(j) ? &fa.uni.at(j) : nullptr;
    du[i].b = fb.uni.count(j) ? &fb.uni.at(j) : nullptr;
  }
  std::vector<DiffBi> db(bi_keys.size());
  for (std::size_t i = 0; i < bi_keys.size(); ++i) {
    const auto jk = bi_keys[i];
    db[i].a = fa.bi.count(jk) ? &fa.bi.at(jk) : nullptr;
    db[i].b = fb.bi.count(jk) ? &fb.bi.at(jk) : nullptr;
  }

  // Totals and marginal functions.
  std::vector<double> A(uni_keys.size()), Q(uni_keys.size());
  for (std::size_t i = 0; i < uni_keys.size(); ++i) {
    A[i] = composite_1d([&](double x) { return du[i](x); }, b1, rule);
    Q[i] = composite_1d([&](double x) { const double v = du[i](x); return v * v; }, b1, rule);
  }
  std::vector<double> D(bi_keys.size()), Q2(bi_keys.size());
  const auto marg_first = [&](const DiffBi& f, double t) {
    return composite_1d([&](double y) { return f(t, y); }, b2, rule);
  };
  const auto marg_second = [&](const DiffBi& f, double t) {
    return composite_1d([&](double x) { return f(x, t); }, b2, rule);
  };
  for (std::size_t i = 0; i < bi_keys.size(); ++i) {
    D[i] = composite_1d([&](double x) { return marg_first(db[i], x); }, b2, rule);
    Q2[i] = composite_1d(
        [&](double x) {
          return composite_1d([&](double y) { const double v = db[i](x, y); return v * v; }, b2,
                              rule);
        },
        b2, rule);
  }

  double total = 0.0;
  for (const double q : Q) total += q;
  for (const double q : Q2) total += q;
  for (std::size_t i = 0; i < uni_keys.size(); ++i)
    for (std::size_t j = i + 1; j < uni_keys.size(); ++j) total += 2.0 * A[i] * A[j];
  for (std::size_t i = 0; i < uni_keys.size(); ++i) {
    const int j = uni_keys[i];
    for (std::size_t t = 0; t < bi_keys.size(); ++t) {
      const auto [k, l] = bi_keys[t];
      double term;
      if (j == k)
        term = composite_1d([&](double x) { return du[i](x) * marg_first(db[t], x); }, b12, rule);
      else if (j == l)
        term = composite_1d([&](double y) { return du[i](y) * marg_second(db[t], y); }, b12, rule);
      else
        term = A[i] * D[t];
      total += 2.0 * term;
    }
  }
  for (std::size_t s = 0; s < bi_keys.size(); ++s) {
    for (std::size_t t = s + 1; t < bi_keys.size(); ++t) {
      const auto [k1, l1] = bi_keys[s];
      const auto [k2, l2] = bi_keys[t];
      double term;
      if (k1 == k2)
        term = composite_1d(
            [&](double x) { return marg_first(db[s], x) * marg_first(db[t], x); }, b2, rule);
      else if (l1 == l2)
        term = composite_1d(
            [&](double y) { return marg_second(db[s], y) * marg_second(db[t], y); }, b2, rule);
      else if (l1 == k2)
        term = composite_1d(
            [&](double y) { return marg_second(db[s], y) * marg_first(db[t], y); }, b2, rule);
      else if (k1 == l2)
        term = composite_1d(
            [&](double x) { return marg_first(db[s], x) * marg_second(db[t], x); }, b2, rule);
      else
        term = D[s] * D[t];
      total += 2.0 * term;
    }
  }

  out.quadrature = total;
  return out;
}

double sparse_delta_sq(const LbParams& p) {
  const double kl2 = bump_kernel_l2sq();
  return p.L1 * p.L1 * kl2 / 64.0 * p.s1 * std::pow(static_cast<double>(p.m1), -2.0 * p.beta1) +
         p.L2 * p.L2 * kl2 * kl2 / 64.0 * p.s2 *
             std::pow(static_cast<double>(p.m2), -2.0 * p.beta2);
}

}  // namespace anovanet
