#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "core/grid_fn.hpp"
#include "core/mlp.hpp"
#include "core/quadrature.hpp"

namespace anovanet {

// Uni(j): 1 <= j <= d. Bi(j,k): 1 <= j < k <= d.
struct ComponentKey {
  int j = 0;
  int k = 0;  // 0 for univariate

  static ComponentKey uni(int j) { return {j, 0}; }
  static ComponentKey bi(int j, int k) { return {j, k}; }
  bool is_uni() const { return k == 0; }
  bool operator<(const ComponentKey& o) const {
    if (is_uni() != o.is_uni()) return is_uni();
    if (j != o.j) return j < o.j;
    return k < o.k;
  }
  bool operator==(const ComponentKey& o) const { return j == o.j && k == o.k; }
  std::string str() const;
};

// Closed-form component sources used by the synthetic generator and the
// minimax alternatives; trained components use Mlp sources.
struct HarmonicUni {
  struct Term {
    double a;
    int k;
  };
  std::vector<Term> terms;  // sum of a * cos(2 pi k x)
};

struct HarmonicBi {
  struct Term {
    double b;
    int p, q;
  };
  std::vector<Term> terms;  // sum of b * cos(2 pi p x) * cos(2 pi q y)
};

// Sum over active cells of amp * h^beta * K((x - c_k)/h), c_k the cell
// center, K the odd compactly supported smoothness kernel.
struct BumpUni {
  double amp = 0;
  double h = 1;
  double beta = 1;
  std::vector<int> cells;  // 1-based cell indices, each in [1, 1/h]
};

struct BumpBi {
  double amp = 0;
  double h = 1;
  double beta = 1;
  std::vector<std::pair<int, int>> cells;
};

struct UniComponent {
  std::variant<Mlp, HarmonicUni, BumpUni, GridFn> source;
  std::vector<GridFn> addends;
  double shift = 0;  // used when the source has no output bias of its own

  double eval(double x) const;
  double source_eval(double x) const;
};

struct BiComponent {
  std::variant<Mlp, HarmonicBi, BumpBi> source;
  std::vector<GridFn> addends_x;  // functions of the first coordinate, added
  std::vector<GridFn> addends_y;
  double shift = 0;

  double eval(double x, double y) const;
  double source_eval(double x, double y) const;
};

struct StructuredModel {
  int d = 0;
  double mu = 0;
  double B = 1;
  std::map<int, UniComponent> uni;                  // key j
  std::map<std::pair<int, int>, BiComponent> bi;    // key (j, k), j < k

  double eval_raw(const double* x) const;           // unclamped structured sum
  double eval(const double* x) const;               // clamped to [-B, B]
  double eval(const std::vector<double>& x) const;
  std::vector<ComponentKey> keys() const;
  void check_valid() const;
};

// Every slot for ambient dimension d: d univariate plus d(d-1)/2 bivariate
// keys, sorted.
std::vector<ComponentKey> all_component_keys(int d);

struct AnovaReport {
  std::map<int, double> uni_defect_before;
  std::map<int, double> uni_defect_after;
  std::map<std::pair<int, int>, double> bi_defect_before;
  std::map<std::pair<int, int>, double> bi_defect_after;
  double intercept_shift = 0;

  double max_uni_after() const;
  double max_bi_after() const;
  double max_uni_before() const;
  double max_bi_before() const;
};

// Rewrites the component sum into the identifiable form: univariate
// components integrate to zero (exact bias shift), bivariate components have
// zero grid marginals (grid-interpolant correctors moved into the univariate
// slots), constants absorbed into the intercept. Evaluation is preserved
// exactly up to float associativity.
std::pair<StructuredModel, AnovaReport> anova_project(const StructuredModel& m,
                                                      const Quad1D& rule);

// Defect measurement without modification (same instruments as the
// projection).
AnovaReport anova_defects(const StructuredModel& m, const Quad1D& rule);

// Per-key L2 distance via quadrature; keys missing on one side count as the
// zero function. Both inputs must already satisfy the identifiability
// constraints (defects validated against loose multiples of the defaults).
std::map<ComponentKey, double> component_l2_errors(const StructuredModel& fit,
                                                   const StructuredModel& truth,
                                                   const Quad1D& rule);

enum class McLaw { uniform, independent_beta };

struct McError {
  double estimate = 0;  // E[(fit(X) - truth(X))^2] estimate
  double std_error = 0;
  long n_mc = 0;
};

McError mc_l2_error(const StructuredModel& fit, const StructuredModel& truth,
                    long n_mc, std::uint64_t seed, McLaw law = McLaw::uniform,
                    double beta_a = 2.0, double beta_b = 2.0);

inline constexpr double kUniDefectTol = 1e-9;
inline constexpr double kBiDefectTol = 1e-6;

}  // namespace anovanet
