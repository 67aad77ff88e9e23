#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace anovanet {

// Dense feed-forward ReLU network, hidden activations ReLU, identity output,
// scalar output. Weights W[l] map layer l (size sizes[l]) to layer l+1.
struct Mlp {
  std::vector<int> sizes;
  std::vector<Eigen::MatrixXd> W;
  std::vector<Eigen::VectorXd> b;
  std::uint64_t seed = 0;

  int input_dim() const { return sizes.empty() ? 0 : sizes.front(); }
  int layers() const { return static_cast<int>(W.size()); }
  long param_count() const;
  bool finite() const;

  // He-style fan-in scaled uniform init U(+-sqrt(6/fan_in)), zero biases;
  // deterministic in the seed.
  static Mlp init(const std::vector<int>& sizes, std::uint64_t seed);

  double eval1(double x) const;
  double eval2(double x, double y) const;
  double eval(const double* x, int dim) const;
};

// Cached activations for one batch; a[0] is the input matrix (n x in_dim),
// a[l+1] = relu(a[l] W[l]^T + b[l]) with the last layer affine only.
struct MlpBatch {
  std::vector<Eigen::MatrixXd> a;
};

struct MlpGrads {
  std::vector<Eigen::MatrixXd> dW;
  std::vector<Eigen::VectorXd> db;

  void zero_like(const Mlp& net);
  bool finite() const;
};

// Forward over a batch; batch.a reused across calls to avoid reallocation.
// Returns the output column (alias of batch.a.back().col(0)).
void mlp_forward_batch(const Mlp& net, const Eigen::MatrixXd& X, MlpBatch& batch);

// Exact gradients given d(loss)/d(output) per sample; requires batch filled
// by mlp_forward_batch on the same X. ReLU subgradient at 0 is 0.
void mlp_backward_batch(const Mlp& net, const MlpBatch& batch,
                        const Eigen::VectorXd& dout, MlpGrads& grads);

// Adam; lr_scale multiplies the base learning rate for the step (cosine
// decay is applied by the caller). Throws on non-finite gradients.
struct AdamState {
  std::vector<Eigen::MatrixXd> mW, vW;
  std::vector<Eigen::VectorXd> mb, vb;
  long step = 0;
  double lr = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void zero_like(const Mlp& net);
};

void adam_step(Mlp& net, const MlpGrads& grads, AdamState& state, double lr_scale);

}  // namespace anovanet
