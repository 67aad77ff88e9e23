#include "core/mlp.hpp"

#include <cmath>
#include <stdexcept>

#include "core/rng.hpp"

namespace anovanet {

long Mlp::param_count() const {
  long n = 0;
  for (const auto& w : W) n += w.size();
  for (const auto& v : b) n += v.size();
  return n;
}

bool Mlp::finite() const {
  for (const auto& w : W)
    if (!w.allFinite()) return false;
  for (const auto& v : b)
    if (!v.allFinite()) return false;
  return true;
}

Mlp Mlp::init(const std::vector<int>& sizes, std::uint64_t seed) {
  if (sizes.size() < 2) throw std::invalid_argument("network needs >= 2 layers");
  if (sizes.front() != 1 && sizes.front() != 2)
    throw std::invalid_argument("input dimension must be 1 or 2");
  if (sizes.back() != 1) throw std::invalid_argument("output dimension must be 1");
  for (const int s : sizes)
    if (s < 1) throw std::invalid_argument("layer sizes must be positive");

  Mlp net;
  net.sizes = sizes;
  net.seed = seed;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int fan_in = sizes[l];
    const int fan_out = sizes[l + 1];
    const double bound = std::sqrt(6.0 / fan_in);
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c) w(r, c) = rng.uniform(-bound, bound);
    net.W.push_back(std::move(w));
    net.b.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return net;
}

double Mlp::eval(const double* x, int dim) const {
  if (dim != input_dim()) throw std::invalid_argument("input dimension mismatch");
  Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(x, dim);
  const int L = layers();
  for (int l = 0; l < L; ++l) {
    Eigen::VectorXd z = W[static_cast<std::size_t>(l)] * a + b[static_cast<std::size_t>(l)];
    if (l + 1 < L) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a[0];
}

double Mlp::eval1(double x) const { return eval(&x, 1); }

double Mlp::eval2(double x, double y) const {
  const double xs[2] = {x, y};
  return eval(xs, 2);
}

void MlpGrads::zero_like(const Mlp& net) {
  dW.resize(net.W.size());
  db.resize(net.b.size());
  for (std::size_t l = 0; l < net.W.size(); ++l) {
    dW[l] = Eigen::MatrixXd::Zero(net.W[l].rows(), net.W[l].cols());
    db[l] = Eigen::VectorXd::Zero(net.b[l].size());
  }
}

bool MlpGrads::finite() const {
  for (const auto& w : dW)
    if (!w.allFinite()) return false;
  for (const auto& v : db)
    if (!v.allFinite()) return false;
  return true;
}

void mlp_forward_batch(const Mlp& net, const Eigen::MatrixXd& X, MlpBatch& batch) {
  if (X.cols() != net.input_dim()) throw std::invalid_argument("batch input dimension mismatch");
  const int L = net.layers();
  batch.a.resize(static_cast<std::size_t>(L) + 1);
  batch.a[0] = X;
  for (int l = 0; l < L; ++l) {
    auto& out = batch.a[static_cast<std::size_t>(l) + 1];
    out.noalias() = batch.a[static_cast<std::size_t>(l)] * net.W[static_cast<std::size_t>(l)].transpose();
    out.rowwise() += net.b[static_cast<std::size_t>(l)].transpose();
    if (l + 1 < L) out = out.cwiseMax(0.0);
  }
}

void mlp_backward_batch(const Mlp& net, const MlpBatch& batch,
                        const Eigen::VectorXd& dout, MlpGrads& grads) {
  const int L = net.layers();
  if (batch.a.size() != static_cast<std::size_t>(L) + 1)
    throw std::logic_error("backward without matching forward cache");
  if (batch.a[0].rows() != dout.size())
    throw std::invalid_argument("output-gradient length mismatch");
  grads.zero_like(net);

  // delta: d(loss)/d(pre-activation) for the current layer, one row per sample.
  Eigen::MatrixXd delta = dout;
  for (int l = L - 1; l >= 0; --l) {
    const auto& a_in = batch.a[static_cast<std::size_t>(l)];
    grads.dW[static_cast<std::size_t>(l)].noalias() = delta.transpose() * a_in;
    grads.db[static_cast<std::size_t>(l)] = delta.colwise().sum().transpose();
    if (l > 0) {
      Eigen::MatrixXd back = delta * net.W[static_cast<std::size_t>(l)];
      // ReLU mask from the cached post-activation: strictly positive passes.
      const auto& a_here = batch.a[static_cast<std::size_t>(l)];
      delta = ((a_here.array() > 0.0).cast<double>() * back.array()).matrix();
    }
  }
}

void AdamState::zero_like(const Mlp& net) {
  mW.resize(net.W.size());
  vW.resize(net.W.size());
  mb.resize(net.b.size());
  vb.resize(net.b.size());
  for (std::size_t l = 0; l < net.W.size(); ++l) {
    mW[l] = Eigen::MatrixXd::Zero(net.W[l].rows(), net.W[l].cols());
    vW[l] = Eigen::MatrixXd::Zero(net.W[l].rows(), net.W[l].cols());
    mb[l] = Eigen::VectorXd::Zero(net.b[l].size());
    vb[l] = Eigen::VectorXd::Zero(net.b[l].size());
  }
  step = 0;
}

void adam_step(Mlp& net, const MlpGrads& grads, AdamState& st, double lr_scale) {
  if (!grads.finite()) throw std::runtime_error("non-finite gradient: optimization diverged");
  st.step += 1;
  const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  const double lr = st.lr * lr_scale;
  for (std::size_t l = 0; l < net.W.size(); ++l) {
    st.mW[l] = st.beta1 * st.mW[l] + (1.0 - st.beta1) * grads.dW[l];
    st.vW[l] = st.beta2 * st.vW[l] + (1.0 - st.beta2) * grads.dW[l].cwiseProduct(grads.dW[l]);
    net.W[l].array() -=
        lr * (st.mW[l].array() / bc1) / ((st.vW[l].array() / bc2).sqrt() + st.eps);
    st.mb[l] = st.beta1 * st.mb[l] + (1.0 - st.beta1) * grads.db[l];
    st.vb[l] = st.beta2 * st.vb[l] + (1.0 - st.beta2) * grads.db[l].cwiseProduct(grads.db[l]);
    net.b[l].array() -=
        lr * (st.mb[l].array() / bc1) / ((st.vb[l].array() / bc2).sqrt() + st.eps);
  }
}

}  // namespace anovanet
