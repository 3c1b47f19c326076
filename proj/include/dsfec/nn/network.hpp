#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "dsfec/sim/rng.hpp"

namespace dsfec {

// All tensors are MatrixXd (vectors as n x 1) so the optimizer, checkpoint
// and finite-difference code can visit them uniformly. Visit order is part
// of the init-draw and checkpoint contracts: w1, b1, w2, b2, wv, bv, wa, ba.
struct Tensors {
  Eigen::MatrixXd w1, b1, w2, b2, wv, bv, wa, ba;

  template <typename F>
  void for_each(F&& f) {
    f(w1);
    f(b1);
    f(w2);
    f(b2);
    f(wv);
    f(bv);
    f(wa);
    f(ba);
  }
  template <typename F>
  void for_each(F&& f) const {
    f(w1);
    f(b1);
    f(w2);
    f(b2);
    f(wv);
    f(bv);
    f(wa);
    f(ba);
  }
};

struct ForwardCache {
  Eigen::MatrixXd x, z1, h1, z2, h2, v, a, q;
};

// Two ReLU trunk layers feeding a scalar value head and a per-action
// advantage head, combined as q = V + (A - mean(A)). Batched: columns are
// samples. Weights start scaled-uniform by fan-in, drawn tensor by tensor in
// column-major storage order from the init stream.
class DuelingQNetwork {
 public:
  DuelingQNetwork(int inputs, int hidden, int actions, Rng& init_rng);

  int inputs() const { return in_; }
  int hidden() const { return hidden_; }
  int actions() const { return actions_; }

  ForwardCache forward(const Eigen::MatrixXd& x) const;
  Eigen::VectorXd q_values(const Eigen::VectorXd& x) const;

  // Mean squared error on the taken actions' outputs against targets;
  // fills grads shaped like the parameters and returns the loss.
  double backward(const ForwardCache& cache, const std::vector<int>& taken,
                  const Eigen::VectorXd& targets, Tensors& grads) const;

  Tensors& params() { return p_; }
  const Tensors& params() const { return p_; }

  Tensors zeros_like() const;

 private:
  int in_, hidden_, actions_;
  Tensors p_;
};

class AdamOptimizer {
 public:
  explicit AdamOptimizer(double lr = 1e-3, double beta1 = 0.9,
                         double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}

  void ensure_init(const Tensors& shape);
  void step(Tensors& params, const Tensors& grads);

  std::int64_t step_count() const { return t_; }
  const Tensors& first_moments() const { return m_; }
  const Tensors& second_moments() const { return v_; }
  void restore(Tensors m, Tensors v, std::int64_t t);

 private:
  double lr_, b1_, b2_, eps_;
  std::int64_t t_ = 0;
  bool ready_ = false;
  Tensors m_, v_;
};

struct CheckpointMeta {
  std::int64_t epoch = 0;
  double epsilon = 1.0;
  bool converged = false;
};

// Binary, little-endian, shape-checked. Identical state writes identical
// bytes.
void save_checkpoint(const std::string& path, const DuelingQNetwork& net,
                     AdamOptimizer& adam, const CheckpointMeta& meta);
CheckpointMeta load_checkpoint(const std::string& path, DuelingQNetwork& net,
                               AdamOptimizer& adam);

// Central-difference gradient audit on one (state, action, target) sample;
// checks at least min_params parameters spread over every tensor and returns
// the largest relative error. States whose pre-activations sit within
// kink_guard of a ReLU kink must be filtered by the caller.
double finite_diff_check(DuelingQNetwork& net, const Eigen::VectorXd& state,
                         int action, double target, double h,
                         int min_params, Rng& rng);

}  // namespace dsfec
