#include "dsfec/nn/network.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace dsfec {
namespace {

void fill_uniform(Eigen::MatrixXd& m, double limit, Rng& rng) {
  double* data = m.data();
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    data[i] = (2.0 * rng.uniform01() - 1.0) * limit;
  }
}

Eigen::MatrixXd relu(const Eigen::MatrixXd& z) { return z.cwiseMax(0.0); }

Eigen::MatrixXd relu_mask(const Eigen::MatrixXd& z) {
  return (z.array() > 0.0).cast<double>().matrix();
}

}  // namespace

DuelingQNetwork::DuelingQNetwork(int inputs, int hidden, int actions,
                                 Rng& init_rng)
    : in_(inputs), hidden_(hidden), actions_(actions) {
  if (inputs < 1 || hidden < 1 || actions < 1) {
    throw std::invalid_argument("network dimensions must be positive");
  }
  p_.w1.resize(hidden, inputs);
  p_.b1.resize(hidden, 1);
  p_.w2.resize(hidden, hidden);
  p_.b2.resize(hidden, 1);
  p_.wv.resize(1, hidden);
  p_.bv.resize(1, 1);
  p_.wa.resize(actions, hidden);
  p_.ba.resize(actions, 1);

  const double lim1 = 1.0 / std::sqrt(static_cast<double>(inputs));
  const double lim2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  fill_uniform(p_.w1, lim1, init_rng);
  fill_uniform(p_.b1, lim1, init_rng);
  fill_uniform(p_.w2, lim2, init_rng);
  fill_uniform(p_.b2, lim2, init_rng);
  fill_uniform(p_.wv, lim2, init_rng);
  fill_uniform(p_.bv, lim2, init_rng);
  fill_uniform(p_.wa, lim2, init_rng);
  fill_uniform(p_.ba, lim2, init_rng);
}

Tensors DuelingQNetwork::zeros_like() const {
  Tensors z = p_;
  z.for_each([](Eigen::MatrixXd& m) { m.setZero(); });
  return z;
}

ForwardCache DuelingQNetwork::forward(const Eigen::MatrixXd& x) const {
  if (x.rows() != in_) {
    throw std::invalid_argument("forward: input row count mismatch");
  }
  if (!x.allFinite()) {
    throw std::invalid_argument("forward: non-finite input");
  }
  ForwardCache c;
  c.x = x;
  c.z1 = (p_.w1 * x).colwise() + Eigen::VectorXd(p_.b1.col(0));
  c.h1 = relu(c.z1);
  c.z2 = (p_.w2 * c.h1).colwise() + Eigen::VectorXd(p_.b2.col(0));
  c.h2 = relu(c.z2);
  c.v = (p_.wv * c.h2).colwise() + Eigen::VectorXd(p_.bv.col(0));
  c.a = (p_.wa * c.h2).colwise() + Eigen::VectorXd(p_.ba.col(0));
  c.q = c.a;
  Eigen::RowVectorXd mean = c.a.colwise().mean();
  c.q.rowwise() -= mean;
  c.q.rowwise() += Eigen::RowVectorXd(c.v.row(0));
  return c;
}

Eigen::VectorXd DuelingQNetwork::q_values(const Eigen::VectorXd& x) const {
  return forward(x).q.col(0);
}

double DuelingQNetwork::backward(const ForwardCache& cache,
                                 const std::vector<int>& taken,
                                 const Eigen::VectorXd& targets,
                                 Tensors& grads) const {
  const Eigen::Index batch = cache.x.cols();
  if (static_cast<Eigen::Index>(taken.size()) != batch ||
      targets.size() != batch) {
    throw std::invalid_argument("backward: batch size mismatch");
  }

  double loss = 0.0;
  Eigen::RowVectorXd g(batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    if (taken[b] < 0 || taken[b] >= actions_) {
      throw std::invalid_argument("backward: action index out of range");
    }
    const double err = cache.q(taken[b], b) - targets(b);
    loss += err * err;
    g(b) = 2.0 * err / static_cast<double>(batch);
  }
  loss /= static_cast<double>(batch);

  // q_i = v + a_i - mean(a): the value head sees the full error signal and
  // untaken advantages receive it only via the mean term.
  Eigen::MatrixXd d_v = g;
  Eigen::MatrixXd d_a(actions_, batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    d_a.col(b).setConstant(-g(b) / static_cast<double>(actions_));
    d_a(taken[b], b) += g(b);
  }

  grads.wv = d_v * cache.h2.transpose();
  grads.bv = Eigen::MatrixXd::Constant(1, 1, d_v.sum());
  grads.wa = d_a * cache.h2.transpose();
  grads.ba = d_a.rowwise().sum();

  Eigen::MatrixXd d_h2 = p_.wv.transpose() * d_v + p_.wa.transpose() * d_a;
  Eigen::MatrixXd d_z2 = d_h2.cwiseProduct(relu_mask(cache.z2));
  grads.w2 = d_z2 * cache.h1.transpose();
  grads.b2 = d_z2.rowwise().sum();

  Eigen::MatrixXd d_h1 = p_.w2.transpose() * d_z2;
  Eigen::MatrixXd d_z1 = d_h1.cwiseProduct(relu_mask(cache.z1));
  grads.w1 = d_z1 * cache.x.transpose();
  grads.b1 = d_z1.rowwise().sum();

  return loss;
}

void AdamOptimizer::ensure_init(const Tensors& shape) {
  if (ready_) return;
  m_ = shape;
  m_.for_each([](Eigen::MatrixXd& t) { t.setZero(); });
  v_ = m_;
  ready_ = true;
}

void AdamOptimizer::step(Tensors& params, const Tensors& grads) {
  ensure_init(params);
  ++t_;
  const double bc1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(b2_, static_cast<double>(t_));

  Eigen::MatrixXd* ms[] = {&m_.w1, &m_.b1, &m_.w2, &m_.b2,
                           &m_.wv, &m_.bv, &m_.wa, &m_.ba};
  Eigen::MatrixXd* vs[] = {&v_.w1, &v_.b1, &v_.w2, &v_.b2,
                           &v_.wv, &v_.bv, &v_.wa, &v_.ba};
  Eigen::MatrixXd* ps[] = {&params.w1, &params.b1, &params.w2, &params.b2,
                           &params.wv, &params.bv, &params.wa, &params.ba};
  const Eigen::MatrixXd* gs[] = {&grads.w1, &grads.b1, &grads.w2, &grads.b2,
                                 &grads.wv, &grads.bv, &grads.wa, &grads.ba};
  for (int i = 0; i < 8; ++i) {
    Eigen::ArrayXXd g = gs[i]->array();
    ms[i]->array() = b1_ * ms[i]->array() + (1.0 - b1_) * g;
    vs[i]->array() = b2_ * vs[i]->array() + (1.0 - b2_) * g.square();
    ps[i]->array() -=
        lr_ * (ms[i]->array() / bc1) / ((vs[i]->array() / bc2).sqrt() + eps_);
  }
}

void AdamOptimizer::restore(Tensors m, Tensors v, std::int64_t t) {
  m_ = std::move(m);
  v_ = std::move(v);
  t_ = t;
  ready_ = true;
}

namespace {

constexpr char kMagic[8] = {'D', 'S', 'F', 'E', 'C', 'K', 'P', '1'};

void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_i64(std::ostream& os, std::int64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_f64(std::ostream& os, double v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
std::int64_t read_i64(std::istream& is) {
  std::int64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
double read_f64(std::istream& is) {
  double v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

void write_tensor(std::ostream& os, const Eigen::MatrixXd& m) {
  write_u32(os, static_cast<std::uint32_t>(m.rows()));
  write_u32(os, static_cast<std::uint32_t>(m.cols()));
  os.write(reinterpret_cast<const char*>(m.data()),
           static_cast<std::streamsize>(m.size() * sizeof(double)));
}

void read_tensor(std::istream& is, Eigen::MatrixXd& m) {
  const std::uint32_t rows = read_u32(is);
  const std::uint32_t cols = read_u32(is);
  if (rows != static_cast<std::uint32_t>(m.rows()) ||
      cols != static_cast<std::uint32_t>(m.cols())) {
    throw std::runtime_error("checkpoint: tensor shape mismatch");
  }
  is.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(m.size() * sizeof(double)));
}

}  // namespace

void save_checkpoint(const std::string& path, const DuelingQNetwork& net,
                     AdamOptimizer& adam, const CheckpointMeta& meta) {
  adam.ensure_init(net.params());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + path);
  os.write(kMagic, sizeof(kMagic));
  write_u32(os, 1);
  write_u32(os, static_cast<std::uint32_t>(net.inputs()));
  write_u32(os, static_cast<std::uint32_t>(net.hidden()));
  write_u32(os, static_cast<std::uint32_t>(net.actions()));
  net.params().for_each(
      [&os](const Eigen::MatrixXd& m) { write_tensor(os, m); });
  write_i64(os, adam.step_count());
  adam.first_moments().for_each(
      [&os](const Eigen::MatrixXd& m) { write_tensor(os, m); });
  adam.second_moments().for_each(
      [&os](const Eigen::MatrixXd& m) { write_tensor(os, m); });
  write_i64(os, meta.epoch);
  write_f64(os, meta.epsilon);
  os.put(meta.converged ? 1 : 0);
  if (!os) throw std::runtime_error("checkpoint: write failed: " + path);
}

CheckpointMeta load_checkpoint(const std::string& path, DuelingQNetwork& net,
                               AdamOptimizer& adam) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("checkpoint: bad magic");
  }
  if (read_u32(is) != 1) throw std::runtime_error("checkpoint: bad version");
  const std::uint32_t inputs = read_u32(is);
  const std::uint32_t hidden = read_u32(is);
  const std::uint32_t actions = read_u32(is);
  if (inputs != static_cast<std::uint32_t>(net.inputs()) ||
      hidden != static_cast<std::uint32_t>(net.hidden()) ||
      actions != static_cast<std::uint32_t>(net.actions())) {
    throw std::runtime_error("checkpoint: network shape mismatch");
  }
  net.params().for_each([&is](Eigen::MatrixXd& m) { read_tensor(is, m); });
  const std::int64_t t = read_i64(is);
  Tensors m = net.zeros_like();
  Tensors v = net.zeros_like();
  m.for_each([&is](Eigen::MatrixXd& t2) { read_tensor(is, t2); });
  v.for_each([&is](Eigen::MatrixXd& t2) { read_tensor(is, t2); });
  adam.restore(std::move(m), std::move(v), t);
  CheckpointMeta meta;
  meta.epoch = read_i64(is);
  meta.epsilon = read_f64(is);
  meta.converged = is.get() == 1;
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return meta;
}

double finite_diff_check(DuelingQNetwork& net, const Eigen::VectorXd& state,
                         int action, double target, double h, int min_params,
                         Rng& rng) {
  if (h <= 0) throw std::invalid_argument("finite_diff_check: h must be > 0");

  Tensors grads = net.zeros_like();
  {
    ForwardCache cache = net.forward(state);
    net.backward(cache, {action}, Eigen::VectorXd::Constant(1, target), grads);
  }
  auto loss_at = [&]() {
    ForwardCache cache = net.forward(state);
    const double err = cache.q(action, 0) - target;
    return err * err;
  };

  std::vector<Eigen::MatrixXd*> param_list, grad_list;
  net.params().for_each(
      [&param_list](Eigen::MatrixXd& m) { param_list.push_back(&m); });
  grads.for_each([&grad_list](Eigen::MatrixXd& m) { grad_list.push_back(&m); });

  const int per_tensor =
      (min_params + static_cast<int>(param_list.size()) - 1) /
      static_cast<int>(param_list.size());
  double worst = 0.0;
  for (std::size_t ti = 0; ti < param_list.size(); ++ti) {
    Eigen::MatrixXd& p = *param_list[ti];
    const Eigen::MatrixXd& g = *grad_list[ti];
    const int n = static_cast<int>(
        std::min<Eigen::Index>(p.size(), static_cast<Eigen::Index>(per_tensor)));
    for (int s = 0; s < n; ++s) {
      const std::size_t idx = rng.uniform_index(static_cast<std::size_t>(p.size()));
      double* slot = p.data() + idx;
      const double orig = *slot;
      *slot = orig + h;
      const double up = loss_at();
      *slot = orig - h;
      const double down = loss_at();
      *slot = orig;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = g.data()[idx];
      const double denom =
          std::max({std::abs(numeric), std::abs(analytic), 1e-6});
      worst = std::max(worst, std::abs(numeric - analytic) / denom);
    }
  }
  return worst;
}

}  // namespace dsfec
