#include "dsfec/channel/loss_model.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace dsfec {

std::vector<std::vector<double>> birth_death_matrix(std::size_t n) {
  if (n < 2) throw std::invalid_argument("birth_death_matrix: need >= 2 states");
  std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
  m[0][0] = 0.4;
  m[0][1] = 0.6;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    m[i][i - 1] = 0.4;
    m[i][i] = 0.2;
    m[i][i + 1] = 0.4;
  }
  m[n - 1][n - 2] = 0.6;
  m[n - 1][n - 1] = 0.4;
  return m;
}

void validate_transition_matrix(const std::vector<std::vector<double>>& m) {
  const std::size_t n = m.size();
  if (n < 2) throw std::invalid_argument("transition matrix: need >= 2 states");
  for (std::size_t i = 0; i < n; ++i) {
    if (m[i].size() != n) {
      throw std::invalid_argument("transition matrix: not square");
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double p = m[i][j];
      if (p < 0.0) throw std::invalid_argument("transition matrix: negative entry");
      if (p > 0.0 && (j > i + 1 || i > j + 1)) {
        throw std::invalid_argument("transition matrix: not tridiagonal");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw std::invalid_argument("transition matrix: row does not sum to 1");
    }
  }
}

std::vector<double> stationary_distribution(
    const std::vector<std::vector<double>>& m) {
  validate_transition_matrix(m);
  const std::size_t n = m.size();
  std::vector<double> pi(n, 0.0);
  pi[0] = 1.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double up = m[i][i + 1];
    const double down = m[i + 1][i];
    if (down <= 0.0) {
      throw std::invalid_argument("transition matrix: chain not irreducible");
    }
    pi[i + 1] = pi[i] * up / down;
  }
  double total = 0.0;
  for (double p : pi) total += p;
  for (double& p : pi) p /= total;
  return pi;
}

std::size_t markov_step(std::size_t state,
                        const std::vector<std::vector<double>>& m, Rng& rng) {
  const double u = rng.uniform01();
  double acc = 0.0;
  const auto& row = m.at(state);
  for (std::size_t j = 0; j < row.size(); ++j) {
    acc += row[j];
    if (u < acc) return j;
  }
  return row.size() - 1;
}

SimTime holding_time(Rng& rng, double mean_ms) {
  const auto t = static_cast<SimTime>(std::llround(rng.exponential(mean_ms)));
  return t < 1 ? 1 : t;
}

LossProcess::LossProcess(EventLoop& loop, LossConfig cfg, Rng& rng)
    : loop_(loop), cfg_(std::move(cfg)), rng_(rng) {
  switch (cfg_.kind) {
    case LossKind::kFixed:
      break;
    case LossKind::kUniform:
      if (cfg_.values.empty()) {
        throw std::invalid_argument("uniform loss model: empty value set");
      }
      if (cfg_.interval_ms <= 0) {
        throw std::invalid_argument("uniform loss model: interval must be positive");
      }
      break;
    case LossKind::kMarkov:
      if (cfg_.matrix.size() != cfg_.values.size()) {
        throw std::invalid_argument("markov loss model: matrix/value size mismatch");
      }
      if (cfg_.mean_holding_ms <= 0) {
        throw std::invalid_argument("markov loss model: holding mean must be positive");
      }
      stationary_ = stationary_distribution(cfg_.matrix);
      break;
  }
}

void LossProcess::start(std::function<void(SimTime, double)> on_change) {
  on_change_ = std::move(on_change);
  draw_initial();
  if (on_change_) on_change_(loop_.now(), pe_);
  arm();
}

void LossProcess::stop() {
  if (armed_) {
    loop_.cancel(timer_);
    armed_ = false;
  }
}

void LossProcess::draw_initial() {
  switch (cfg_.kind) {
    case LossKind::kFixed:
      pe_ = cfg_.fixed_pe;
      break;
    case LossKind::kUniform:
      pe_ = cfg_.values[rng_.uniform_index(cfg_.values.size())];
      break;
    case LossKind::kMarkov: {
      const double u = rng_.uniform01();
      double acc = 0.0;
      std::size_t s = stationary_.size() - 1;
      for (std::size_t j = 0; j < stationary_.size(); ++j) {
        acc += stationary_[j];
        if (u < acc) {
          s = j;
          break;
        }
      }
      state_ = static_cast<int>(s);
      pe_ = cfg_.values[s];
      break;
    }
  }
}

void LossProcess::evolve() {
  armed_ = false;
  switch (cfg_.kind) {
    case LossKind::kFixed:
      return;
    case LossKind::kUniform:
      pe_ = cfg_.values[rng_.uniform_index(cfg_.values.size())];
      break;
    case LossKind::kMarkov: {
      state_ = static_cast<int>(
          markov_step(static_cast<std::size_t>(state_), cfg_.matrix, rng_));
      pe_ = cfg_.values[static_cast<std::size_t>(state_)];
      break;
    }
  }
  if (on_change_) on_change_(loop_.now(), pe_);
  arm();
}

void LossProcess::arm() {
  SimTime dt = 0;
  switch (cfg_.kind) {
    case LossKind::kFixed:
      return;
    case LossKind::kUniform:
      dt = cfg_.interval_ms;
      break;
    case LossKind::kMarkov:
      dt = holding_time(rng_, cfg_.mean_holding_ms);
      break;
  }
  timer_ = loop_.schedule(dt, "loss-evolve", [this] { evolve(); });
  armed_ = true;
}

}  // namespace dsfec
