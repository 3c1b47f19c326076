#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "dsfec/sim/event_loop.hpp"
#include "dsfec/sim/rng.hpp"
#include "dsfec/sim/time.hpp"

namespace dsfec {

enum class LossKind { kFixed, kUniform, kMarkov };

struct LossConfig {
  LossKind kind = LossKind::kFixed;
  double fixed_pe = 0.0;
  std::vector<double> values;   // candidate p_e values (uniform set / Markov states)
  SimTime interval_ms = 0;      // uniform redraw period
  double mean_holding_ms = 0;   // Markov exponential state holding mean
  std::vector<std::vector<double>> matrix;  // Markov transition rows
};

// Birth-death chain over n states: reflecting ends (stay 0.4 / move 0.6),
// interior states stay 0.2 and move up or down 0.4 each.
std::vector<std::vector<double>> birth_death_matrix(std::size_t n);

// Throws on non-square, negative, non-tridiagonal, or non-stochastic rows.
void validate_transition_matrix(const std::vector<std::vector<double>>& m);

// Stationary distribution of a birth-death chain by detailed balance.
std::vector<double> stationary_distribution(
    const std::vector<std::vector<double>>& m);

// One transition from `state` using the matrix row and a single uniform draw.
std::size_t markov_step(std::size_t state,
                        const std::vector<std::vector<double>>& m, Rng& rng);

// Exponential holding time rounded to >= 1 ms.
SimTime holding_time(Rng& rng, double mean_ms);

// Packet erasure probability evolving on the event loop. Draw order per
// round: initial value first, then one value draw plus (Markov) one holding
// draw per evolution event. Every evolution event reports through on_change,
// same-value redraws included.
class LossProcess {
 public:
  LossProcess(EventLoop& loop, LossConfig cfg, Rng& rng);

  void start(std::function<void(SimTime, double)> on_change);
  void stop();

  double current_pe() const { return pe_; }
  int current_state() const { return state_; }

 private:
  void draw_initial();
  void evolve();
  void arm();

  EventLoop& loop_;
  LossConfig cfg_;
  Rng& rng_;
  std::function<void(SimTime, double)> on_change_;
  std::vector<double> stationary_;
  double pe_ = 0.0;
  int state_ = -1;
  EventId timer_ = 0;
  bool armed_ = false;
};

}  // namespace dsfec
