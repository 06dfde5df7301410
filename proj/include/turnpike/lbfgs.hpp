#pragma once

#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <vector>

#include "turnpike/linalg.hpp"

namespace turnpike {

struct LbfgsOptions {
  int memory = 10;
  int max_iterations = 500;
  double grad_tol = 1e-6;
  double armijo = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 40;
  /// Stop after this many consecutive accepted steps whose decrease is at
  /// rounding level (the objective can no longer resolve progress).
  int max_stalled = 5;
};

struct LbfgsResult {
  Vector x;
  double value = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  bool stalled = false;
};

/// Hilbert-space description of the search space: an inner product, the Riesz
/// map turning Euclidean gradients into gradients in that inner product, and
/// the norm used for the stopping test.
struct SearchSpace {
  std::function<double(const Vector&, const Vector&)> dot;
  std::function<Vector(const Vector&)> riesz;
  std::function<double(const Vector&)> stop_norm;
};

/// Limited-memory BFGS with Armijo backtracking. `evaluate(x, grad)` returns
/// f(x) and writes the Euclidean gradient. Accepted steps never increase f.
inline LbfgsResult minimize_lbfgs(
    const std::function<double(const Vector&, Vector&)>& evaluate, Vector x,
    const SearchSpace& space, const LbfgsOptions& opts) {
  struct Pair {
    Vector s;
    Vector y;
    double rho;
  };
  std::deque<Pair> memory;

  Vector grad;
  double value = evaluate(x, grad);
  Vector g = space.riesz(grad);

  LbfgsResult out;
  int iter = 0;
  int stalled = 0;
  for (;;) {
    out.grad_norm = space.stop_norm(g);
    if (out.grad_norm <= opts.grad_tol) {
      out.converged = true;
      break;
    }
    if (iter >= opts.max_iterations) break;

    // Two-loop recursion in the space's inner product.
    Vector q = g;
    std::vector<double> alpha(memory.size());
    for (int i = static_cast<int>(memory.size()) - 1; i >= 0; --i) {
      alpha[i] = memory[i].rho * space.dot(memory[i].s, q);
      q -= alpha[i] * memory[i].y;
    }
    if (!memory.empty()) {
      const Pair& last = memory.back();
      q *= space.dot(last.s, last.y) / space.dot(last.y, last.y);
    }
    for (std::size_t i = 0; i < memory.size(); ++i) {
      const double beta = memory[i].rho * space.dot(memory[i].y, q);
      q += (alpha[i] - beta) * memory[i].s;
    }
    Vector dir = -q;
    double slope = space.dot(g, dir);
    if (!(slope < 0.0)) {
      memory.clear();
      dir = -g;
      slope = space.dot(g, dir);
    }

    double step = 1.0;
    bool accepted = false;
    Vector trial_grad;
    Vector trial;
    double trial_value = 0.0;
    for (int b = 0; b < opts.max_backtracks; ++b) {
      trial = x + step * dir;
      trial_value = evaluate(trial, trial_grad);
      if (std::isfinite(trial_value) && trial_value <= value + opts.armijo * step * slope) {
        accepted = true;
        break;
      }
      step *= opts.backtrack;
    }
    if (!accepted) {
      if (memory.empty()) break;
      memory.clear();
      continue;
    }

    ++iter;
    const double decrease = value - trial_value;
    stalled = decrease <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(value)
                  ? stalled + 1
                  : 0;
    const Vector g_new = space.riesz(trial_grad);
    Pair p{trial - x, g_new - g, 0.0};
    const double sy = space.dot(p.s, p.y);
    if (sy > 1e-12 * std::sqrt(space.dot(p.s, p.s) * space.dot(p.y, p.y))) {
      p.rho = 1.0 / sy;
      memory.push_back(std::move(p));
      if (static_cast<int>(memory.size()) > opts.memory) memory.pop_front();
    }
    x = std::move(trial);
    value = trial_value;
    g = g_new;
    if (stalled >= opts.max_stalled) {
      out.grad_norm = space.stop_norm(g);
      out.converged = out.grad_norm <= opts.grad_tol;
      out.stalled = !out.converged;
      break;
    }
  }
  out.x = std::move(x);
  out.value = value;
  out.iterations = iter;
  return out;
}

}  // namespace turnpike
