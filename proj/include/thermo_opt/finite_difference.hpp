#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "thermo_opt/error.hpp"

namespace thermo_opt {

/// Default relative step, sqrt of double machine epsilon.
inline constexpr double kDefaultFdStep = 1.4901161193847656e-8;

struct FdSettings {
  double step = kDefaultFdStep;
  bool central = false;
  unsigned workers = 1;
};

/// Maps a point to a stacked output vector. A throw or a non-finite entry
/// marks the probe as failed.
using VectorFunction = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct FdJacobian {
  /// rows = outputs, cols = variables. Failed columns are zero.
  Eigen::MatrixXd jacobian;
  std::vector<char> column_failed;
  long evaluations = 0;

  bool any_failed() const { return std::find(column_failed.begin(), column_failed.end(), 1) != column_failed.end(); }
};

/// Runs task(i) for i in [0, count) on up to `workers` threads. The first
/// exception thrown by any task is rethrown after all threads join.
inline void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& task) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(count)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count && !failed; i = next++) {
          try {
            task(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
            failed = true;
          }
        }
      });
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

/// Per-variable step h_i = step * max(1, |x_i|). A forward step that would
/// leave the upper bound is taken backwards instead.
inline double fd_step_for(double xi, double step, double upper) {
  const double h = step * std::max(1.0, std::abs(xi));
  return (std::isfinite(upper) && xi + h > upper) ? -h : h;
}

/// Finite-difference Jacobian around x with known baseline f0. Forward mode
/// costs exactly n evaluations, central mode 2n.
inline FdJacobian fd_jacobian(const VectorFunction& f, const Eigen::VectorXd& x, const Eigen::VectorXd& f0,
                              const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                              const FdSettings& settings = {}) {
  const auto n = x.size();
  const auto m = f0.size();
  if (!(settings.step > 0.0)) throw Error(ErrorCode::InvalidConfig, "finite-difference step must be positive");
  FdJacobian out;
  out.jacobian = Eigen::MatrixXd::Zero(m, n);
  out.column_failed.assign(static_cast<std::size_t>(n), 0);
  std::atomic<long> evaluations{0};

  auto probe = [&](const Eigen::VectorXd& xp, Eigen::VectorXd& value) {
    ++evaluations;
    try {
      value = f(xp);
    } catch (const std::exception&) {
      return false;
    }
    return value.size() == m && value.allFinite();
  };

  // Column tasks are independent; central mode pairs both probes in one task.
  parallel_for(static_cast<std::size_t>(n), settings.workers, [&](std::size_t task) {
    const auto i = static_cast<Eigen::Index>(task);
    const double ub = upper.size() == n ? upper[i] : std::numeric_limits<double>::infinity();
    const double lb = lower.size() == n ? lower[i] : -std::numeric_limits<double>::infinity();
    Eigen::VectorXd xp = x;
    Eigen::VectorXd fp;
    if (!settings.central) {
      const double h = fd_step_for(x[i], settings.step, ub);
      xp[i] = x[i] + h;
      if (!probe(xp, fp)) {
        out.column_failed[task] = 1;
        return;
      }
      out.jacobian.col(i) = (fp - f0) / (xp[i] - x[i]);
      return;
    }
    const double h = settings.step * std::max(1.0, std::abs(x[i]));
    const double hi = std::isfinite(ub) ? std::min(x[i] + h, ub) : x[i] + h;
    const double lo = std::isfinite(lb) ? std::max(x[i] - h, lb) : x[i] - h;
    Eigen::VectorXd fm;
    xp[i] = hi;
    const bool ok_p = probe(xp, fp);
    xp[i] = lo;
    const bool ok_m = probe(xp, fm);
    if (!ok_p || !ok_m || !(hi > lo)) {
      out.column_failed[task] = 1;
      return;
    }
    out.jacobian.col(i) = (fp - fm) / (hi - lo);
  });
  out.evaluations = evaluations.load();
  return out;
}

}  // namespace thermo_opt
