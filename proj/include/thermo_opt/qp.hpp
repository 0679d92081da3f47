#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "thermo_opt/error.hpp"

namespace thermo_opt {

/// Dense convex QP
///   min 1/2 d'Gd + g'd
///   s.t. A_eq d + b_eq = 0,  A_in d + b_in >= 0,  lower <= d <= upper.
/// Infinite bounds are ignored.
struct QpProblem {
  Eigen::MatrixXd G;
  Eigen::VectorXd g;
  Eigen::MatrixXd A_eq;
  Eigen::VectorXd b_eq;
  Eigen::MatrixXd A_in;
  Eigen::VectorXd b_in;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

/// Multipliers follow G d + g = A_eq' mult_eq + A_in' mult_in
///                              + mult_lower - mult_upper,
/// with mult_in, mult_lower, mult_upper >= 0.
struct QpSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd mult_eq;
  Eigen::VectorXd mult_in;
  Eigen::VectorXd mult_lower;
  Eigen::VectorXd mult_upper;
  double objective = 0.0;
  int iterations = 0;
};

namespace detail {

// Dual active-set method of Goldfarb and Idnani. Constraint normals are the
// columns of CE / CI: CE' x + ce0 = 0, CI' x + ci0 >= 0.
class GoldfarbIdnani {
 public:
  GoldfarbIdnani(const Eigen::MatrixXd& G, const Eigen::VectorXd& g0, const Eigen::MatrixXd& CE,
                 const Eigen::VectorXd& ce0, const Eigen::MatrixXd& CI, const Eigen::VectorXd& ci0)
      : n_(static_cast<int>(G.rows())), p_(static_cast<int>(CE.cols())), m_(static_cast<int>(CI.cols())),
        CE_(CE), ce0_(ce0), CI_(CI), ci0_(ci0) {
    Eigen::LLT<Eigen::MatrixXd> llt(G);
    if (llt.info() != Eigen::Success) throw Error(ErrorCode::QpInfeasible, "QP Hessian is not positive definite");
    const Eigen::MatrixXd L = llt.matrixL();
    // J = L^{-T}
    J_ = L.transpose().triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(n_, n_));
    R_ = Eigen::MatrixXd::Zero(n_, n_);
    x_ = -llt.solve(g0);
    c1_ = G.trace();
    c2_ = J_.trace();
    u_ = Eigen::VectorXd::Zero(m_ + p_);
    A_.assign(m_ + p_, 0);
    g0_ = g0;
    G_ = G;
  }

  void solve() {
    const double inf = std::numeric_limits<double>::infinity();
    Eigen::VectorXd d(n_), z(n_), r(m_ + p_);
    for (int i = 0; i < p_; ++i) {
      const Eigen::VectorXd np = CE_.col(i);
      compute_d(d, np);
      update_z(z, d);
      update_r(r, d);
      double t2 = 0.0;
      if (z.dot(z) > kEps) t2 = (-np.dot(x_) - ce0_[i]) / z.dot(np);
      x_ += t2 * z;
      u_[iq_] = t2;
      for (int k = 0; k < iq_; ++k) u_[k] -= t2 * r[k];
      A_[i] = -i - 1;
      if (!add_constraint(d)) throw Error(ErrorCode::QpInfeasible, "equality constraints are linearly dependent");
    }

    std::vector<int> iai(m_);
    std::vector<char> iaexcl(m_, 1);
    Eigen::VectorXd s(m_);
    for (int i = 0; i < m_; ++i) iai[i] = i;
    Eigen::VectorXd x_old, u_old;
    std::vector<int> A_old;
    const int max_iter = 50 * (m_ + p_ + n_) + 100;

    while (true) {  // step 1
      if (++iterations_ > max_iter) throw Error(ErrorCode::QpInfeasible, "QP active-set iteration limit reached");
      for (int i = p_; i < iq_; ++i) iai[A_[i]] = -1;
      double psi = 0.0;
      for (int i = 0; i < m_; ++i) {
        iaexcl[i] = 1;
        s[i] = CI_.col(i).dot(x_) + ci0_[i];
        psi += std::min(0.0, s[i]);
      }
      if (std::abs(psi) <= m_ * kEps * c1_ * c2_ * 100.0) return;
      x_old = x_;
      u_old = u_;
      A_old = A_;

      bool restart = false;
      while (!restart) {  // step 2: pick the most violated constraint
        int ip = -1;
        double ss = 0.0;
        for (int i = 0; i < m_; ++i) {
          if (iai[i] != -1 && iaexcl[i] && s[i] < ss - violation_tol(i)) {
            ss = s[i];
            ip = i;
          }
        }
        if (ip < 0) return;
        const Eigen::VectorXd np = CI_.col(ip);
        u_[iq_] = 0.0;
        A_[iq_] = ip;

        while (true) {  // step 2a
          if (++iterations_ > max_iter) throw Error(ErrorCode::QpInfeasible, "QP active-set iteration limit reached");
          compute_d(d, np);
          update_z(z, d);
          update_r(r, d);
          int l = 0;
          double t1 = inf;
          for (int k = p_; k < iq_; ++k) {
            if (r[k] > 0.0 && u_[k] / r[k] < t1) {
              t1 = u_[k] / r[k];
              l = A_[k];
            }
          }
          double t2 = inf;
          if (std::abs(z.dot(z)) > kEps) t2 = -s[ip] / z.dot(np);
          const double t = std::min(t1, t2);
          if (t >= inf) throw Error(ErrorCode::QpInfeasible, "QP constraints are inconsistent");
          if (t2 >= inf) {
            // Dual-only step: drop the blocking constraint.
            for (int k = 0; k < iq_; ++k) u_[k] -= t * r[k];
            u_[iq_] += t;
            iai[l] = l;
            delete_constraint(l);
            continue;
          }
          x_ += t * z;
          for (int k = 0; k < iq_; ++k) u_[k] -= t * r[k];
          u_[iq_] += t;
          if (t == t2) {
            if (!add_constraint(d)) {
              // Degenerate: exclude this constraint and restore the old point.
              iaexcl[ip] = 0;
              delete_constraint(ip);
              for (int i = 0; i < m_; ++i) iai[i] = i;
              for (int i = p_; i < iq_; ++i) {
                A_[i] = A_old[i];
                u_[i] = u_old[i];
                iai[A_[i]] = -1;
              }
              x_ = x_old;
              break;  // back to step 2
            }
            iai[ip] = -1;
            restart = true;
            break;
          }
          iai[l] = l;
          delete_constraint(l);
          s[ip] = CI_.col(ip).dot(x_) + ci0_[ip];
        }
      }
    }
  }

  const Eigen::VectorXd& x() const { return x_; }
  int iterations() const { return iterations_; }
  int active_count() const { return iq_; }
  int active(int k) const { return A_[k]; }
  double multiplier(int k) const { return u_[k]; }

 private:
  static constexpr double kEps = std::numeric_limits<double>::epsilon();

  double violation_tol(int i) const {
    return 1e-13 * (1.0 + std::abs(ci0_[i]) + CI_.col(i).norm() * x_.norm());
  }

  void compute_d(Eigen::VectorXd& d, const Eigen::VectorXd& np) const { d = J_.transpose() * np; }

  void update_z(Eigen::VectorXd& z, const Eigen::VectorXd& d) const {
    z = J_.rightCols(n_ - iq_) * d.tail(n_ - iq_);
  }

  void update_r(Eigen::VectorXd& r, const Eigen::VectorXd& d) const {
    for (int i = iq_ - 1; i >= 0; --i) {
      double sum = 0.0;
      for (int j = i + 1; j < iq_; ++j) sum += R_(i, j) * r[j];
      r[i] = (d[i] - sum) / R_(i, i);
    }
  }

  bool add_constraint(Eigen::VectorXd& d) {
    for (int j = n_ - 1; j >= iq_ + 1; --j) {
      double cc = d[j - 1];
      double ss = d[j];
      const double h = std::hypot(cc, ss);
      if (h == 0.0) continue;
      d[j] = 0.0;
      ss /= h;
      cc /= h;
      if (cc < 0.0) {
        cc = -cc;
        ss = -ss;
        d[j - 1] = -h;
      } else {
        d[j - 1] = h;
      }
      const double xny = ss / (1.0 + cc);
      for (int k = 0; k < n_; ++k) {
        const double t1 = J_(k, j - 1);
        const double t2 = J_(k, j);
        J_(k, j - 1) = t1 * cc + t2 * ss;
        J_(k, j) = xny * (t1 + J_(k, j - 1)) - t2;
      }
    }
    ++iq_;
    for (int i = 0; i < iq_; ++i) R_(i, iq_ - 1) = d[i];
    if (std::abs(d[iq_ - 1]) <= kEps * r_norm_) return false;
    r_norm_ = std::max(r_norm_, std::abs(d[iq_ - 1]));
    return true;
  }

  void delete_constraint(int l) {
    int qq = -1;
    for (int i = p_; i < iq_; ++i) {
      if (A_[i] == l) {
        qq = i;
        break;
      }
    }
    if (qq < 0) return;
    for (int i = qq; i < iq_ - 1; ++i) {
      A_[i] = A_[i + 1];
      u_[i] = u_[i + 1];
      R_.col(i) = R_.col(i + 1);
    }
    A_[iq_ - 1] = A_[iq_];
    u_[iq_ - 1] = u_[iq_];
    A_[iq_] = 0;
    u_[iq_] = 0.0;
    for (int j = 0; j < iq_; ++j) R_(j, iq_ - 1) = 0.0;
    --iq_;
    if (iq_ == 0) return;
    for (int j = qq; j < iq_; ++j) {
      double cc = R_(j, j);
      double ss = R_(j + 1, j);
      const double h = std::hypot(cc, ss);
      if (h == 0.0) continue;
      cc /= h;
      ss /= h;
      R_(j + 1, j) = 0.0;
      if (cc < 0.0) {
        R_(j, j) = -h;
        cc = -cc;
        ss = -ss;
      } else {
        R_(j, j) = h;
      }
      const double xny = ss / (1.0 + cc);
      for (int k = j + 1; k < iq_; ++k) {
        const double t1 = R_(j, k);
        const double t2 = R_(j + 1, k);
        R_(j, k) = t1 * cc + t2 * ss;
        R_(j + 1, k) = xny * (t1 + R_(j, k)) - t2;
      }
      for (int k = 0; k < n_; ++k) {
        const double t1 = J_(k, j);
        const double t2 = J_(k, j + 1);
        J_(k, j) = t1 * cc + t2 * ss;
        J_(k, j + 1) = xny * (J_(k, j) + t1) - t2;
      }
    }
  }

  int n_, p_, m_;
  Eigen::MatrixXd CE_;
  Eigen::VectorXd ce0_;
  Eigen::MatrixXd CI_;
  Eigen::VectorXd ci0_;
  Eigen::MatrixXd G_;
  Eigen::VectorXd g0_;
  Eigen::MatrixXd J_;
  Eigen::MatrixXd R_;
  Eigen::VectorXd x_;
  Eigen::VectorXd u_;
  std::vector<int> A_;
  int iq_ = 0;
  int iterations_ = 0;
  double r_norm_ = 1.0;
  double c1_ = 0.0;
  double c2_ = 0.0;
};

}  // namespace detail

inline QpSolution solve_qp(const QpProblem& qp) {
  const auto n = qp.G.rows();
  if (qp.G.cols() != n || qp.g.size() != n) throw Error(ErrorCode::QpInfeasible, "QP dimension mismatch");
  const auto p = qp.A_eq.rows();
  const auto m_lin = qp.A_in.rows();
  std::vector<std::pair<Eigen::Index, bool>> bound_rows;  // (variable, is_upper)
  for (Eigen::Index i = 0; i < qp.lower.size(); ++i)
    if (std::isfinite(qp.lower[i])) bound_rows.emplace_back(i, false);
  for (Eigen::Index i = 0; i < qp.upper.size(); ++i)
    if (std::isfinite(qp.upper[i])) bound_rows.emplace_back(i, true);
  const auto m = m_lin + static_cast<Eigen::Index>(bound_rows.size());

  Eigen::MatrixXd CE = p > 0 ? Eigen::MatrixXd(qp.A_eq.transpose()) : Eigen::MatrixXd(n, 0);
  Eigen::VectorXd ce0 = p > 0 ? qp.b_eq : Eigen::VectorXd(0);
  Eigen::MatrixXd CI = Eigen::MatrixXd::Zero(n, m);
  Eigen::VectorXd ci0(m);
  if (m_lin > 0) {
    CI.leftCols(m_lin) = qp.A_in.transpose();
    ci0.head(m_lin) = qp.b_in;
  }
  for (std::size_t k = 0; k < bound_rows.size(); ++k) {
    const auto [var, upper] = bound_rows[k];
    const auto col = m_lin + static_cast<Eigen::Index>(k);
    CI(var, col) = upper ? -1.0 : 1.0;
    ci0[col] = upper ? qp.upper[var] : -qp.lower[var];
  }

  detail::GoldfarbIdnani solver(qp.G, qp.g, CE, ce0, CI, ci0);
  solver.solve();

  QpSolution out;
  out.x = solver.x();
  out.iterations = solver.iterations();
  out.mult_eq = Eigen::VectorXd::Zero(p);
  out.mult_in = Eigen::VectorXd::Zero(m_lin);
  out.mult_lower = Eigen::VectorXd::Zero(n);
  out.mult_upper = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < solver.active_count(); ++k) {
    const int a = solver.active(k);
    const double u = solver.multiplier(k);
    if (a < 0) {
      out.mult_eq[-a - 1] = u;
    } else if (a < m_lin) {
      out.mult_in[a] = u;
    } else {
      const auto [var, upper] = bound_rows[a - m_lin];
      (upper ? out.mult_upper : out.mult_lower)[var] = u;
    }
  }
  out.objective = 0.5 * out.x.dot(qp.G * out.x) + qp.g.dot(out.x);
  return out;
}

}  // namespace thermo_opt
