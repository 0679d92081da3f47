#pragma once

#include <cmath>
#include <memory>
#include <string>

#include <Eigen/SparseCholesky>

#ifdef THERMO_OPT_USE_CHOLMOD
#include <cholmod.h>
#endif

#include "thermo_opt/error.hpp"
#include "thermo_opt/sparse_system.hpp"

namespace thermo_opt {

enum class SolverMethod { CG, Cholesky };
enum class Preconditioner { Jacobi, None };

struct SolverSettings {
  SolverMethod method = SolverMethod::CG;
  double rel_tol = 1e-10;
  int max_iter = 0;  // 0 selects 10 * dofs
  Preconditioner preconditioner = Preconditioner::Jacobi;

  void validate() const {
    if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw Error(ErrorCode::InvalidConfig, "solver rel_tol must lie in (0,1)");
    if (max_iter < 0) throw Error(ErrorCode::InvalidConfig, "solver max_iter must be >= 1 (or 0 for default)");
  }
};

struct SolveReport {
  bool converged = true;
  int iterations = 0;
  double relative_residual = 0.0;
};

struct SolveResult {
  Vector x;
  SolveReport report;
};

/// Preconditioned conjugate gradients. On non-convergence the last iterate is
/// returned with report.converged = false.
inline SolveResult conjugate_gradient(const SparseMatrix& a, const Vector& b, const SolverSettings& settings,
                                      const Vector* x0 = nullptr) {
  settings.validate();
  const Eigen::Index n = a.rows();
  SolveResult out;
  out.x = x0 ? *x0 : Vector::Zero(n);
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    out.x.setZero();
    return out;
  }
  Vector inv_diag = Vector::Ones(n);
  if (settings.preconditioner == Preconditioner::Jacobi) {
    const Vector diag = a.diagonal();
    for (Eigen::Index i = 0; i < n; ++i) inv_diag[i] = diag[i] != 0.0 ? 1.0 / diag[i] : 1.0;
  }
  const int max_iter = settings.max_iter > 0 ? settings.max_iter : static_cast<int>(10 * n);
  Vector r = b - a * out.x;
  Vector z = inv_diag.cwiseProduct(r);
  Vector p = z;
  double rz = r.dot(z);
  double rnorm = r.norm();
  int it = 0;
  while (rnorm > settings.rel_tol * bnorm && it < max_iter) {
    const Vector ap = a * p;
    const double pap = p.dot(ap);
    if (!(pap > 0.0)) break;  // lost positive definiteness
    const double step = rz / pap;
    out.x.noalias() += step * p;
    r.noalias() -= step * ap;
    z = inv_diag.cwiseProduct(r);
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
    rnorm = r.norm();
    ++it;
  }
  out.report.iterations = it;
  out.report.relative_residual = (b - a * out.x).norm() / bnorm;
  out.report.converged = out.report.relative_residual <= settings.rel_tol;
  return out;
}

/// Sparse Cholesky factor P A P' = L L', reusable for many right-hand sides.
/// Factorization uses CHOLMOD (supernodal) when built with
/// THERMO_OPT_USE_CHOLMOD, otherwise Eigen's SimplicialLLT with AMD ordering.
/// The factor is kept as an Eigen matrix, so solving is const and may be
/// shared across threads.
class CholeskyFactor {
 public:
  using ColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
  using Permutation = Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int>;

  CholeskyFactor() = default;

  explicit CholeskyFactor(const SparseMatrix& a) { factorize(a); }

  void factorize(const SparseMatrix& a) {
    if (a.rows() != a.cols()) throw Error(ErrorCode::SingularMatrix, "Cholesky needs a square matrix");
    impl_.reset();
    auto f = std::make_shared<Factor>();
    const ColMatrix col = a;
#ifdef THERMO_OPT_USE_CHOLMOD
    factorize_cholmod(col, *f);
#else
    Eigen::SimplicialLLT<ColMatrix> llt(col);
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorCode::SingularMatrix, "Cholesky factorization failed (matrix not SPD)");
    }
    f->L = llt.matrixL();
    f->P = llt.permutationP();
#endif
    impl_ = std::move(f);
  }

  bool ready() const { return impl_ != nullptr; }

  /// Nonzeros of the triangular factor.
  Eigen::Index factor_nonzeros() const { return impl_ ? impl_->L.nonZeros() : 0; }

  Vector solve(const Vector& b) const {
    Vector y = impl_->P * b;
    impl_->L.triangularView<Eigen::Lower>().solveInPlace(y);
    impl_->L.transpose().triangularView<Eigen::Upper>().solveInPlace(y);
    return impl_->P.transpose() * y;
  }

  Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const {
    Eigen::MatrixXd y = impl_->P * b;
    impl_->L.triangularView<Eigen::Lower>().solveInPlace(y);
    impl_->L.transpose().triangularView<Eigen::Upper>().solveInPlace(y);
    return impl_->P.transpose() * y;
  }

 private:
  struct Factor {
    ColMatrix L;
    Permutation P;
  };

#ifdef THERMO_OPT_USE_CHOLMOD
  static void factorize_cholmod(const ColMatrix& a, Factor& out) {
    ColMatrix lower = a.triangularView<Eigen::Lower>();
    lower.makeCompressed();
    cholmod_common common;
    cholmod_start(&common);
    // Simplicial LDL' accepts indefinite matrices; LL' reports them.
    common.final_ll = 1;
    common.print = 0;
    cholmod_sparse A{};
    A.nrow = static_cast<std::size_t>(lower.rows());
    A.ncol = static_cast<std::size_t>(lower.cols());
    A.nzmax = static_cast<std::size_t>(lower.nonZeros());
    A.p = lower.outerIndexPtr();
    A.i = lower.innerIndexPtr();
    A.x = lower.valuePtr();
    A.stype = -1;
    A.itype = CHOLMOD_INT;
    A.xtype = CHOLMOD_REAL;
    A.dtype = CHOLMOD_DOUBLE;
    A.sorted = 1;
    A.packed = 1;
    cholmod_factor* L = cholmod_analyze(&A, &common);
    bool ok = L != nullptr && cholmod_factorize(&A, L, &common) && common.status == CHOLMOD_OK &&
              L->minor == L->n;
    if (ok) ok = cholmod_change_factor(CHOLMOD_REAL, true, false, true, true, L, &common);
    if (ok) {
      const auto n = static_cast<int>(L->n);
      const int* p = static_cast<const int*>(L->p);
      const Eigen::Map<const ColMatrix> view(n, n, p[n], p, static_cast<const int*>(L->i),
                                             static_cast<const double*>(L->x));
      out.L = view;
      // CHOLMOD factors rows Perm[k] of A into row k; Eigen's P maps i -> indices[i].
      const int* perm = static_cast<const int*>(L->Perm);
      Eigen::VectorXi indices(n);
      for (int k = 0; k < n; ++k) indices[perm[k]] = k;
      out.P = Permutation(indices);
    }
    cholmod_free_factor(&L, &common);
    cholmod_finish(&common);
    if (!ok) throw Error(ErrorCode::SingularMatrix, "Cholesky factorization failed (matrix not SPD)");
  }
#endif

  std::shared_ptr<const Factor> impl_;
};

inline SolveResult solve(const SparseMatrix& a, const Vector& b, const SolverSettings& settings = {}) {
  if (settings.method == SolverMethod::CG) return conjugate_gradient(a, b, settings);
  SolveResult out;
  CholeskyFactor factor(a);
  out.x = factor.solve(b);
  const double bnorm = b.norm();
  out.report.relative_residual = bnorm > 0.0 ? (b - a * out.x).norm() / bnorm : 0.0;
  out.report.converged = out.report.relative_residual <= settings.rel_tol;
  return out;
}

inline SolveResult solve(const SparseSystem& system, const SolverSettings& settings = {}) {
  return solve(system.matrix, system.rhs, settings);
}

}  // namespace thermo_opt
