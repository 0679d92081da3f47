#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace thermo_opt {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Triplets = std::vector<Eigen::Triplet<double>>;

/// Interleaved node/component numbering: row = components * node + component.
struct DofMap {
  int components = 1;
  std::size_t nodes = 0;

  Eigen::Index row(std::size_t node, int component = 0) const {
    return static_cast<Eigen::Index>(node) * components + component;
  }
  Eigen::Index size() const { return static_cast<Eigen::Index>(nodes) * components; }
};

/// Local frame of a node whose displacement is expressed in rotated axes.
/// Columns of `basis` are the local axes in physical coordinates.
struct NodeFrame {
  int node = 0;
  Eigen::Matrix3d basis = Eigen::Matrix3d::Identity();
};

struct SparseSystem {
  SparseMatrix matrix;
  Vector rhs;
  DofMap dof_map;
  std::vector<NodeFrame> frames;
  std::vector<Eigen::Index> constrained_rows;

  /// Maps a solution of this (possibly rotated) system back to physical
  /// components.
  Vector to_physical(const Vector& local) const {
    Vector out = local;
    for (const auto& f : frames) {
      const auto r = dof_map.row(f.node);
      out.segment<3>(r) = f.basis * local.segment<3>(r);
    }
    return out;
  }
};

/// max |A - A^T| / max |A|.
inline double relative_asymmetry(const SparseMatrix& a) {
  const SparseMatrix at = a.transpose();
  const SparseMatrix diff = a - at;
  double dmax = 0.0;
  double amax = 0.0;
  for (int k = 0; k < diff.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(diff, k); it; ++it) dmax = std::max(dmax, std::abs(it.value()));
  for (int k = 0; k < a.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(a, k); it; ++it) amax = std::max(amax, std::abs(it.value()));
  return amax > 0.0 ? dmax / amax : 0.0;
}

}  // namespace thermo_opt
