#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "thermo_opt/error.hpp"

namespace thermo_opt {

using Point3 = std::array<double, 3>;

/// Semantic meaning of a boundary patch.
///
/// SymX / SymY are the two cut planes of a sector model (x = 0 and y = 0 for a
/// quarter model). They carry a zero normal-displacement constraint and are
/// thermally insulated.
enum class PatchLabel { Robin, SymX, SymY, Insulated };

inline std::string_view to_string(PatchLabel label) {
  switch (label) {
    case PatchLabel::Robin: return "robin";
    case PatchLabel::SymX: return "sym_x";
    case PatchLabel::SymY: return "sym_y";
    case PatchLabel::Insulated: return "insulated";
  }
  return "unknown";
}

inline std::optional<PatchLabel> parse_patch_label(std::string_view name) {
  if (name == "robin") return PatchLabel::Robin;
  if (name == "sym_x") return PatchLabel::SymX;
  if (name == "sym_y") return PatchLabel::SymY;
  if (name == "insulated") return PatchLabel::Insulated;
  return std::nullopt;
}

struct BoundaryTri {
  std::array<int, 3> nodes;
  int tag = 0;
};

/// Local edge numbering of a quadratic tetrahedron: vertex pairs for the
/// midpoint nodes 4..9.
inline constexpr std::array<std::array<int, 2>, 6> kTetEdges{
    {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

/// Tetrahedral volume mesh with tagged boundary triangles.
///
/// Vertex nodes come first (indices [0, vertex_count)); promote_to_p2 appends
/// edge midpoints after them. tets always hold the four vertex indices.
struct Mesh {
  std::vector<Point3> nodes;
  std::vector<std::array<int, 4>> tets;
  std::vector<BoundaryTri> boundary_tris;
  std::map<int, PatchLabel> patch_tags;
  std::map<std::pair<int, int>, int> edge_midpoint_index;
  std::vector<std::array<int, 10>> p2_tets;
  std::size_t vertex_count = 0;
  std::vector<std::string> warnings;

  bool is_p2() const { return !p2_tets.empty(); }

  PatchLabel label_of(const BoundaryTri& tri) const {
    auto it = patch_tags.find(tri.tag);
    return it == patch_tags.end() ? PatchLabel::Insulated : it->second;
  }

  bool has_label(PatchLabel label) const {
    return std::any_of(boundary_tris.begin(), boundary_tris.end(),
                       [&](const BoundaryTri& t) { return label_of(t) == label; });
  }

  /// Relabel every boundary triangle carrying `tag`.
  void retag(int tag, PatchLabel label) { patch_tags[tag] = label; }
};

namespace geometry {

inline Point3 sub(const Point3& a, const Point3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

inline Point3 cross(const Point3& a, const Point3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

inline double dot(const Point3& a, const Point3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

inline double norm(const Point3& a) { return std::sqrt(dot(a, a)); }

inline double tet_signed_volume(const Point3& a, const Point3& b, const Point3& c, const Point3& d) {
  return dot(sub(b, a), cross(sub(c, a), sub(d, a))) / 6.0;
}

inline double triangle_area(const Point3& a, const Point3& b, const Point3& c) {
  return 0.5 * norm(cross(sub(b, a), sub(c, a)));
}

}  // namespace geometry

inline double tet_volume(const Mesh& mesh, std::size_t t) {
  const auto& v = mesh.tets[t];
  return geometry::tet_signed_volume(mesh.nodes[v[0]], mesh.nodes[v[1]], mesh.nodes[v[2]], mesh.nodes[v[3]]);
}

inline double total_volume(const Mesh& mesh) {
  double sum = 0.0;
  for (std::size_t t = 0; t < mesh.tets.size(); ++t) sum += tet_volume(mesh, t);
  return sum;
}

inline double tri_area(const Mesh& mesh, const BoundaryTri& tri) {
  return geometry::triangle_area(mesh.nodes[tri.nodes[0]], mesh.nodes[tri.nodes[1]], mesh.nodes[tri.nodes[2]]);
}

using FaceKey = std::array<int, 3>;

inline FaceKey face_key(int a, int b, int c) {
  FaceKey k{a, b, c};
  std::sort(k.begin(), k.end());
  return k;
}

/// Faces of the tet mesh that belong to exactly one tetrahedron, oriented
/// with outward normal.
inline std::vector<std::array<int, 3>> exterior_faces(const Mesh& mesh) {
  // Local faces opposite to vertex 0..3, ordered so that the normal points away
  // from the opposite vertex for a positively oriented tet.
  static constexpr std::array<std::array<int, 3>, 4> kFaces{{{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}}};
  std::map<FaceKey, std::pair<int, std::array<int, 3>>> count;
  for (const auto& tet : mesh.tets) {
    for (const auto& f : kFaces) {
      std::array<int, 3> oriented{tet[f[0]], tet[f[1]], tet[f[2]]};
      auto [it, inserted] = count.try_emplace(face_key(oriented[0], oriented[1], oriented[2]), 0, oriented);
      ++it->second.first;
    }
  }
  std::vector<std::array<int, 3>> out;
  for (const auto& [key, entry] : count) {
    if (entry.first == 1) out.push_back(entry.second);
  }
  return out;
}

/// Checks the structural invariants; throws Error on violation.
inline void validate_mesh(const Mesh& mesh) {
  const auto n = static_cast<int>(mesh.nodes.size());
  if (mesh.tets.empty()) throw Error(ErrorCode::EmptyVolume, "mesh has no tetrahedra");
  for (std::size_t t = 0; t < mesh.tets.size(); ++t) {
    for (int v : mesh.tets[t]) {
      if (v < 0 || v >= n) throw Error(ErrorCode::MalformedFile, "tet node index out of range");
    }
    if (!(tet_volume(mesh, t) > 0.0)) {
      throw Error(ErrorCode::MalformedFile, "tet " + std::to_string(t) + " has nonpositive volume");
    }
  }
  std::map<FaceKey, int> exterior;
  for (const auto& f : exterior_faces(mesh)) exterior[face_key(f[0], f[1], f[2])] = 0;
  for (const auto& tri : mesh.boundary_tris) {
    for (int v : tri.nodes) {
      if (v < 0 || v >= n) throw Error(ErrorCode::MalformedFile, "boundary node index out of range");
    }
    auto it = exterior.find(face_key(tri.nodes[0], tri.nodes[1], tri.nodes[2]));
    if (it == exterior.end()) {
      throw Error(ErrorCode::MalformedFile, "boundary triangle is not an exterior face of exactly one tet");
    }
    if (++it->second > 1) throw Error(ErrorCode::MalformedFile, "boundary triangle listed twice");
  }
  for (const auto& [key, count] : exterior) {
    if (count == 0) throw Error(ErrorCode::UntaggedBoundary, "exterior face without a boundary triangle");
  }
}

/// True when every exterior face of the tet mesh appears exactly once in
/// boundary_tris.
inline bool boundary_is_closed(const Mesh& mesh) {
  std::map<FaceKey, int> listed;
  for (const auto& tri : mesh.boundary_tris) ++listed[face_key(tri.nodes[0], tri.nodes[1], tri.nodes[2])];
  const auto ext = exterior_faces(mesh);
  if (ext.size() != listed.size()) return false;
  for (const auto& f : ext) {
    auto it = listed.find(face_key(f[0], f[1], f[2]));
    if (it == listed.end() || it->second != 1) return false;
  }
  return true;
}

/// Swaps vertices of negatively oriented tets. Returns the number repaired.
inline std::size_t orient_tets_positive(Mesh& mesh) {
  std::size_t fixed = 0;
  for (std::size_t t = 0; t < mesh.tets.size(); ++t) {
    if (tet_volume(mesh, t) < 0.0) {
      std::swap(mesh.tets[t][2], mesh.tets[t][3]);
      ++fixed;
    }
  }
  if (fixed > 0) {
    mesh.warnings.push_back("reoriented " + std::to_string(fixed) + " negative-volume tetrahedra");
  }
  return fixed;
}

/// Adds one midpoint node per unique edge. P1 node coordinates are untouched.
inline Mesh promote_to_p2(const Mesh& p1) {
  if (p1.is_p2()) throw Error(ErrorCode::AlreadyP2, "mesh already carries quadratic nodes");
  Mesh out = p1;
  out.vertex_count = p1.nodes.size();
  out.p2_tets.reserve(p1.tets.size());
  for (const auto& tet : p1.tets) {
    std::array<int, 10> nodes{};
    for (int i = 0; i < 4; ++i) nodes[i] = tet[i];
    for (std::size_t e = 0; e < kTetEdges.size(); ++e) {
      int a = tet[kTetEdges[e][0]];
      int b = tet[kTetEdges[e][1]];
      auto key = std::minmax(a, b);
      auto [it, inserted] = out.edge_midpoint_index.try_emplace({key.first, key.second}, 0);
      if (inserted) {
        const auto& pa = out.nodes[a];
        const auto& pb = out.nodes[b];
        it->second = static_cast<int>(out.nodes.size());
        out.nodes.push_back({0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1]), 0.5 * (pa[2] + pb[2])});
      }
      nodes[4 + e] = it->second;
    }
    out.p2_tets.push_back(nodes);
  }
  return out;
}

namespace detail {

// Kuhn split of a hex into 6 tets sharing the 0-7 diagonal. Corner bits are
// (x, y, z) -> x + 2y + 4z.
inline constexpr std::array<std::array<int, 4>, 6> kKuhnTets{
    {{0, 1, 3, 7}, {0, 1, 5, 7}, {0, 2, 3, 7}, {0, 2, 6, 7}, {0, 4, 5, 7}, {0, 4, 6, 7}}};

// Emits the non-degenerate Kuhn tets of a (possibly collapsed) hex.
inline void push_hex(Mesh& mesh, const std::array<int, 8>& corner) {
  for (const auto& k : kKuhnTets) {
    std::array<int, 4> tet{corner[k[0]], corner[k[1]], corner[k[2]], corner[k[3]]};
    std::array<int, 4> sorted = tet;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) continue;
    double vol = geometry::tet_signed_volume(mesh.nodes[tet[0]], mesh.nodes[tet[1]], mesh.nodes[tet[2]],
                                             mesh.nodes[tet[3]]);
    if (vol < 0.0) std::swap(tet[2], tet[3]);
    mesh.tets.push_back(tet);
  }
}

}  // namespace detail

/// Patch tags used by generate_box: one tag per face, all Robin by default.
enum BoxFace : int { kBoxXMin = 1, kBoxXMax, kBoxYMin, kBoxYMax, kBoxZMin, kBoxZMax };

inline Mesh generate_box(double lx, double ly, double lz, int nx, int ny, int nz) {
  if (!(lx > 0.0 && ly > 0.0 && lz > 0.0) || nx < 1 || ny < 1 || nz < 1) {
    throw Error(ErrorCode::InvalidDimension, "box dimensions and subdivisions must be positive");
  }
  Mesh mesh;
  auto id = [&](int i, int j, int k) { return i + (nx + 1) * (j + (ny + 1) * k); };
  for (int k = 0; k <= nz; ++k)
    for (int j = 0; j <= ny; ++j)
      for (int i = 0; i <= nx; ++i) {
        // Exact end coordinates so face classification can compare with ==.
        mesh.nodes.push_back({i == nx ? lx : lx * i / nx, j == ny ? ly : ly * j / ny, k == nz ? lz : lz * k / nz});
      }
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        std::array<int, 8> c{};
        for (int b = 0; b < 8; ++b) c[b] = id(i + (b & 1), j + ((b >> 1) & 1), k + ((b >> 2) & 1));
        detail::push_hex(mesh, c);
      }
  mesh.vertex_count = mesh.nodes.size();
  const std::array<double, 3> ext{lx, ly, lz};
  for (const auto& f : exterior_faces(mesh)) {
    int tag = 0;
    for (int axis = 0; axis < 3 && tag == 0; ++axis) {
      bool all_min = true;
      bool all_max = true;
      for (int v : f) {
        all_min = all_min && mesh.nodes[v][axis] == 0.0;
        all_max = all_max && mesh.nodes[v][axis] == ext[axis];
      }
      if (all_min) tag = 1 + 2 * axis;
      if (all_max) tag = 2 + 2 * axis;
    }
    mesh.boundary_tris.push_back({f, tag});
  }
  for (int tag = kBoxXMin; tag <= kBoxZMax; ++tag) mesh.patch_tags[tag] = PatchLabel::Robin;
  return mesh;
}

/// Radial blade fused on the outer rim of a sector.
struct BladeSpec {
  double height = 0.15;     // radial extent above the rim (m)
  double thickness = 0.04;  // circumferential thickness (m)
  double fillet = 0.02;     // root fillet radius (m)
  std::optional<double> center_angle;  // defaults to the sector bisector
};

struct SectorResolution {
  int radial = 6;
  int angular = 8;   // cells outside the blade window, split across both sides
  int axial = 4;
  int blade_radial = 4;
  int blade_angular = 2;

  /// Resolution family used by the demo meshes; level 1 is coarse.
  static SectorResolution scaled(int level) {
    level = std::max(1, level);
    return {3 * level, 4 * level, 2 * level, 3 * level, level + 1};
  }
};

/// Patch tags used by generate_annular_sector.
enum SectorPatch : int { kSectorRobin = 1, kSectorSymX = 2, kSectorSymY = 3, kSectorEnds = 4, kSectorBore = 5 };

/// Sector of a (hollow) cylinder about the z axis, optionally with one blade.
///
/// The cut plane at theta = 0 is tagged SymY (y = 0), the one at theta = angle
/// SymX (x = 0 for a quarter model). Rim and blade are Robin, flat ends and the
/// bore are insulated.
inline Mesh generate_annular_sector(double r_inner, double r_outer, double z_len, double angle,
                                    const std::optional<BladeSpec>& blade, const SectorResolution& res) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  if (!(r_inner >= 0.0 && r_outer > r_inner && z_len > 0.0)) {
    throw Error(ErrorCode::InvalidDimension, "sector requires 0 <= r_inner < r_outer and z_len > 0");
  }
  if (!(angle > 0.0 && angle <= kTwoPi + 1e-12)) {
    throw Error(ErrorCode::DegenerateSector, "sector angle must lie in (0, 2*pi]");
  }
  if (res.radial < 1 || res.angular < 1 || res.axial < 1) {
    throw Error(ErrorCode::InvalidDimension, "sector subdivisions must be >= 1");
  }
  const bool full_circle = std::abs(angle - kTwoPi) < 1e-12;
  const bool collapsed_axis = r_inner == 0.0;

  // Angular grid: [0, t0], [t0, t1] (blade window), [t1, angle].
  std::vector<double> theta;
  int jb0 = 0;
  int jb1 = 0;
  double center = angle / 2.0;
  double half_window = 0.0;
  if (blade) {
    if (!(blade->height > 0.0 && blade->thickness > 0.0 && blade->fillet >= 0.0) || res.blade_radial < 1 ||
        res.blade_angular < 1) {
      throw Error(ErrorCode::InvalidDimension, "blade dimensions must be positive");
    }
    center = blade->center_angle.value_or(angle / 2.0);
    const double root_half = blade->thickness / 2.0 + blade->fillet;
    if (root_half >= r_outer) throw Error(ErrorCode::InvalidDimension, "blade root wider than the rim");
    half_window = std::asin(root_half / r_outer);
    if (center - half_window <= 0.0 || center + half_window >= angle) {
      throw Error(ErrorCode::DegenerateSector, "blade window does not fit inside the sector");
    }
    const double t0 = center - half_window;
    const double t1 = center + half_window;
    const int left = std::max(1, static_cast<int>(std::lround(res.angular * t0 / (angle - 2 * half_window))));
    const int right = std::max(1, res.angular - left);
    for (int j = 0; j < left; ++j) theta.push_back(t0 * j / left);
    jb0 = static_cast<int>(theta.size());
    for (int j = 0; j < res.blade_angular; ++j) theta.push_back(t0 + (t1 - t0) * j / res.blade_angular);
    jb1 = static_cast<int>(theta.size());
    for (int j = 0; j <= right; ++j) theta.push_back(t1 + (angle - t1) * j / right);
  } else {
    for (int j = 0; j <= res.angular; ++j) theta.push_back(angle * j / res.angular);
  }
  const int nt = static_cast<int>(theta.size()) - 1;
  if (collapsed_axis) {
    // Wedge cells around a collapsed axis must stay convex.
    for (int j = 0; j < nt; ++j) {
      if (theta[j + 1] - theta[j] >= std::numbers::pi) {
        throw Error(ErrorCode::DegenerateSector, "angular cells of a solid sector must span less than pi");
      }
    }
  }

  std::vector<double> radii;
  for (int i = 0; i <= res.radial; ++i) radii.push_back(r_inner + (r_outer - r_inner) * i / res.radial);
  const int nr = res.radial;
  const int nb = blade ? res.blade_radial : 0;
  std::vector<double> eta;  // blade heights above the rim, graded toward the root
  for (int i = 1; i <= nb; ++i) eta.push_back(blade->height * std::pow(static_cast<double>(i) / nb, 1.5));
  const int nz = res.axial;

  Mesh mesh;
  struct GridInfo {
    int ir;
    int it_min;
    int it_max;
    int iz;
  };
  std::vector<GridInfo> info;
  std::map<std::array<int, 3>, int> index;
  auto add_node = [&](int i, int j, int k, const Point3& p, int jmin, int jmax) {
    int id = static_cast<int>(mesh.nodes.size());
    mesh.nodes.push_back(p);
    info.push_back({i, jmin, jmax, k});
    index[{i, j, k}] = id;
    return id;
  };
  for (int k = 0; k <= nz; ++k) {
    const double z = z_len * k / nz;
    for (int i = 0; i <= nr; ++i) {
      if (collapsed_axis && i == 0) {
        int id = add_node(0, 0, k, {0.0, 0.0, z}, 0, nt);
        for (int j = 1; j <= nt; ++j) index[{0, j, k}] = id;
        continue;
      }
      for (int j = 0; j <= nt; ++j) {
        if (full_circle && j == nt) {
          index[{i, j, k}] = index.at({i, 0, k});
          continue;
        }
        add_node(i, j, k, {radii[i] * std::cos(theta[j]), radii[i] * std::sin(theta[j]), z}, j, j);
      }
    }
    for (int i = 1; i <= nb; ++i) {
      const double h = eta[i - 1];
      const double root_half = r_outer * std::sin(half_window);
      const double half_width = [&] {
        const double f = blade->fillet;
        if (f <= 0.0 || h >= f) return blade->thickness / 2.0;
        return blade->thickness / 2.0 + f - std::sqrt(f * f - (f - h) * (f - h));
      }();
      const Point3 er{std::cos(center), std::sin(center), 0.0};
      const Point3 et{-std::sin(center), std::cos(center), 0.0};
      for (int j = jb0; j <= jb1; ++j) {
        const double phi = theta[j] - center;
        const double s = r_outer * std::sin(phi) * half_width / root_half;
        const double a = r_outer * std::cos(phi) + h;
        add_node(nr + i, j, k, {a * er[0] + s * et[0], a * er[1] + s * et[1], z}, j, j);
      }
    }
  }
  mesh.vertex_count = mesh.nodes.size();

  auto corner_ids = [&](int i, int j, int k) {
    std::array<int, 8> c{};
    for (int b = 0; b < 8; ++b) c[b] = index.at({i + (b & 1), j + ((b >> 1) & 1), k + ((b >> 2) & 1)});
    return c;
  };
  for (int k = 0; k < nz; ++k) {
    for (int i = 0; i < nr; ++i)
      for (int j = 0; j < nt; ++j) detail::push_hex(mesh, corner_ids(i, j, k));
    for (int i = nr; i < nr + nb; ++i)
      for (int j = jb0; j < jb1; ++j) detail::push_hex(mesh, corner_ids(i, j, k));
  }

  for (const auto& f : exterior_faces(mesh)) {
    bool on_t0 = !full_circle;
    bool on_t1 = !full_circle;
    bool on_bore = !collapsed_axis;
    bool on_end = true;
    bool in_disk = true;
    int z_level = info[f[0]].iz;
    for (int v : f) {
      const auto& g = info[v];
      on_t0 = on_t0 && g.it_min == 0;
      on_t1 = on_t1 && g.it_max == nt;
      on_bore = on_bore && g.ir == 0;
      on_end = on_end && (g.iz == 0 || g.iz == nz) && g.iz == z_level;
      in_disk = in_disk && g.ir <= nr;
    }
    int tag = kSectorRobin;
    if (on_t0) {
      tag = kSectorSymY;
    } else if (on_t1) {
      tag = kSectorSymX;
    } else if (on_bore) {
      tag = kSectorBore;
    } else if (on_end && in_disk) {
      tag = kSectorEnds;
    }
    mesh.boundary_tris.push_back({f, tag});
  }
  mesh.patch_tags = {{kSectorRobin, PatchLabel::Robin},
                     {kSectorSymX, PatchLabel::SymX},
                     {kSectorSymY, PatchLabel::SymY},
                     {kSectorEnds, PatchLabel::Insulated},
                     {kSectorBore, PatchLabel::Insulated}};
  return mesh;
}

/// Quarter of a thin bladed disk: r in [0.10, 0.35] m, 20 mm thick, one
/// blade 100 mm high and 10 mm thick. Rim, blade and both disk faces are
/// Robin; the bore is insulated. Level 1 has 288 tets, level 3 about 7.8k.
inline Mesh generate_demo_disk_blade(int level) {
  BladeSpec blade;
  blade.height = 0.10;
  blade.thickness = 0.01;
  blade.fillet = 0.005;
  Mesh mesh =
      generate_annular_sector(0.10, 0.35, 0.02, std::numbers::pi / 2.0, blade, SectorResolution::scaled(level));
  mesh.patch_tags[kSectorEnds] = PatchLabel::Robin;
  return mesh;
}

struct MeshStats {
  std::size_t nodes = 0;
  std::size_t vertices = 0;
  std::size_t tets = 0;
  std::size_t boundary_tris = 0;
  double volume = 0.0;
  std::map<PatchLabel, double> patch_area;
};

inline MeshStats mesh_stats(const Mesh& mesh) {
  MeshStats s;
  s.nodes = mesh.nodes.size();
  s.vertices = mesh.vertex_count;
  s.tets = mesh.tets.size();
  s.boundary_tris = mesh.boundary_tris.size();
  s.volume = total_volume(mesh);
  for (const auto& tri : mesh.boundary_tris) s.patch_area[mesh.label_of(tri)] += tri_area(mesh, tri);
  return s;
}

}  // namespace thermo_opt
