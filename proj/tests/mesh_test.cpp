#include <gtest/gtest.h>

#include <map>
#include <numbers>
#include <set>

#include "thermo_opt/mesh.hpp"

using namespace thermo_opt;

namespace {

std::size_t unique_edges(const Mesh& m) {
  std::set<std::pair<int, int>> edges;
  for (const auto& t : m.tets)
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) edges.insert(std::minmax(t[i], t[j]));
  return edges.size();
}

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no exception";
  return ErrorCode::IoError;
}

}  // namespace

TEST(GenerateBox, SingleHex) {
  const Mesh m = generate_box(1, 1, 1, 1, 1, 1);
  EXPECT_EQ(m.nodes.size(), 8u);
  EXPECT_EQ(m.tets.size(), 6u);
  EXPECT_EQ(m.boundary_tris.size(), 12u);
  EXPECT_NO_THROW(validate_mesh(m));
}

TEST(GenerateBox, CountsFollowGridFormula) {
  for (int n = 1; n <= 4; ++n) {
    const Mesh m = generate_box(1, 1, 1, n, n, n);
    EXPECT_EQ(m.nodes.size(), static_cast<std::size_t>((n + 1) * (n + 1) * (n + 1)));
    EXPECT_EQ(m.tets.size(), static_cast<std::size_t>(6 * n * n * n));
    EXPECT_EQ(m.boundary_tris.size(), static_cast<std::size_t>(12 * n * n));
  }
}

TEST(GenerateBox, VolumeIsExact) {
  const Mesh m = generate_box(0.3, 1.7, 2.9, 3, 4, 5);
  EXPECT_NEAR(total_volume(m), 0.3 * 1.7 * 2.9, 1e-12 * 0.3 * 1.7 * 2.9);
  for (std::size_t t = 0; t < m.tets.size(); ++t) EXPECT_GT(tet_volume(m, t), 0.0);
}

TEST(GenerateBox, BoundaryFacesPointOutward) {
  const Mesh m = generate_box(1, 2, 3, 2, 2, 2);
  const Point3 c{0.5, 1.0, 1.5};
  for (const auto& tri : m.boundary_tris) {
    const auto& a = m.nodes[tri.nodes[0]];
    const auto& b = m.nodes[tri.nodes[1]];
    const auto& d = m.nodes[tri.nodes[2]];
    const Point3 n = geometry::cross(geometry::sub(b, a), geometry::sub(d, a));
    EXPECT_GT(geometry::dot(n, geometry::sub(a, c)), 0.0);
  }
  EXPECT_TRUE(boundary_is_closed(m));
}

TEST(GenerateBox, PatchAreasMatchFaces) {
  const Mesh m = generate_box(1, 2, 3, 2, 3, 4);
  std::map<int, double> area;
  for (const auto& tri : m.boundary_tris) area[tri.tag] += tri_area(m, tri);
  EXPECT_NEAR(area[kBoxXMin], 6.0, 1e-12);
  EXPECT_NEAR(area[kBoxYMax], 3.0, 1e-12);
  EXPECT_NEAR(area[kBoxZMin], 2.0, 1e-12);
}

TEST(GenerateBox, RejectsBadInput) {
  EXPECT_EQ(code_of([] { generate_box(1, 0, 1, 1, 1, 1); }), ErrorCode::InvalidDimension);
  EXPECT_EQ(code_of([] { generate_box(1, 1, 1, 1, 0, 1); }), ErrorCode::InvalidDimension);
}

TEST(PromoteToP2, SingleTet) {
  Mesh m;
  m.nodes = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  m.tets = {{0, 1, 2, 3}};
  m.vertex_count = 4;
  const Mesh p2 = promote_to_p2(m);
  EXPECT_EQ(p2.nodes.size(), 10u);
  EXPECT_EQ(p2.vertex_count, 4u);
  // Midpoint of edge (0, 1).
  const auto& mid = p2.nodes[p2.p2_tets[0][4]];
  EXPECT_DOUBLE_EQ(mid[0], 0.5);
  EXPECT_DOUBLE_EQ(mid[1], 0.0);
}

TEST(PromoteToP2, AddsOneNodePerUniqueEdge) {
  for (int n : {1, 2, 3}) {
    const Mesh m = generate_box(1, 1, 1, n, n, n);
    const Mesh p2 = promote_to_p2(m);
    EXPECT_EQ(p2.nodes.size(), m.nodes.size() + unique_edges(m));
    // Shared edges resolve to the same midpoint.
    std::set<int> mids;
    for (const auto& t : p2.p2_tets)
      for (int k = 4; k < 10; ++k) mids.insert(t[k]);
    EXPECT_EQ(mids.size(), unique_edges(m));
  }
}

TEST(PromoteToP2, SecondPromotionFails) {
  const Mesh p2 = promote_to_p2(generate_box(1, 1, 1, 1, 1, 1));
  EXPECT_EQ(code_of([&] { promote_to_p2(p2); }), ErrorCode::AlreadyP2);
}

TEST(AnnularSector, SolidQuarterCylinderIsClosed) {
  const Mesh m = generate_annular_sector(0.0, 0.1, 0.1, std::numbers::pi / 2, std::nullopt, {});
  EXPECT_NO_THROW(validate_mesh(m));
  EXPECT_TRUE(boundary_is_closed(m));
  const double exact = std::numbers::pi / 4 * 0.1 * 0.1 * 0.1;
  EXPECT_NEAR(total_volume(m), exact, 0.02 * exact);
}

TEST(AnnularSector, HollowSectorVolume) {
  const double angle = 1.0;
  const Mesh m = generate_annular_sector(0.2, 0.5, 0.05, angle, std::nullopt, {});
  EXPECT_TRUE(boundary_is_closed(m));
  const double exact = 0.5 * angle * (0.5 * 0.5 - 0.2 * 0.2) * 0.05;
  EXPECT_NEAR(total_volume(m), exact, 0.02 * exact);
}

TEST(AnnularSector, FullCircleHasNoCutPlanes) {
  const Mesh m = generate_annular_sector(0.1, 0.2, 0.05, 2 * std::numbers::pi, std::nullopt, {});
  EXPECT_TRUE(boundary_is_closed(m));
  for (const auto& tri : m.boundary_tris) {
    EXPECT_NE(tri.tag, kSectorSymX);
    EXPECT_NE(tri.tag, kSectorSymY);
  }
}

TEST(AnnularSector, BladeAddsVolume) {
  BladeSpec blade;
  blade.height = 0.1;
  blade.thickness = 0.02;
  blade.fillet = 0.005;
  const Mesh plain = generate_annular_sector(0.1, 0.3, 0.02, std::numbers::pi / 2, std::nullopt, {});
  const Mesh bladed = generate_annular_sector(0.1, 0.3, 0.02, std::numbers::pi / 2, blade, {});
  EXPECT_TRUE(boundary_is_closed(bladed));
  const double added = total_volume(bladed) - total_volume(plain);
  // Blade block plus fillets: at least the bare block, well below twice it.
  const double block = blade.height * blade.thickness * 0.02;
  EXPECT_GT(added, 0.8 * block);
  EXPECT_LT(added, 2.0 * block);
}

TEST(AnnularSector, CutPlanesAreTagged) {
  const Mesh m = generate_annular_sector(0.1, 0.2, 0.05, std::numbers::pi / 2, std::nullopt, {});
  for (const auto& tri : m.boundary_tris) {
    for (int k = 0; k < 3; ++k) {
      const auto& p = m.nodes[tri.nodes[k]];
      if (tri.tag == kSectorSymY) EXPECT_NEAR(p[1], 0.0, 1e-12);
      if (tri.tag == kSectorSymX) EXPECT_NEAR(p[0], 0.0, 1e-12);
    }
  }
}

TEST(AnnularSector, RejectsBadInput) {
  EXPECT_EQ(code_of([] { generate_annular_sector(0.2, 0.1, 0.1, 1.0, std::nullopt, {}); }),
            ErrorCode::InvalidDimension);
  EXPECT_EQ(code_of([] { generate_annular_sector(0.0, 0.1, 0.0, 1.0, std::nullopt, {}); }),
            ErrorCode::InvalidDimension);
  EXPECT_EQ(code_of([] { generate_annular_sector(0.0, 0.1, 0.1, 0.0, std::nullopt, {}); }),
            ErrorCode::DegenerateSector);
  EXPECT_EQ(code_of([] { generate_annular_sector(0.0, 0.1, 0.1, 7.0, std::nullopt, {}); }),
            ErrorCode::DegenerateSector);
}

TEST(DemoMesh, Levels) {
  const Mesh coarse = generate_demo_disk_blade(1);
  EXPECT_EQ(coarse.tets.size(), 288u);
  EXPECT_TRUE(boundary_is_closed(coarse));
  const Mesh fine = generate_demo_disk_blade(3);
  EXPECT_GE(fine.tets.size(), 5000u);
  EXPECT_LE(fine.tets.size(), 15000u);
  EXPECT_NO_THROW(validate_mesh(fine));
}

TEST(DemoMesh, AllFourLabelsPresent) {
  const Mesh m = generate_demo_disk_blade(1);
  const MeshStats s = mesh_stats(m);
  EXPECT_GT(s.patch_area.at(PatchLabel::Robin), 0.0);
  EXPECT_GT(s.patch_area.at(PatchLabel::SymX), 0.0);
  EXPECT_GT(s.patch_area.at(PatchLabel::SymY), 0.0);
  EXPECT_GT(s.patch_area.at(PatchLabel::Insulated), 0.0);
  // Cut planes are identical rectangles plus the blade-free section.
  EXPECT_NEAR(s.patch_area.at(PatchLabel::SymX), s.patch_area.at(PatchLabel::SymY), 1e-12);
}

TEST(ValidateMesh, DetectsProblems) {
  Mesh m = generate_box(1, 1, 1, 1, 1, 1);
  Mesh bad = m;
  bad.boundary_tris.pop_back();
  EXPECT_EQ(code_of([&] { validate_mesh(bad); }), ErrorCode::UntaggedBoundary);
  bad = m;
  bad.tets.clear();
  EXPECT_EQ(code_of([&] { validate_mesh(bad); }), ErrorCode::EmptyVolume);
  bad = m;
  bad.tets[0][0] = 99;
  EXPECT_EQ(code_of([&] { validate_mesh(bad); }), ErrorCode::MalformedFile);
}

TEST(OrientTets, FlipsNegativeVolume) {
  Mesh m = generate_box(1, 1, 1, 1, 1, 1);
  std::swap(m.tets[2][0], m.tets[2][1]);
  EXPECT_LT(tet_volume(m, 2), 0.0);
  EXPECT_EQ(orient_tets_positive(m), 1u);
  EXPECT_GT(tet_volume(m, 2), 0.0);
  EXPECT_FALSE(m.warnings.empty());
}
