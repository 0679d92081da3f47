#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "thermo_opt/gmsh.hpp"

using namespace thermo_opt;

namespace {

const char* kSingleTet = R"($MeshFormat
2.2 0 8
$EndMeshFormat
$PhysicalNames
2
2 1 "robin"
3 100 "domain"
$EndPhysicalNames
$Nodes
4
1 0 0 0
2 1 0 0
3 0 1 0
4 0 0 1
$EndNodes
$Elements
5
1 2 2 1 1 1 3 2
2 2 2 1 1 1 2 4
3 2 2 1 1 1 4 3
4 2 2 1 1 2 3 4
5 4 2 100 100 1 2 3 4
$EndElements
)";

ErrorCode read_error(const std::string& text, GmshReadOptions opts = {}) {
  std::istringstream in(text);
  try {
    read_gmsh(in, opts);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no exception";
  return ErrorCode::IoError;
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
  s.replace(s.find(from), from.size(), to);
  return s;
}

}  // namespace

TEST(ReadGmsh, SingleTet) {
  std::istringstream in(kSingleTet);
  const Mesh m = read_gmsh(in);
  EXPECT_EQ(m.nodes.size(), 4u);
  EXPECT_EQ(m.tets.size(), 1u);
  EXPECT_EQ(m.boundary_tris.size(), 4u);
  EXPECT_EQ(m.patch_tags.at(1), PatchLabel::Robin);
  EXPECT_TRUE(m.warnings.empty());
  EXPECT_NEAR(total_volume(m), 1.0 / 6.0, 1e-15);
}

TEST(ReadGmsh, NegativeTetIsReoriented) {
  const std::string flipped = replace(kSingleTet, "5 4 2 100 100 1 2 3 4", "5 4 2 100 100 2 1 3 4");
  std::istringstream in(flipped);
  const Mesh m = read_gmsh(in);
  EXPECT_GT(tet_volume(m, 0), 0.0);
  ASSERT_EQ(m.warnings.size(), 1u);
  EXPECT_NE(m.warnings[0].find("reoriented"), std::string::npos);
}

TEST(ReadGmsh, PhysicalMapOverridesNames) {
  GmshReadOptions opts;
  opts.physical_map[1] = PatchLabel::Insulated;
  std::istringstream in(kSingleTet);
  const Mesh m = read_gmsh(in, opts);
  EXPECT_EQ(m.patch_tags.at(1), PatchLabel::Insulated);
}

TEST(ReadGmsh, StrictRejectsUnknownGroup) {
  const std::string text = replace(kSingleTet, "2 1 \"robin\"", "2 1 \"wall\"");
  EXPECT_EQ(read_error(text), ErrorCode::UntaggedBoundary);
  GmshReadOptions lax;
  lax.strict = false;
  std::istringstream in(text);
  const Mesh m = read_gmsh(in, lax);
  EXPECT_EQ(m.patch_tags.at(1), PatchLabel::Insulated);
  EXPECT_FALSE(m.warnings.empty());
}

TEST(ReadGmsh, MissingTriangleIsUntagged) {
  std::string text = replace(kSingleTet, "4 2 2 1 1 2 3 4\n", "");
  text = replace(text, "$Elements\n5", "$Elements\n4");
  EXPECT_EQ(read_error(text), ErrorCode::UntaggedBoundary);
  GmshReadOptions lax;
  lax.strict = false;
  std::istringstream in(text);
  const Mesh m = read_gmsh(in, lax);
  EXPECT_EQ(m.boundary_tris.size(), 4u);
}

TEST(ReadGmsh, ErrorCases) {
  EXPECT_EQ(read_error(replace(kSingleTet, "2.2 0 8", "4.1 0 8")), ErrorCode::UnsupportedVersion);
  EXPECT_EQ(read_error(replace(kSingleTet, "2.2 0 8", "2.2 1 8")), ErrorCode::UnsupportedVersion);
  EXPECT_EQ(read_error(replace(kSingleTet, "3 0 1 0", "3 0 one 0")), ErrorCode::MalformedFile);
  EXPECT_EQ(read_error(replace(kSingleTet, "1 2 3 4\n$EndElements", "1 2 3 9\n$EndElements")),
            ErrorCode::MalformedFile);
  EXPECT_EQ(read_error(replace(kSingleTet, "$EndElements\n", "")), ErrorCode::MalformedFile);
  std::string no_tet = replace(kSingleTet, "5 4 2 100 100 1 2 3 4\n", "");
  EXPECT_EQ(read_error(replace(no_tet, "$Elements\n5", "$Elements\n4")), ErrorCode::EmptyVolume);
  EXPECT_EQ(read_error(""), ErrorCode::MalformedFile);
}

TEST(ReadGmsh, MissingFile) {
  try {
    read_gmsh(std::string("/nonexistent/mesh.msh"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IoError);
  }
}

TEST(ReadGmsh, RoundTrip) {
  const Mesh m = generate_demo_disk_blade(1);
  std::stringstream buf;
  write_gmsh(m, buf);
  const Mesh back = read_gmsh(buf);
  ASSERT_EQ(back.nodes.size(), m.nodes.size());
  ASSERT_EQ(back.tets.size(), m.tets.size());
  ASSERT_EQ(back.boundary_tris.size(), m.boundary_tris.size());
  EXPECT_NEAR(total_volume(back), total_volume(m), 1e-14);
  const MeshStats a = mesh_stats(m);
  const MeshStats b = mesh_stats(back);
  for (const auto& [label, area] : a.patch_area) EXPECT_NEAR(b.patch_area.at(label), area, 1e-14);
}

// Node and element counts are read back by a plain scan of the sections.
TEST(ReadGmsh, BundledDemoMatchesFileHeader) {
  const std::string path = std::string(THERMO_OPT_DATA_DIR) + "/disk_blade.msh";
  std::ifstream in(path);
  ASSERT_TRUE(in) << path;
  std::string line;
  long nodes = -1;
  long tets = 0;
  long tris = 0;
  while (std::getline(in, line)) {
    if (line == "$Nodes") {
      std::getline(in, line);
      nodes = std::stol(line);
    } else if (line == "$Elements") {
      std::getline(in, line);
      const long count = std::stol(line);
      for (long i = 0; i < count; ++i) {
        std::getline(in, line);
        std::istringstream ss(line);
        long id = 0;
        int type = 0;
        ss >> id >> type;
        tets += type == 4;
        tris += type == 2;
      }
    }
  }
  const Mesh m = read_gmsh(path);
  EXPECT_EQ(static_cast<long>(m.nodes.size()), nodes);
  EXPECT_EQ(static_cast<long>(m.tets.size()), tets);
  EXPECT_EQ(static_cast<long>(m.boundary_tris.size()), tris);
  EXPECT_TRUE(m.warnings.empty());
  EXPECT_GE(m.tets.size(), 5000u);
  EXPECT_LE(m.tets.size(), 15000u);
}
