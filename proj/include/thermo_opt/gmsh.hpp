#pragma once

#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "thermo_opt/mesh.hpp"

namespace thermo_opt {

struct GmshReadOptions {
  /// Physical surface group -> label. Groups missing here fall back to their
  /// $PhysicalNames entry ("robin", "sym_x", "sym_y", "insulated").
  std::map<int, PatchLabel> physical_map;
  /// Reject boundary faces without a usable physical group instead of
  /// defaulting them to Insulated.
  bool strict = true;
};

namespace detail {

inline constexpr int kGmshTriangle = 2;
inline constexpr int kGmshTet = 4;
inline constexpr int kGmshPoint = 15;
inline constexpr int kGmshLine = 1;
inline constexpr int kGmshVolumeGroup = 100;

class GmshTokenizer {
 public:
  explicit GmshTokenizer(std::istream& in) : in_(in) {}

  bool next_line(std::string& line) {
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") != std::string::npos) return true;
    }
    return false;
  }

  std::string require_line(const char* what) {
    std::string line;
    if (!next_line(line)) fail(std::string("unexpected end of file while reading ") + what);
    return line;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorCode::MalformedFile, "line " + std::to_string(line_no_) + ": " + msg);
  }

 private:
  std::istream& in_;
  int line_no_ = 0;
};

template <typename T>
T parse_count(GmshTokenizer& tok, const std::string& line) {
  std::istringstream ss(line);
  T value{};
  if (!(ss >> value) || value < 0) tok.fail("expected a count, got '" + line + "'");
  return value;
}

}  // namespace detail

/// Parses Gmsh ASCII 2.2. Only tets (type 4) and triangles (type 2) are kept;
/// nodes not referenced by a tet are dropped and the rest renumbered.
inline Mesh read_gmsh(std::istream& in, const GmshReadOptions& opts = {}) {
  detail::GmshTokenizer tok(in);
  bool have_format = false;
  std::map<int, std::string> physical_names;
  std::unordered_map<long, Point3> raw_nodes;
  std::vector<long> raw_node_order;
  std::vector<std::array<long, 4>> raw_tets;
  struct RawTri {
    std::array<long, 3> nodes;
    int physical;
  };
  std::vector<RawTri> raw_tris;

  std::string line;
  while (tok.next_line(line)) {
    if (line == "$MeshFormat") {
      std::istringstream ss(tok.require_line("$MeshFormat"));
      std::string version;
      int file_type = -1;
      int data_size = 0;
      if (!(ss >> version >> file_type >> data_size)) tok.fail("malformed $MeshFormat header");
      if (version.rfind("2.", 0) != 0) {
        throw Error(ErrorCode::UnsupportedVersion, "Gmsh format " + version + " (only ASCII 2.2 is read)");
      }
      if (file_type != 0) throw Error(ErrorCode::UnsupportedVersion, "binary Gmsh files are not supported");
      if (tok.require_line("$EndMeshFormat") != "$EndMeshFormat") tok.fail("expected $EndMeshFormat");
      have_format = true;
    } else if (line == "$PhysicalNames") {
      const int count = detail::parse_count<int>(tok, tok.require_line("$PhysicalNames"));
      for (int i = 0; i < count; ++i) {
        std::istringstream ss(tok.require_line("$PhysicalNames"));
        int dim = 0;
        int tag = 0;
        std::string name;
        if (!(ss >> dim >> tag)) tok.fail("malformed physical name");
        std::getline(ss >> std::ws, name);
        if (name.size() >= 2 && name.front() == '"' && name.back() == '"') name = name.substr(1, name.size() - 2);
        if (dim == 2) physical_names[tag] = name;
      }
      if (tok.require_line("$EndPhysicalNames") != "$EndPhysicalNames") tok.fail("expected $EndPhysicalNames");
    } else if (line == "$Nodes") {
      if (!have_format) tok.fail("$Nodes before $MeshFormat");
      const long count = detail::parse_count<long>(tok, tok.require_line("$Nodes"));
      raw_node_order.reserve(count);
      for (long i = 0; i < count; ++i) {
        std::istringstream ss(tok.require_line("$Nodes"));
        long id = 0;
        Point3 p{};
        if (!(ss >> id >> p[0] >> p[1] >> p[2])) tok.fail("malformed node line");
        if (!raw_nodes.emplace(id, p).second) tok.fail("duplicate node id " + std::to_string(id));
        raw_node_order.push_back(id);
      }
      if (tok.require_line("$EndNodes") != "$EndNodes") tok.fail("expected $EndNodes");
    } else if (line == "$Elements") {
      if (!have_format) tok.fail("$Elements before $MeshFormat");
      const long count = detail::parse_count<long>(tok, tok.require_line("$Elements"));
      for (long i = 0; i < count; ++i) {
        std::istringstream ss(tok.require_line("$Elements"));
        long id = 0;
        int type = 0;
        int ntags = 0;
        if (!(ss >> id >> type >> ntags) || ntags < 0) tok.fail("malformed element header");
        std::vector<int> tags(ntags);
        for (auto& t : tags) {
          if (!(ss >> t)) tok.fail("malformed element tags");
        }
        auto read_nodes = [&](auto& arr) {
          for (auto& n : arr) {
            if (!(ss >> n)) tok.fail("element " + std::to_string(id) + " has too few nodes");
          }
        };
        if (type == detail::kGmshTet) {
          std::array<long, 4> n{};
          read_nodes(n);
          raw_tets.push_back(n);
        } else if (type == detail::kGmshTriangle) {
          std::array<long, 3> n{};
          read_nodes(n);
          raw_tris.push_back({n, tags.empty() ? 0 : tags[0]});
        } else if (type != detail::kGmshPoint && type != detail::kGmshLine) {
          tok.fail("unsupported element type " + std::to_string(type));
        }
      }
      if (tok.require_line("$EndElements") != "$EndElements") tok.fail("expected $EndElements");
    } else if (!line.empty() && line[0] == '$') {
      // Unknown section: skip to its matching end marker.
      const std::string end = "$End" + line.substr(1);
      std::string skip;
      do {
        if (!tok.next_line(skip)) tok.fail("unterminated section " + line);
      } while (skip != end);
    } else {
      tok.fail("unexpected content '" + line + "'");
    }
  }
  if (!have_format) throw Error(ErrorCode::MalformedFile, "missing $MeshFormat section");
  if (raw_tets.empty()) throw Error(ErrorCode::EmptyVolume, "file contains no tetrahedra");

  Mesh mesh;
  std::unordered_map<long, int> remap;
  auto map_node = [&](long id) {
    auto it = remap.find(id);
    if (it != remap.end()) return it->second;
    auto raw = raw_nodes.find(id);
    if (raw == raw_nodes.end()) throw Error(ErrorCode::MalformedFile, "element references unknown node " + std::to_string(id));
    int idx = static_cast<int>(mesh.nodes.size());
    mesh.nodes.push_back(raw->second);
    remap.emplace(id, idx);
    return idx;
  };
  for (const auto& t : raw_tets) mesh.tets.push_back({map_node(t[0]), map_node(t[1]), map_node(t[2]), map_node(t[3])});
  mesh.vertex_count = mesh.nodes.size();
  orient_tets_positive(mesh);

  std::map<FaceKey, std::array<int, 3>> exterior;
  for (const auto& f : exterior_faces(mesh)) exterior.emplace(face_key(f[0], f[1], f[2]), f);

  auto resolve = [&](int physical) -> std::optional<PatchLabel> {
    if (physical <= 0) return std::nullopt;
    if (auto it = opts.physical_map.find(physical); it != opts.physical_map.end()) return it->second;
    if (auto it = physical_names.find(physical); it != physical_names.end()) return parse_patch_label(it->second);
    return std::nullopt;
  };

  std::map<FaceKey, bool> seen;
  for (const auto& rt : raw_tris) {
    std::array<int, 3> nodes{};
    for (int k = 0; k < 3; ++k) {
      auto it = remap.find(rt.nodes[k]);
      if (it == remap.end()) throw Error(ErrorCode::MalformedFile, "boundary triangle uses a node outside the volume");
      nodes[k] = it->second;
    }
    const auto key = face_key(nodes[0], nodes[1], nodes[2]);
    auto ext = exterior.find(key);
    if (ext == exterior.end()) throw Error(ErrorCode::MalformedFile, "triangle is not an exterior face of the volume");
    if (!seen.emplace(key, true).second) throw Error(ErrorCode::MalformedFile, "duplicate boundary triangle");
    auto label = resolve(rt.physical);
    int tag = rt.physical;
    if (!label) {
      if (opts.strict) {
        throw Error(ErrorCode::UntaggedBoundary,
                    "triangle without a mapped physical group (group " + std::to_string(rt.physical) + ")");
      }
      mesh.warnings.push_back("physical group " + std::to_string(rt.physical) + " treated as insulated");
      label = PatchLabel::Insulated;
      tag = std::max(rt.physical, 0);
    }
    mesh.patch_tags[tag] = *label;
    // Store with outward orientation.
    mesh.boundary_tris.push_back({ext->second, tag});
  }
  std::size_t untagged = 0;
  for (const auto& [key, face] : exterior) {
    if (seen.count(key)) continue;
    if (opts.strict) throw Error(ErrorCode::UntaggedBoundary, "exterior face without a tagged triangle");
    mesh.boundary_tris.push_back({face, 0});
    ++untagged;
  }
  if (untagged > 0) {
    mesh.patch_tags[0] = PatchLabel::Insulated;
    mesh.warnings.push_back(std::to_string(untagged) + " untagged exterior faces treated as insulated");
  }
  validate_mesh(mesh);
  return mesh;
}

inline Mesh read_gmsh(const std::string& path, const GmshReadOptions& opts = {}) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open mesh file '" + path + "'");
  return read_gmsh(in, opts);
}

/// Writes the vertex (P1) part of a mesh as Gmsh ASCII 2.2.
inline void write_gmsh(const Mesh& mesh, std::ostream& out) {
  const std::size_t nv = mesh.vertex_count ? mesh.vertex_count : mesh.nodes.size();
  out << "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n";
  out << "$PhysicalNames\n" << mesh.patch_tags.size() + 1 << "\n";
  for (const auto& [tag, label] : mesh.patch_tags) out << "2 " << tag << " \"" << to_string(label) << "\"\n";
  out << "3 " << detail::kGmshVolumeGroup << " \"domain\"\n$EndPhysicalNames\n";
  out << "$Nodes\n" << nv << "\n" << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < nv; ++i) {
    const auto& p = mesh.nodes[i];
    out << i + 1 << ' ' << p[0] << ' ' << p[1] << ' ' << p[2] << '\n';
  }
  out << "$EndNodes\n$Elements\n" << mesh.boundary_tris.size() + mesh.tets.size() << "\n";
  std::size_t id = 1;
  for (const auto& tri : mesh.boundary_tris) {
    out << id++ << ' ' << detail::kGmshTriangle << " 2 " << tri.tag << ' ' << tri.tag;
    for (int n : tri.nodes) out << ' ' << n + 1;
    out << '\n';
  }
  for (const auto& tet : mesh.tets) {
    out << id++ << ' ' << detail::kGmshTet << " 2 " << detail::kGmshVolumeGroup << ' ' << detail::kGmshVolumeGroup;
    for (int n : tet) out << ' ' << n + 1;
    out << '\n';
  }
  out << "$EndElements\n";
}

inline void write_gmsh(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write mesh file '" + path + "'");
  write_gmsh(mesh, out);
}

}  // namespace thermo_opt
