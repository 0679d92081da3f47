// Writes the bundled bladed-disk demo mesh as Gmsh 2.2 ASCII.
//   make-demo-mesh <level> <out.msh>

#include <cstdlib>
#include <iostream>

#include "thermo_opt/gmsh.hpp"

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: make-demo-mesh <level> <out.msh>\n";
    return 1;
  }
  try {
    const thermo_opt::Mesh mesh = thermo_opt::generate_demo_disk_blade(std::atoi(argv[1]));
    thermo_opt::write_gmsh(mesh, argv[2]);
    std::cout << mesh.nodes.size() << " nodes, " << mesh.tets.size() << " tets, " << mesh.boundary_tris.size()
              << " boundary triangles\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
