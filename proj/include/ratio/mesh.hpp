#ifndef RATIO_MESH_HPP
#define RATIO_MESH_HPP

#include <vector>

#include "ratio/types.hpp"

namespace ratio {

enum class NodeTag { Interior, DirichletLeft, DirichletRight, Neumann };

/// Uniform triangulation of the unit square with n x n cells, each cell split
/// along the diagonal from its lower-left to its upper-right corner. All
/// levels of a hierarchy share this orientation, so uniform refinement nests
/// exactly: every coarse triangle is the union of four fine triangles.
struct MeshLevel {
    int level = 0;        ///< index within a hierarchy
    int n = 0;            ///< cells per side, h = 1/n
    double h = 0.0;       ///< mesh width
    Eigen::Matrix<double, Eigen::Dynamic, 2> nodes;   ///< vertex coordinates, row-major lattice
    Eigen::Matrix<int, Eigen::Dynamic, 3> triangles;  ///< vertex indices, 2*n*n rows
    std::vector<NodeTag> tags;

    int num_nodes() const { return static_cast<int>(nodes.rows()); }
    int num_triangles() const { return static_cast<int>(triangles.rows()); }

    /// Lattice index of vertex (i, j), 0 <= i, j <= n.
    int vertex(int i, int j) const { return j * (n + 1) + i; }

    /// True if (x, y) coincides with a lattice vertex (exact arithmetic:
    /// lattice coordinates are multiples of a dyadic h).
    bool is_vertex(double x, double y) const;

    /// Index of the vertex at (x, y); throws if not a vertex.
    int vertex_at(double x, double y) const;
};

/// Build the mesh at a single level: n cells per side.
MeshLevel build_mesh(int n, int level = 0);

/// Nested hierarchy of L+1 levels with n cells per side doubling each level,
/// coarsest 1/h0_inverse. Throws if h0_inverse < 1.
std::vector<MeshLevel> build_mesh_hierarchy(int h0_inverse, int levels);

} // namespace ratio

#endif
