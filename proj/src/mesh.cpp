#include "ratio/mesh.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ratio {

bool MeshLevel::is_vertex(double x, double y) const {
    double ix = x / h;
    double iy = y / h;
    double rix = std::round(ix);
    double riy = std::round(iy);
    if (std::abs(ix - rix) > 1e-12 || std::abs(iy - riy) > 1e-12) return false;
    return rix >= 0 && rix <= n && riy >= 0 && riy <= n;
}

int MeshLevel::vertex_at(double x, double y) const {
    if (!is_vertex(x, y))
        throw std::invalid_argument("point (" + std::to_string(x) + ", " + std::to_string(y) +
                                    ") is not a vertex of the mesh with h = 1/" + std::to_string(n));
    int i = static_cast<int>(std::round(x / h));
    int j = static_cast<int>(std::round(y / h));
    return vertex(i, j);
}

MeshLevel build_mesh(int n, int level) {
    if (n < 1) throw std::invalid_argument("mesh requires at least one cell per side");
    MeshLevel m;
    m.level = level;
    m.n = n;
    m.h = 1.0 / n;
    int nv = (n + 1) * (n + 1);
    m.nodes.resize(nv, 2);
    m.tags.resize(nv);
    for (int j = 0; j <= n; ++j) {
        for (int i = 0; i <= n; ++i) {
            int v = m.vertex(i, j);
            m.nodes(v, 0) = i * m.h;
            m.nodes(v, 1) = j * m.h;
            if (i == 0)
                m.tags[v] = NodeTag::DirichletLeft;
            else if (i == n)
                m.tags[v] = NodeTag::DirichletRight;
            else if (j == 0 || j == n)
                m.tags[v] = NodeTag::Neumann;
            else
                m.tags[v] = NodeTag::Interior;
        }
    }
    m.triangles.resize(2 * n * n, 3);
    int t = 0;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            int v00 = m.vertex(i, j);
            int v10 = m.vertex(i + 1, j);
            int v01 = m.vertex(i, j + 1);
            int v11 = m.vertex(i + 1, j + 1);
            // lower triangle below the diagonal v00-v11, upper above
            m.triangles.row(t++) << v00, v10, v11;
            m.triangles.row(t++) << v00, v11, v01;
        }
    }
    return m;
}

std::vector<MeshLevel> build_mesh_hierarchy(int h0_inverse, int levels) {
    if (h0_inverse < 1) throw std::invalid_argument("1/h0 must be a positive integer");
    if (levels < 0) throw std::invalid_argument("level count must be non-negative");
    std::vector<MeshLevel> hierarchy;
    hierarchy.reserve(levels + 1);
    for (int l = 0; l <= levels; ++l) hierarchy.push_back(build_mesh(h0_inverse << l, l));
    return hierarchy;
}

} // namespace ratio
