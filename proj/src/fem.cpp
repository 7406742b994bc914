#include "ratio/fem.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include <array>
#include <cmath>
#include <stdexcept>

namespace ratio {

namespace {

struct ElementGeometry {
    std::array<Point2, 3> grads;
    double area;
};

ElementGeometry element_geometry(const MeshLevel& mesh, int t) {
    ElementGeometry geom;
    std::array<Point2, 3> v;
    for (int i = 0; i < 3; ++i) v[i] = mesh.nodes.row(mesh.triangles(t, i));
    double det = (v[1].x() - v[0].x()) * (v[2].y() - v[0].y()) -
                 (v[2].x() - v[0].x()) * (v[1].y() - v[0].y());
    geom.area = 0.5 * std::abs(det);
    for (int i = 0; i < 3; ++i) {
        const Point2& a = v[(i + 1) % 3];
        const Point2& b = v[(i + 2) % 3];
        geom.grads[i] = Point2(a.y() - b.y(), b.x() - a.x()) / det;
    }
    return geom;
}

double dirichlet_value(NodeTag tag) {
    if (tag == NodeTag::DirichletLeft) return 1.0;
    return 0.0;
}

} // namespace

FemSystem assemble(const MeshLevel& mesh, const Vector& vertex_field, const Vector& source) {
    if (vertex_field.size() != mesh.num_nodes())
        throw std::invalid_argument("field sample does not match the mesh vertex count");
    if (source.size() != 0 && source.size() != mesh.num_nodes())
        throw std::invalid_argument("source term does not match the mesh vertex count");

    FemSystem sys;
    int nv = mesh.num_nodes();
    sys.dof_of_node.assign(nv, -1);
    sys.dirichlet_values = Vector::Zero(nv);
    for (int v = 0; v < nv; ++v) {
        NodeTag tag = mesh.tags[v];
        if (tag == NodeTag::DirichletLeft || tag == NodeTag::DirichletRight) {
            sys.dirichlet_values[v] = dirichlet_value(tag);
        } else {
            sys.dof_of_node[v] = static_cast<int>(sys.node_of_dof.size());
            sys.node_of_dof.push_back(v);
        }
    }
    int ndof = static_cast<int>(sys.node_of_dof.size());
    sys.rhs = Vector::Zero(ndof);

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(mesh.num_triangles()) * 9);
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        ElementGeometry geom = element_geometry(mesh, t);
        double k_avg = 0.0;
        for (int i = 0; i < 3; ++i) k_avg += vertex_field[mesh.triangles(t, i)];
        k_avg /= 3.0;
        for (int i = 0; i < 3; ++i) {
            int vi = mesh.triangles(t, i);
            int di = sys.dof_of_node[vi];
            if (di < 0) continue;
            if (source.size() != 0) sys.rhs[di] += geom.area / 3.0 * source[vi];
            for (int j = 0; j < 3; ++j) {
                int vj = mesh.triangles(t, j);
                double kij = geom.area * k_avg * geom.grads[i].dot(geom.grads[j]);
                int dj = sys.dof_of_node[vj];
                if (dj >= 0)
                    triplets.emplace_back(di, dj, kij);
                else
                    sys.rhs[di] -= kij * sys.dirichlet_values[vj];
            }
        }
    }
    sys.stiffness.resize(ndof, ndof);
    sys.stiffness.setFromTriplets(triplets.begin(), triplets.end());
    return sys;
}

ForwardSolution solve(const FemSystem& sys, const MeshLevel& mesh, double tol, int direct_limit) {
    Vector x;
    ForwardSolution sol;
    double rhs_norm = sys.rhs.norm();
    if (sys.stiffness.rows() <= direct_limit) {
        Eigen::SimplicialLLT<SparseMatrix> llt(sys.stiffness);
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("sparse Cholesky factorisation failed (system not SPD?)");
        x = llt.solve(sys.rhs);
    } else {
        Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper> cg(sys.stiffness);
        cg.setTolerance(tol);
        cg.setMaxIterations(10 * sys.stiffness.rows());
        x = cg.solve(sys.rhs);
        sol.iterations = static_cast<int>(cg.iterations());
        if (cg.info() != Eigen::Success)
            throw std::runtime_error("CG did not converge: error " + std::to_string(cg.error()) +
                                     " after " + std::to_string(cg.iterations()) + " iterations");
    }
    sol.residual = rhs_norm > 0.0 ? (sys.stiffness * x - sys.rhs).norm() / rhs_norm
                                  : (sys.stiffness * x - sys.rhs).norm();
    if (sol.residual > std::max(tol * 10, 1e-9))
        throw std::runtime_error("linear solve residual too large: " +
                                 std::to_string(sol.residual));
    sol.p = sys.dirichlet_values;
    for (std::size_t d = 0; d < sys.node_of_dof.size(); ++d) sol.p[sys.node_of_dof[d]] = x[d];
    (void)mesh;
    return sol;
}

double outflow(const MeshLevel& mesh, const Vector& vertex_field, const Vector& p) {
    if (p.size() != mesh.num_nodes() || vertex_field.size() != mesh.num_nodes())
        throw std::invalid_argument("solution/field does not match the mesh");
    double result = 0.0;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        // w_h vanishes away from the last element strip; skip early.
        bool touches_right = false;
        for (int i = 0; i < 3; ++i)
            touches_right |= mesh.tags[mesh.triangles(t, i)] == NodeTag::DirichletRight;
        if (!touches_right) continue;
        ElementGeometry geom = element_geometry(mesh, t);
        double k_avg = 0.0;
        Point2 grad_w = Point2::Zero();
        Point2 grad_p = Point2::Zero();
        for (int i = 0; i < 3; ++i) {
            int v = mesh.triangles(t, i);
            k_avg += vertex_field[v];
            if (mesh.tags[v] == NodeTag::DirichletRight) grad_w += geom.grads[i];
            grad_p += p[v] * geom.grads[i];
        }
        k_avg /= 3.0;
        result -= geom.area * k_avg * grad_w.dot(grad_p);
    }
    return result;
}

double evaluate(const MeshLevel& mesh, const Vector& p, double x, double y) {
    if (p.size() != mesh.num_nodes())
        throw std::invalid_argument("nodal vector does not match the mesh");
    int ci = std::min(static_cast<int>(std::floor(x / mesh.h)), mesh.n - 1);
    int cj = std::min(static_cast<int>(std::floor(y / mesh.h)), mesh.n - 1);
    ci = std::max(ci, 0);
    cj = std::max(cj, 0);
    double lx = x / mesh.h - ci;
    double ly = y / mesh.h - cj;
    double q00 = p[mesh.vertex(ci, cj)];
    double q10 = p[mesh.vertex(ci + 1, cj)];
    double q01 = p[mesh.vertex(ci, cj + 1)];
    double q11 = p[mesh.vertex(ci + 1, cj + 1)];
    if (ly <= lx) return q00 + (q10 - q00) * lx + (q11 - q10) * ly;
    return q00 + (q11 - q01) * lx + (q01 - q00) * ly;
}

double patch_average(const MeshLevel& solution_mesh, const Vector& p, int ref_n, double x,
                     double y) {
    if (ref_n % solution_mesh.n != 0)
        throw std::invalid_argument("reference mesh does not nest in the solution mesh");
    double hr = 1.0 / ref_n;
    int i = static_cast<int>(std::round(x / hr));
    int j = static_cast<int>(std::round(y / hr));
    if (std::abs(x - i * hr) > 1e-12 || std::abs(y - j * hr) > 1e-12 || i < 1 || i >= ref_n ||
        j < 1 || j >= ref_n)
        throw std::invalid_argument("observation node is not an interior reference-mesh vertex");

    // Six reference triangles share an interior vertex with the SW-NE
    // diagonal orientation; enumerate the eight candidates in the four
    // surrounding cells and keep those incident to the node.
    double integral = 0.0;
    int used = 0;
    const double tri_area = 0.5 * hr * hr;
    for (int cj = j - 1; cj <= j; ++cj) {
        for (int ci = i - 1; ci <= i; ++ci) {
            double x0 = ci * hr, y0 = cj * hr;
            // local vertices of lower and upper triangle
            const double lower[3][2] = {{x0, y0}, {x0 + hr, y0}, {x0 + hr, y0 + hr}};
            const double upper[3][2] = {{x0, y0}, {x0 + hr, y0 + hr}, {x0, y0 + hr}};
            for (const auto& tri : {lower, upper}) {
                bool incident = false;
                for (int v = 0; v < 3; ++v)
                    incident |= std::abs(tri[v][0] - x) < 1e-12 && std::abs(tri[v][1] - y) < 1e-12;
                if (!incident) continue;
                double mean = 0.0;
                for (int v = 0; v < 3; ++v)
                    mean += evaluate(solution_mesh, p, tri[v][0], tri[v][1]);
                integral += tri_area * mean / 3.0;
                ++used;
            }
        }
    }
    if (used != 6) throw std::logic_error("reference patch does not have six triangles");
    return integral / (6.0 * tri_area);
}

double energy(const MeshLevel& mesh, const Vector& vertex_field, const Vector& p) {
    double total = 0.0;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        ElementGeometry geom = element_geometry(mesh, t);
        double k_avg = 0.0;
        Point2 grad_p = Point2::Zero();
        for (int i = 0; i < 3; ++i) {
            int v = mesh.triangles(t, i);
            k_avg += vertex_field[v];
            grad_p += p[v] * geom.grads[i];
        }
        k_avg /= 3.0;
        total += geom.area * k_avg * grad_p.squaredNorm();
    }
    return total;
}

} // namespace ratio
