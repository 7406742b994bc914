#ifndef RATIO_FEM_HPP
#define RATIO_FEM_HPP

#include "ratio/mesh.hpp"
#include "ratio/randfield.hpp"
#include "ratio/types.hpp"

namespace ratio {

/// Assembled P1 system with the mixed boundary conditions of the flow cell:
/// p = 1 on x = 0, p = 0 on x = 1, natural (zero Neumann) on the rest.
/// Dirichlet values are imposed by lifting into the right-hand side.
struct FemSystem {
    SparseMatrix stiffness;      ///< SPD over free degrees of freedom
    Vector rhs;                  ///< load including the Dirichlet lift
    std::vector<int> dof_of_node;///< -1 for Dirichlet nodes
    std::vector<int> node_of_dof;
    Vector dirichlet_values;     ///< prescribed value per node (0 where free)
};

struct ForwardSolution {
    Vector p;                ///< full nodal vector, Dirichlet values included
    double residual = 0.0;   ///< relative algebraic residual achieved
    int iterations = 0;      ///< 0 for the direct path
};

/// Stiffness assembly with the vertex (trapezoidal) quadrature rule: per
/// element, (grad phi_i . grad phi_j) |tau|/3 sum of k at the vertices.
/// P1 gradients are constant per element so only the coefficient is
/// quadratured. `source` is a nodal function integrated with the same
/// vertex rule; pass an empty vector for f = 0.
FemSystem assemble(const MeshLevel& mesh, const Vector& vertex_field,
                   const Vector& source = Vector());

/// Direct sparse Cholesky below `direct_limit` unknowns, diagonally
/// preconditioned CG otherwise. Throws on CG non-convergence.
ForwardSolution solve(const FemSystem& system, const MeshLevel& mesh, double tol = 1e-10,
                      int direct_limit = 10000);

/// Outflow over the boundary x1 = 1, computed through the volume identity
/// -int k grad(w_h) . grad(p_h) with the same vertex quadrature as the
/// assembly. w_h is 1 at the nodes on x1 = 1 and 0 elsewhere.
double outflow(const MeshLevel& mesh, const Vector& vertex_field, const Vector& p);

/// Pointwise evaluation of a P1 function given by its nodal values.
double evaluate(const MeshLevel& mesh, const Vector& p, double x, double y);

/// Area-average of p_h over the six reference-mesh triangles adjacent to a
/// reference vertex. The solution mesh may be any coarser member of the
/// nested hierarchy; each fine triangle then lies in a single solution
/// triangle and the integral of the interpolant is exact.
/// `ref_n` is the reference cells-per-side (1/h*) and must be a multiple of
/// the solution-mesh resolution; the node must be an interior reference
/// vertex.
double patch_average(const MeshLevel& solution_mesh, const Vector& p, int ref_n, double x,
                     double y);

/// Energy (stiffness) inner product p^T A p of a nodal function, used by
/// the discrete stability checks.
double energy(const MeshLevel& mesh, const Vector& vertex_field, const Vector& p);

} // namespace ratio

#endif
