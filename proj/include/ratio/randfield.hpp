#ifndef RATIO_RANDFIELD_HPP
#define RATIO_RANDFIELD_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "ratio/mesh.hpp"
#include "ratio/rng.hpp"
#include "ratio/types.hpp"

namespace ratio {

/// Separable exponential covariance sigma^2 exp(-|x-y|_1 / lambda) on the
/// unit square. Only the 1-norm kernel is supported; it factorises into a
/// product of 1-D exponential kernels whose eigenpairs are known in closed
/// form up to a transcendental root.
struct CovarianceSpec {
    double sigma2 = 1.0;
    double lambda = 0.3;
    int norm_order = 1;
};

/// One eigenpair of the 1-D kernel exp(-|x-y|/lambda) on [0,1], L2-normalised.
/// Eigenfunctions are cos/sin(omega (x - 1/2)) depending on parity.
struct OneDMode {
    double omega = 0.0;
    double eigenvalue = 0.0; ///< 2c / (omega^2 + c^2), c = 1/lambda
    double norm = 0.0;       ///< normalisation factor of the eigenfunction
    bool even = true;

    double evaluate(double x) const {
        double t = x - 0.5;
        return norm * (even ? std::cos(omega * t) : std::sin(omega * t));
    }
};

/// Truncated Karhunen-Loeve basis of the 2-D exponential covariance,
/// obtained by tensorising 1-D eigenpairs and keeping the J largest
/// products. Immutable after construction; eigenfunctions are evaluated
/// analytically, so tabulations on nested meshes agree bit-for-bit at
/// shared vertices.
class KlBasis {
  public:
    KlBasis() = default;
    KlBasis(const CovarianceSpec& spec, int truncation, PriorKind prior,
            double mean = 0.0, double k_star = 0.0);

    int truncation() const { return J_; }
    PriorKind prior() const { return prior_; }
    const CovarianceSpec& spec() const { return spec_; }
    double mean() const { return mean_; }
    double k_star() const { return k_star_; }

    /// gamma_j^2, descending.
    const Vector& eigenvalues() const { return eigenvalues_; }
    /// gamma_j = sqrt(gamma_j^2).
    const Vector& gammas() const { return gammas_; }
    /// Decay diagnostics b_j = gamma_j * sup |phi_j|.
    Vector decay_sequence() const;

    /// phi_j evaluated at a point (L2-orthonormal convention).
    double eigenfunction(int j, double x, double y) const;

    /// Vertex table of all J eigenfunctions on a mesh, one column per mode.
    Matrix tabulate(const MeshLevel& mesh) const;

    /// Partial Mercer sum sum_{j<=J} gamma_j^2 phi_j(x)^2; bounded by sigma^2.
    double mercer_sum(double x, double y) const;

    /// i.i.d. prior draw of the J parameters.
    Vector sample_parameters(RandomStream& stream) const;

    /// The 1-D index pair of mode j (for diagnostics and cache files).
    std::pair<int, int> mode_indices(int j) const;

    void save(const std::string& path, const MeshLevel& tabulation_mesh) const;
    /// Reload a cache written by save(); validates the header against this
    /// basis' spec and returns the stored vertex table.
    static Matrix load_tabulation(const std::string& path, const CovarianceSpec& spec, int J,
                                  const MeshLevel& mesh);

  private:
    CovarianceSpec spec_;
    int J_ = 0;
    PriorKind prior_ = PriorKind::Gaussian;
    double mean_ = 0.0;
    double k_star_ = 0.0;
    std::vector<OneDMode> modes1d_;
    std::vector<std::pair<int, int>> pairs_; ///< (ix, iy) per retained 2-D mode
    Vector eigenvalues_;
    Vector gammas_;
};

/// Compute the first `count` 1-D eigenpairs of exp(-|x-y|/lambda) on [0,1],
/// descending in eigenvalue. Bisection on pole-free forms of the
/// transcendental equations, tolerance 1e-12.
std::vector<OneDMode> one_d_eigenpairs(double lambda, int count);

/// Diffusion coefficient realisation at the vertices of one mesh.
struct FieldSample {
    Vector values; ///< k at each vertex
    double k_min = 0.0;
    double k_max = 0.0;
};

/// Evaluates u(x; xi) = m0 + sum_j gamma_j xi_j phi_j(x) on a fixed mesh and
/// applies the prior-specific transformation to the coefficient k. The
/// vertex table is computed once at construction.
class FieldSampler {
  public:
    FieldSampler(const KlBasis& basis, const MeshLevel& mesh);

    const MeshLevel& mesh() const { return *mesh_; }
    const KlBasis& basis() const { return *basis_; }

    /// Log-field (Gaussian) or field (Uniform) before the transformation.
    Vector realise_log_field(const Vector& xi) const;

    /// Full coefficient sample; throws for a Uniform prior realisation with
    /// non-positive minimum (admissibility violation).
    FieldSample realise(const Vector& xi) const;

  private:
    const KlBasis* basis_;
    const MeshLevel* mesh_;
    Matrix table_; ///< vertices x J
};

} // namespace ratio

#endif
