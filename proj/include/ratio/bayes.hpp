#ifndef RATIO_BAYES_HPP
#define RATIO_BAYES_HPP

#include <cstdint>
#include <string>

#include "ratio/fem.hpp"
#include "ratio/randfield.hpp"
#include "ratio/types.hpp"

namespace ratio {

/// Noisy local-average pressure data at the m interior nodes of the lattice
/// with spacing 1/(sqrt(m)+1). Patches live on the reference mesh with
/// ref_n cells per side regardless of the study mesh. Node ordering is
/// row-major by (j, i).
struct ObservationSet {
    int m = 0;
    double sigma_eta2 = 0.0;
    int ref_n = 0;
    Eigen::Matrix<double, Eigen::Dynamic, 2> nodes;
    Vector y;
    std::uint64_t truth_seed = 0;
    std::uint64_t noise_seed = 0;

    void save(const std::string& path) const;
    static ObservationSet load(const std::string& path);
};

/// Interior observation lattice for m = (sqrt m)^2 observations; throws if m
/// is not a perfect square or the spacing is incompatible with ref_n.
Eigen::Matrix<double, Eigen::Dynamic, 2> observation_nodes(int m, int ref_n);

/// H(p_h): the six-triangle reference-patch average at each observation node.
Vector observe(const MeshLevel& mesh, const Vector& p, const ObservationSet& obs);

struct LikelihoodEval {
    Vector observed; ///< H(p_h)
    double misfit = 0.0; ///< |y - H|^2 / (2 sigma_eta^2)
    double theta = 0.0;  ///< exp(-misfit)
    double psi = 0.0;    ///< theta * phi
};

LikelihoodEval likelihood(const Vector& observed, const ObservationSet& obs, double phi_value);

/// Draw a truth sample from the prior, solve on the reference mesh, observe,
/// and add i.i.d. N(0, sigma_eta^2) noise. Deterministic given the seeds.
ObservationSet generate_data(const KlBasis& basis, const MeshLevel& reference_mesh, int m,
                             double sigma_eta2, std::uint64_t truth_seed,
                             std::uint64_t noise_seed, double solver_tol = 1e-10);

} // namespace ratio

#endif
