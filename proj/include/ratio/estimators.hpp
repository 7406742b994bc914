#ifndef RATIO_ESTIMATORS_HPP
#define RATIO_ESTIMATORS_HPP

#include <cstdint>
#include <vector>

#include "ratio/bayes.hpp"
#include "ratio/fem.hpp"
#include "ratio/qmc.hpp"
#include "ratio/randfield.hpp"

namespace ratio {

enum class Method { MC, QMC, MLMC };
enum class Dependence { Dependent, Independent };

struct SamplePlan {
    Method method = Method::MC;
    std::int64_t n = 0;                    ///< samples (MC) or points per shift (QMC)
    std::vector<std::int64_t> n_per_level; ///< MLMC
    Dependence dependence = Dependence::Dependent;
    std::uint64_t seed = 0;
    int replications = 20; ///< independent replications; shifts for QMC
    double solver_tol = 1e-10;
};

struct ReplicationResult {
    double q = 0.0;
    double z = 0.0;
    double ratio = 0.0;
    double max_abs_phi = 0.0; ///< over the numerator samples (dependent bound)
    bool z_nonpositive = false;
};

struct EstimatorReport {
    double q = 0.0;     ///< mean over replications
    double z = 0.0;
    double ratio = 0.0; ///< mean of per-replication ratios
    std::vector<ReplicationResult> replications;
    double ratio_variance = 0.0; ///< sample variance of the ratio across replications
    double cost_units = 0.0;     ///< solve-units per replication, N h^-2 style
    double walltime_s = 0.0;
    int nonpositive_z_count = 0;
    std::vector<double> level_variance_psi; ///< MLMC: sample variance of Y_l^psi
    std::vector<double> level_variance_theta;
    std::vector<double> level_covariance; ///< MLMC: sample cov(Y_l^psi, Y_l^theta)
};

/// One forward evaluation: theta, phi (the outflow) and psi = theta * phi.
struct SampleResult {
    double theta = 0.0;
    double phi = 0.0;
    double psi = 0.0;
};

/// Shared single-mesh evaluation machinery: the KL vertex table, the
/// observation set and the solver settings. Immutable, usable concurrently.
class SampleEvaluator {
  public:
    SampleEvaluator(const KlBasis& basis, const MeshLevel& mesh, const ObservationSet& obs,
                    double solver_tol = 1e-10);

    SampleResult evaluate(const Vector& xi) const;
    /// Evaluate from a vertex field directly (used by the MLMC coupling).
    SampleResult evaluate_field(const Vector& vertex_field) const;

    const MeshLevel& mesh() const { return sampler_.mesh(); }
    const FieldSampler& sampler() const { return sampler_; }

  private:
    FieldSampler sampler_;
    const ObservationSet* obs_;
    double tol_;
};

/// Plain Monte Carlo ratio estimator with R independent replications.
EstimatorReport mc_estimate(const SamplePlan& plan, const KlBasis& basis, const MeshLevel& mesh,
                            const ObservationSet& obs);

/// Randomly shifted lattice rule estimator; one replication per shift.
EstimatorReport qmc_estimate(const SamplePlan& plan, const KlBasis& basis, const MeshLevel& mesh,
                             const ObservationSet& obs, const LatticeRule& rule);

/// Multilevel estimator over a nested hierarchy; per coupled sample the
/// field is realised once on the fine mesh and restricted to the coarse
/// vertices, and both telescopes use the same sample in dependent mode.
EstimatorReport mlmc_estimate(const SamplePlan& plan, const KlBasis& basis,
                              const std::vector<MeshLevel>& hierarchy,
                              const ObservationSet& obs);

/// Standard MLMC allocation N_l proportional to sqrt(V_l / C_l), scaled so
/// N_0 = target, rounded up, at least two samples per level.
std::vector<std::int64_t> allocate_levels(const std::vector<double>& level_variance,
                                          const std::vector<double>& level_cost,
                                          std::int64_t target_n0);

/// Allocation N_l proportional to h_l^2 scaled so the total MLMC cost
/// equals `equivalent_n` solves on the finest mesh of the hierarchy.
std::vector<std::int64_t> mlmc_allocation_for_equivalent_n(const std::vector<MeshLevel>& hierarchy,
                                                           std::int64_t equivalent_n);

/// Canonical solve-unit cost: N h^-2 for single-mesh estimators and
/// N_0 h_0^-2 + sum N_l (h_l^-2 + h_{l-1}^-2) for MLMC.
double cost_units_single_level(std::int64_t n, const MeshLevel& mesh);
double cost_units_multilevel(const std::vector<std::int64_t>& n_per_level,
                             const std::vector<MeshLevel>& hierarchy);

} // namespace ratio

#endif
