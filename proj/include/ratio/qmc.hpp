#ifndef RATIO_QMC_HPP
#define RATIO_QMC_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "ratio/normal.hpp"
#include "ratio/rng.hpp"
#include "ratio/types.hpp"

namespace ratio {

enum class LatticeProvenance { FileLoaded, CbcBuilt };

/// Rank-1 lattice rule: points frac(i z / N + shift), i = 1..N. Every used
/// component must satisfy gcd(z_j, N) = 1 so one-dimensional projections
/// have N distinct values.
struct LatticeRule {
    std::int64_t n_points = 0;
    std::vector<std::int64_t> z;
    LatticeProvenance provenance = LatticeProvenance::CbcBuilt;

    int dimension() const { return static_cast<int>(z.size()); }
};

/// Product weights for the worst-case error criterion, gamma_j = 1/j^2 by
/// default (1-based).
struct WeightSpec {
    double exponent = 2.0;
    double weight(int j) const; ///< 1-based index
};

/// Parse a plain-text generating vector: either one integer per line or
/// "index value" pairs (1-based). Components are reduced mod N and
/// validated for coprimality. Throws naming the offending component.
LatticeRule load_generating_vector(const std::string& path, std::int64_t n_points, int dimension);

/// Shift-averaged worst-case error criterion e^2(z) for product weights in
/// the weighted Sobolev space, evaluated with the Bernoulli-polynomial
/// kernel. Exact for any N.
double cbc_criterion(const std::vector<std::int64_t>& z, std::int64_t n_points,
                     const WeightSpec& weights);

/// Naive O(N^2 J) component-by-component construction: greedily pick each
/// z_j among the units mod N minimising the criterion with previous
/// components fixed, ties to the smallest candidate.
LatticeRule cbc_construct(std::int64_t n_points, int dimension, const WeightSpec& weights = {});

/// Write a rule in the same "index value" format accepted by
/// load_generating_vector.
void save_generating_vector(const LatticeRule& rule, const std::string& path);

/// Uniform random shift in [0,1)^J drawn from a seeded stream.
Vector random_shift(int dimension, std::uint64_t seed);

/// The i-th shifted lattice point, 1 <= i <= N, truncated to `dimension`
/// components.
Vector lattice_point(const LatticeRule& rule, const Vector& shift, std::int64_t i, int dimension);

/// Map a point of the unit cube to prior parameters: inverse normal CDF per
/// component (Gaussian) or the affine map v -> 2v - 1 (Uniform). Gaussian
/// components are clamped to [1e-16, 1 - 1e-16] before the inverse CDF.
Vector map_to_parameters(const Vector& point, PriorKind prior);

} // namespace ratio

#endif
