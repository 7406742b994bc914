#ifndef RATIO_STUDIES_HPP
#define RATIO_STUDIES_HPP

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ratio/config.hpp"
#include "ratio/estimators.hpp"

namespace ratio {

/// Least-squares fit of log10(y) against log10(x).
struct FitResult {
    double slope = 0.0;
    double intercept = 0.0; ///< log10 scale
    double slope_std_error = 0.0;

    double predict(double x) const; ///< back on the linear scale
};
FitResult fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

/// Small CSV table; all values are pre-formatted so files are byte-stable.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};
std::string format_g(double v); ///< %.17g
void write_csv(const Table& table, const std::map<std::string, std::string>& metadata,
               const std::string& path);

struct Reference {
    double q = 0.0;
    double z = 0.0;
    double ratio() const { return q / z; }
};

/// Shared state of one experiment campaign: KL basis, data set, cached
/// references and lattice rules. Everything derived deterministically from
/// the configuration; caches live under <out_dir>/cache keyed by the
/// config hash.
class StudyContext {
  public:
    explicit StudyContext(StudyConfig config);

    const StudyConfig& config() const { return cfg_; }
    const KlBasis& basis() const { return basis_; }
    const MeshLevel& reference_mesh() const { return reference_mesh_; }

    /// Load the data file if present, else generate and persist it.
    const ObservationSet& data();
    /// Regenerate data for a parameter sweep (not persisted).
    ObservationSet data_for(int m, double sigma_eta2) const;

    /// High-accuracy (Q_h, Z_h) on the mesh with `mesh_n` cells per side via
    /// MLMC with `equivalent_n` finest-mesh solve equivalents; file-cached.
    Reference reference_for(int mesh_n, const ObservationSet& obs, std::int64_t equivalent_n);

    /// Lattice rule for N points: loaded from the configured file, or built
    /// by CBC (and file-cached) otherwise.
    LatticeRule rule_for(std::int64_t n_points);

    Table h_study();
    Table n_study();
    Table cost_study();
    Table robustness_study();

    /// Metadata block common to every emitted CSV.
    std::map<std::string, std::string> metadata() const;

  private:
    std::vector<MeshLevel> hierarchy_to(int mesh_n) const;
    EstimatorReport run_method(Method method, std::int64_t n, const MeshLevel& mesh,
                               const std::vector<MeshLevel>& hierarchy,
                               const ObservationSet& obs, Dependence dependence);

    StudyConfig cfg_;
    KlBasis basis_;
    MeshLevel reference_mesh_;
    std::optional<ObservationSet> data_;
};

} // namespace ratio

#endif
