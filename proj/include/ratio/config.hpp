#ifndef RATIO_CONFIG_HPP
#define RATIO_CONFIG_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ratio/types.hpp"

namespace ratio {

/// All knobs of a study, with desk-scale defaults. Every field can be set
/// from a key=value config file and overridden by CLI flags; the full
/// configuration is echoed into the metadata header of every CSV.
struct StudyConfig {
    // problem
    double sigma2 = 1.0;
    double lambda = 0.3;
    int kl_truncation = 200;
    PriorKind prior = PriorKind::Gaussian;
    int reference_n = 64; ///< 1/h* of the data-generation mesh
    int observations = 9;
    double sigma_eta2 = 0.09;
    std::uint64_t truth_seed = 2021;
    std::uint64_t noise_seed = 2022;
    std::uint64_t study_seed = 1;

    // discretisation
    int h0_inverse = 8;
    int levels = 2;          ///< h-study grid h0 * 2^{-l}, l = 0..levels
    int study_mesh_n = 16;   ///< fixed mesh of the n-study
    int cost_levels = 3;     ///< finest cost-study mesh is h0 * 2^-cost_levels
    int cost_h0_inverse = 4; ///< coarsest level of the cost-study hierarchy
    double solver_tol = 1e-10;

    // estimators
    int n_grid_min_log2 = 4;
    int n_grid_max_log2 = 12;
    bool independent = false; ///< default is the dependent ratio estimator
    int replications = 20;    ///< MC / MLMC replications
    int qmc_shifts = 16;
    std::string lattice_file; ///< empty: component-by-component construction
    double weight_exponent = 2.0;
    double reference_factor = 64.0; ///< reference budget, in units of the largest study

    // cost study
    double eps_max = 0.15;
    int eps_count = 7; ///< geometric grid, ratio 1/sqrt(2)

    // robustness study
    std::vector<double> noise_sweep{0.9, 0.09, 0.009};
    std::vector<int> m_sweep{1, 4, 9, 16, 25};
    std::int64_t robustness_n = 256;

    // output
    std::string out_dir = "out";
    std::string data_file; ///< defaults to <out_dir>/observations.dat

    std::vector<std::int64_t> n_grid() const;
    std::vector<double> eps_grid() const;
    std::string resolved_data_file() const;

    /// Canonical key=value serialisation (sorted keys), used for metadata
    /// echoing and hashing.
    std::map<std::string, std::string> to_map() const;
    std::string hash() const; ///< FNV-1a over the canonical serialisation

    void set(const std::string& key, const std::string& value);
    static StudyConfig from_file(const std::string& path);
};

} // namespace ratio

#endif
