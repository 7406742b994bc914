#include "ratio/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace ratio {

Eigen::Matrix<double, Eigen::Dynamic, 2> observation_nodes(int m, int ref_n) {
    int side = static_cast<int>(std::round(std::sqrt(static_cast<double>(m))));
    if (side * side != m)
        throw std::invalid_argument("observation count must be a perfect square, got " +
                                    std::to_string(m));
    int spacing_inv = side + 1;
    // Snap each nominal grid point to the nearest interior reference-mesh
    // vertex so the six-triangle observation patch is always well defined.
    auto snap = [ref_n](int k, int spacing_inv) {
        int idx = static_cast<int>(
            std::round(static_cast<double>(k) * ref_n / spacing_inv));
        return std::clamp(idx, 1, ref_n - 1);
    };
    Eigen::Matrix<double, Eigen::Dynamic, 2> nodes(m, 2);
    int row = 0;
    for (int j = 1; j <= side; ++j)
        for (int i = 1; i <= side; ++i) {
            nodes(row, 0) = static_cast<double>(snap(i, spacing_inv)) / ref_n;
            nodes(row, 1) = static_cast<double>(snap(j, spacing_inv)) / ref_n;
            ++row;
        }
    return nodes;
}

Vector observe(const MeshLevel& mesh, const Vector& p, const ObservationSet& obs) {
    Vector h(obs.m);
    for (int i = 0; i < obs.m; ++i)
        h[i] = patch_average(mesh, p, obs.ref_n, obs.nodes(i, 0), obs.nodes(i, 1));
    return h;
}

LikelihoodEval likelihood(const Vector& observed, const ObservationSet& obs, double phi_value) {
    if (observed.size() != obs.m)
        throw std::invalid_argument("observation vector length does not match the data");
    if (obs.sigma_eta2 <= 0.0) throw std::invalid_argument("noise variance must be positive");
    LikelihoodEval eval;
    eval.observed = observed;
    eval.misfit = (obs.y - observed).squaredNorm() / (2.0 * obs.sigma_eta2);
    eval.theta = std::exp(-eval.misfit);
    eval.psi = eval.theta * phi_value;
    return eval;
}

ObservationSet generate_data(const KlBasis& basis, const MeshLevel& reference_mesh, int m,
                             double sigma_eta2, std::uint64_t truth_seed,
                             std::uint64_t noise_seed, double solver_tol) {
    if (sigma_eta2 <= 0.0) throw std::invalid_argument("noise variance must be positive");
    ObservationSet obs;
    obs.m = m;
    obs.sigma_eta2 = sigma_eta2;
    obs.ref_n = reference_mesh.n;
    obs.truth_seed = truth_seed;
    obs.noise_seed = noise_seed;
    obs.nodes = observation_nodes(m, reference_mesh.n);

    RandomStream truth_stream(truth_seed);
    Vector xi = basis.sample_parameters(truth_stream);
    FieldSampler sampler(basis, reference_mesh);
    FieldSample field = sampler.realise(xi);
    FemSystem system = assemble(reference_mesh, field.values);
    ForwardSolution solution = solve(system, reference_mesh, solver_tol);
    obs.y = observe(reference_mesh, solution.p, obs);

    RandomStream noise_stream(noise_seed);
    double sigma = std::sqrt(sigma_eta2);
    for (int i = 0; i < m; ++i) obs.y[i] += sigma * noise_stream.normal();
    return obs;
}

void ObservationSet::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open data file for writing: " + path);
    out.precision(17);
    out << "obs-data 1\n";
    out << m << ' ' << sigma_eta2 << ' ' << ref_n << ' ' << truth_seed << ' ' << noise_seed
        << '\n';
    for (int i = 0; i < m; ++i)
        out << nodes(i, 0) << ' ' << nodes(i, 1) << ' ' << y[i] << '\n';
}

ObservationSet ObservationSet::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open data file: " + path);
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "obs-data" || version != 1)
        throw std::runtime_error("unrecognised data file header in " + path);
    ObservationSet obs;
    in >> obs.m >> obs.sigma_eta2 >> obs.ref_n >> obs.truth_seed >> obs.noise_seed;
    obs.nodes.resize(obs.m, 2);
    obs.y.resize(obs.m);
    for (int i = 0; i < obs.m; ++i) in >> obs.nodes(i, 0) >> obs.nodes(i, 1) >> obs.y[i];
    if (!in) throw std::runtime_error("truncated data file: " + path);
    return obs;
}

} // namespace ratio
