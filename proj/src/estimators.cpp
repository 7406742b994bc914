#include "ratio/estimators.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "ratio/parallel.hpp"
#include "ratio/rng.hpp"

namespace ratio {

namespace {

constexpr std::uint64_t kMcTag = 1, kQmcTag = 2, kMlmcTag = 3;

double mean_of(const std::vector<double>& v) {
    double sum = 0.0;
    for (double x : v) sum += x;
    return v.empty() ? 0.0 : sum / static_cast<double>(v.size());
}

double variance_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double m = mean_of(v);
    double sum = 0.0;
    for (double x : v) sum += (x - m) * (x - m);
    return sum / static_cast<double>(v.size() - 1);
}

double covariance_of(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2) return 0.0;
    double ma = mean_of(a), mb = mean_of(b);
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] - ma) * (b[i] - mb);
    return sum / static_cast<double>(a.size() - 1);
}

void finalise_report(EstimatorReport& report) {
    std::vector<double> qs, zs, ratios;
    for (const auto& rep : report.replications) {
        qs.push_back(rep.q);
        zs.push_back(rep.z);
        ratios.push_back(rep.ratio);
        if (rep.z_nonpositive) ++report.nonpositive_z_count;
    }
    report.q = mean_of(qs);
    report.z = mean_of(zs);
    report.ratio = mean_of(ratios);
    report.ratio_variance = variance_of(ratios);
}

ReplicationResult ratio_from_samples(const std::vector<SampleResult>& numerator,
                                     const std::vector<SampleResult>& denominator) {
    ReplicationResult rep;
    double q = 0.0, z = 0.0, max_phi = 0.0;
    for (const auto& s : numerator) {
        q += s.psi;
        max_phi = std::max(max_phi, std::abs(s.phi));
    }
    for (const auto& s : denominator) z += s.theta;
    rep.q = q / static_cast<double>(numerator.size());
    rep.z = z / static_cast<double>(denominator.size());
    rep.max_abs_phi = max_phi;
    rep.z_nonpositive = rep.z <= 0.0;
    rep.ratio = rep.z_nonpositive ? std::numeric_limits<double>::quiet_NaN() : rep.q / rep.z;
    return rep;
}

std::vector<int> restriction_map(const MeshLevel& coarse, const MeshLevel& fine) {
    if (fine.n != 2 * coarse.n)
        throw std::invalid_argument("hierarchy levels are not factor-2 nested");
    std::vector<int> map(coarse.num_nodes());
    for (int j = 0; j <= coarse.n; ++j)
        for (int i = 0; i <= coarse.n; ++i)
            map[coarse.vertex(i, j)] = fine.vertex(2 * i, 2 * j);
    return map;
}

} // namespace

SampleEvaluator::SampleEvaluator(const KlBasis& basis, const MeshLevel& mesh,
                                 const ObservationSet& obs, double solver_tol)
    : sampler_(basis, mesh), obs_(&obs), tol_(solver_tol) {}

SampleResult SampleEvaluator::evaluate(const Vector& xi) const {
    return evaluate_field(sampler_.realise(xi).values);
}

SampleResult SampleEvaluator::evaluate_field(const Vector& vertex_field) const {
    const MeshLevel& m = sampler_.mesh();
    FemSystem system = assemble(m, vertex_field);
    ForwardSolution solution = solve(system, m, tol_);
    SampleResult result;
    result.phi = outflow(m, vertex_field, solution.p);
    Vector h = observe(m, solution.p, *obs_);
    LikelihoodEval eval = likelihood(h, *obs_, result.phi);
    result.theta = eval.theta;
    result.psi = eval.psi;
    return result;
}

double cost_units_single_level(std::int64_t n, const MeshLevel& mesh) {
    return static_cast<double>(n) * mesh.n * mesh.n;
}

double cost_units_multilevel(const std::vector<std::int64_t>& n_per_level,
                             const std::vector<MeshLevel>& hierarchy) {
    if (n_per_level.size() > hierarchy.size())
        throw std::invalid_argument("more sample counts than hierarchy levels");
    double cost = static_cast<double>(n_per_level[0]) * hierarchy[0].n * hierarchy[0].n;
    for (std::size_t l = 1; l < n_per_level.size(); ++l)
        cost += static_cast<double>(n_per_level[l]) *
                (static_cast<double>(hierarchy[l].n) * hierarchy[l].n +
                 static_cast<double>(hierarchy[l - 1].n) * hierarchy[l - 1].n);
    return cost;
}

EstimatorReport mc_estimate(const SamplePlan& plan, const KlBasis& basis, const MeshLevel& mesh,
                            const ObservationSet& obs) {
    if (plan.n < 1) throw std::invalid_argument("sample count must be positive");
    auto t0 = std::chrono::steady_clock::now();
    SampleEvaluator evaluator(basis, mesh, obs, plan.solver_tol);
    EstimatorReport report;
    for (int r = 0; r < plan.replications; ++r) {
        auto draw_set = [&](std::uint64_t part) {
            std::vector<SampleResult> results(plan.n);
            parallel_for(plan.n, [&](long i) {
                RandomStream stream(derive_seed({plan.seed, kMcTag, part,
                                                 static_cast<std::uint64_t>(r),
                                                 static_cast<std::uint64_t>(i)}));
                results[i] = evaluator.evaluate(basis.sample_parameters(stream));
            });
            return results;
        };
        std::vector<SampleResult> numerator = draw_set(0);
        if (plan.dependence == Dependence::Dependent) {
            report.replications.push_back(ratio_from_samples(numerator, numerator));
        } else {
            std::vector<SampleResult> denominator = draw_set(1);
            report.replications.push_back(ratio_from_samples(numerator, denominator));
        }
    }
    finalise_report(report);
    report.cost_units = cost_units_single_level(plan.n, mesh);
    report.walltime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

EstimatorReport qmc_estimate(const SamplePlan& plan, const KlBasis& basis, const MeshLevel& mesh,
                             const ObservationSet& obs, const LatticeRule& rule) {
    if (plan.n < 1 || plan.n > rule.n_points)
        throw std::invalid_argument("QMC sample count must lie in [1, N]");
    if (rule.dimension() < basis.truncation())
        throw std::invalid_argument("lattice rule dimension is smaller than the KL truncation");
    auto t0 = std::chrono::steady_clock::now();
    SampleEvaluator evaluator(basis, mesh, obs, plan.solver_tol);
    int dim = basis.truncation();
    EstimatorReport report;
    for (int r = 0; r < plan.replications; ++r) {
        auto evaluate_shift = [&](std::uint64_t part) {
            Vector shift = random_shift(
                dim, derive_seed({plan.seed, kQmcTag, part, static_cast<std::uint64_t>(r)}));
            std::vector<SampleResult> results(plan.n);
            parallel_for(plan.n, [&](long i) {
                Vector point = lattice_point(rule, shift, i + 1, dim);
                results[i] = evaluator.evaluate(map_to_parameters(point, basis.prior()));
            });
            return results;
        };
        std::vector<SampleResult> numerator = evaluate_shift(0);
        if (plan.dependence == Dependence::Dependent) {
            report.replications.push_back(ratio_from_samples(numerator, numerator));
        } else {
            std::vector<SampleResult> denominator = evaluate_shift(1);
            report.replications.push_back(ratio_from_samples(numerator, denominator));
        }
    }
    finalise_report(report);
    report.cost_units = cost_units_single_level(plan.n, mesh);
    report.walltime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

EstimatorReport mlmc_estimate(const SamplePlan& plan, const KlBasis& basis,
                              const std::vector<MeshLevel>& hierarchy,
                              const ObservationSet& obs) {
    if (plan.n_per_level.empty() || plan.n_per_level.size() > hierarchy.size())
        throw std::invalid_argument("MLMC plan needs one sample count per hierarchy level");
    for (std::int64_t n : plan.n_per_level)
        if (n < 1) throw std::invalid_argument("MLMC sample counts must be positive");
    auto t0 = std::chrono::steady_clock::now();
    int levels = static_cast<int>(plan.n_per_level.size());

    std::vector<SampleEvaluator> evaluators;
    evaluators.reserve(levels);
    for (int l = 0; l < levels; ++l)
        evaluators.emplace_back(basis, hierarchy[l], obs, plan.solver_tol);
    std::vector<std::vector<int>> restrictions(levels);
    for (int l = 1; l < levels; ++l)
        restrictions[l] = restriction_map(hierarchy[l - 1], hierarchy[l]);

    struct Correction {
        double y_psi, y_theta, max_abs_phi;
    };
    // Pooled per-level corrections across replications, for variance screening.
    std::vector<std::vector<double>> pooled_psi(levels), pooled_theta(levels);

    EstimatorReport report;
    bool dependent = plan.dependence == Dependence::Dependent;
    for (int r = 0; r < plan.replications; ++r) {
        auto level_corrections = [&](int l, std::uint64_t part) {
            std::int64_t n = plan.n_per_level[l];
            std::vector<Correction> out(n);
            parallel_for(n, [&](long i) {
                RandomStream stream(derive_seed({plan.seed, kMlmcTag, part,
                                                 static_cast<std::uint64_t>(l),
                                                 static_cast<std::uint64_t>(r),
                                                 static_cast<std::uint64_t>(i)}));
                Vector xi = basis.sample_parameters(stream);
                if (l == 0) {
                    SampleResult s = evaluators[0].evaluate(xi);
                    out[i] = {s.psi, s.theta, std::abs(s.phi)};
                } else {
                    FieldSample fine = evaluators[l].sampler().realise(xi);
                    Vector coarse(restrictions[l].size());
                    for (std::size_t v = 0; v < restrictions[l].size(); ++v)
                        coarse[v] = fine.values[restrictions[l][v]];
                    SampleResult sf = evaluators[l].evaluate_field(fine.values);
                    SampleResult sc = evaluators[l - 1].evaluate_field(coarse);
                    out[i] = {sf.psi - sc.psi, sf.theta - sc.theta,
                              std::max(std::abs(sf.phi), std::abs(sc.phi))};
                }
            });
            return out;
        };

        ReplicationResult rep;
        double q = 0.0, z = 0.0;
        for (int l = 0; l < levels; ++l) {
            auto num = level_corrections(l, 0);
            double sum_psi = 0.0;
            for (const auto& c : num) {
                sum_psi += c.y_psi;
                rep.max_abs_phi = std::max(rep.max_abs_phi, c.max_abs_phi);
                pooled_psi[l].push_back(c.y_psi);
            }
            q += sum_psi / static_cast<double>(num.size());
            const auto& den = dependent ? num : level_corrections(l, 1);
            double sum_theta = 0.0;
            for (const auto& c : den) {
                sum_theta += c.y_theta;
                pooled_theta[l].push_back(c.y_theta);
            }
            z += sum_theta / static_cast<double>(den.size());
        }
        rep.q = q;
        rep.z = z;
        rep.z_nonpositive = z <= 0.0;
        rep.ratio = rep.z_nonpositive ? std::numeric_limits<double>::quiet_NaN() : q / z;
        report.replications.push_back(rep);
    }
    finalise_report(report);
    report.level_variance_psi.resize(levels);
    report.level_variance_theta.resize(levels);
    report.level_covariance.resize(levels);
    for (int l = 0; l < levels; ++l) {
        report.level_variance_psi[l] = variance_of(pooled_psi[l]);
        report.level_variance_theta[l] = variance_of(pooled_theta[l]);
        // In dependent mode both pools hold the same samples in order, so
        // this is the coupling covariance; in independent mode the pools are
        // unrelated draws and the value is not meaningful.
        report.level_covariance[l] = covariance_of(pooled_psi[l], pooled_theta[l]);
    }
    report.cost_units = cost_units_multilevel(plan.n_per_level, hierarchy);
    report.walltime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

std::vector<std::int64_t> allocate_levels(const std::vector<double>& level_variance,
                                          const std::vector<double>& level_cost,
                                          std::int64_t target_n0) {
    if (level_variance.size() != level_cost.size() || level_variance.empty())
        throw std::invalid_argument("variance and cost vectors must match and be non-empty");
    for (double v : level_variance)
        if (v <= 0.0) throw std::invalid_argument("screened level variances must be positive");
    std::vector<std::int64_t> n(level_variance.size());
    double scale = static_cast<double>(target_n0) /
                   std::sqrt(level_variance[0] / level_cost[0]);
    for (std::size_t l = 0; l < n.size(); ++l) {
        double raw = scale * std::sqrt(level_variance[l] / level_cost[l]);
        n[l] = std::max<std::int64_t>(2, static_cast<std::int64_t>(std::ceil(raw)));
    }
    return n;
}

std::vector<std::int64_t> mlmc_allocation_for_equivalent_n(const std::vector<MeshLevel>& hierarchy,
                                                           std::int64_t equivalent_n) {
    if (hierarchy.empty()) throw std::invalid_argument("empty hierarchy");
    std::size_t levels = hierarchy.size();
    double fine_n = hierarchy.back().n;
    double budget = static_cast<double>(equivalent_n) * fine_n * fine_n;
    // N_l ~ h_l^2; the unit-scale cost of that profile:
    std::vector<double> profile(levels);
    double profile_cost = 0.0;
    for (std::size_t l = 0; l < levels; ++l) {
        double hl = hierarchy[l].h;
        profile[l] = hl * hl;
        double cl = static_cast<double>(hierarchy[l].n) * hierarchy[l].n;
        if (l > 0) cl += static_cast<double>(hierarchy[l - 1].n) * hierarchy[l - 1].n;
        profile_cost += profile[l] * cl;
    }
    double scale = budget / profile_cost;
    std::vector<std::int64_t> n(levels);
    for (std::size_t l = 0; l < levels; ++l)
        n[l] = std::max<std::int64_t>(2, static_cast<std::int64_t>(std::llround(scale * profile[l])));
    return n;
}

} // namespace ratio
