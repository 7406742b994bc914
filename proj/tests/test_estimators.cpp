#include "doctest.h"

#include <cmath>

#include "ratio/estimators.hpp"
#include "ratio/parallel.hpp"

using namespace ratio;

namespace {

struct Problem {
    KlBasis basis;
    MeshLevel mesh;
    std::vector<MeshLevel> hierarchy;
    ObservationSet obs;

    Problem()
        : basis(CovarianceSpec{1.0, 0.3, 1}, 30, PriorKind::Gaussian),
          mesh(build_mesh(8)),
          hierarchy(build_mesh_hierarchy(4, 1)),
          obs(generate_data(basis, build_mesh(32), 4, 0.09, 51, 52)) {}
};

} // namespace

TEST_CASE("dependent ratio respects the sample bound") {
    Problem prob;
    SamplePlan plan;
    plan.n = 8;
    plan.replications = 64;
    plan.seed = 3;
    EstimatorReport report = mc_estimate(plan, prob.basis, prob.mesh, prob.obs);
    for (const auto& rep : report.replications) {
        REQUIRE(!rep.z_nonpositive);
        CHECK(std::abs(rep.ratio) <= rep.max_abs_phi + 1e-14);
    }
}

TEST_CASE("estimates are reproducible and thread independent") {
    Problem prob;
    SamplePlan plan;
    plan.n = 32;
    plan.replications = 4;
    plan.seed = 9;
    set_worker_threads(1);
    EstimatorReport serial = mc_estimate(plan, prob.basis, prob.mesh, prob.obs);
    set_worker_threads(4);
    EstimatorReport threaded = mc_estimate(plan, prob.basis, prob.mesh, prob.obs);
    set_worker_threads(1);
    REQUIRE(serial.replications.size() == threaded.replications.size());
    for (std::size_t r = 0; r < serial.replications.size(); ++r) {
        CHECK(serial.replications[r].q == threaded.replications[r].q);
        CHECK(serial.replications[r].z == threaded.replications[r].z);
    }
    CHECK(serial.q == threaded.q);
}

TEST_CASE("independent mode decouples numerator and denominator") {
    Problem prob;
    SamplePlan plan;
    plan.n = 16;
    plan.replications = 2;
    plan.seed = 5;
    plan.dependence = Dependence::Dependent;
    EstimatorReport dep = mc_estimate(plan, prob.basis, prob.mesh, prob.obs);
    plan.dependence = Dependence::Independent;
    EstimatorReport indep = mc_estimate(plan, prob.basis, prob.mesh, prob.obs);
    CHECK(dep.q == indep.q); // numerator samples are shared by construction
    CHECK(dep.z != indep.z);
}

TEST_CASE("QMC with one point per shift behaves like MC over shifts") {
    Problem prob;
    LatticeRule rule = cbc_construct(16, 30);
    SamplePlan plan;
    plan.n = 16;
    plan.replications = 8;
    plan.seed = 13;
    EstimatorReport report = qmc_estimate(plan, prob.basis, prob.mesh, prob.obs, rule);
    REQUIRE(report.replications.size() == 8);
    for (const auto& rep : report.replications) {
        CHECK(rep.z > 0.0);
        CHECK(std::abs(rep.ratio) <= rep.max_abs_phi + 1e-14);
    }
    EstimatorReport again = qmc_estimate(plan, prob.basis, prob.mesh, prob.obs, rule);
    CHECK(report.ratio == again.ratio);
}

TEST_CASE("single-level MLMC agrees with a plain estimator in structure") {
    Problem prob;
    std::vector<MeshLevel> single{build_mesh(4, 0)};
    SamplePlan plan;
    plan.method = Method::MLMC;
    plan.n_per_level = {64};
    plan.replications = 4;
    plan.seed = 21;
    EstimatorReport report = mlmc_estimate(plan, prob.basis, single, prob.obs);
    REQUIRE(report.level_variance_psi.size() == 1);
    for (const auto& rep : report.replications) {
        CHECK(rep.z > 0.0);
        CHECK(std::isfinite(rep.ratio));
    }
}

TEST_CASE("MLMC corrections vanish when both levels use the same mesh spacing") {
    // The telescope is consistent: fine and coarse evaluations of the same
    // realisation differ only through the mesh, so the level-1 variance must
    // be far below the level-0 variance on a smooth problem.
    Problem prob;
    SamplePlan plan;
    plan.method = Method::MLMC;
    plan.n_per_level = {256, 64};
    plan.replications = 4;
    plan.seed = 33;
    EstimatorReport report = mlmc_estimate(plan, prob.basis, prob.hierarchy, prob.obs);
    REQUIRE(report.level_variance_psi.size() == 2);
    CHECK(report.level_variance_psi[1] < 0.3 * report.level_variance_psi[0]);
    CHECK(report.level_variance_theta[1] < 0.3 * report.level_variance_theta[0]);
}

TEST_CASE("nonpositive telescoped denominators are flagged, not clipped") {
    Problem prob;
    ObservationSet far = prob.obs;
    far.y.array() += 100.0; // misfit so large every theta underflows
    far.sigma_eta2 = 1e-6;
    SamplePlan plan;
    plan.method = Method::MLMC;
    plan.n_per_level = {8, 4};
    plan.replications = 2;
    plan.seed = 41;
    EstimatorReport report = mlmc_estimate(plan, prob.basis, prob.hierarchy, far);
    CHECK(report.nonpositive_z_count == 2);
    for (const auto& rep : report.replications) {
        CHECK(rep.z_nonpositive);
        CHECK(std::isnan(rep.ratio));
    }
}

TEST_CASE("level allocation and cost models") {
    auto hierarchy = build_mesh_hierarchy(4, 2);
    std::vector<double> variance{1.0, 0.1, 0.01};
    std::vector<double> cost{16.0, 80.0, 320.0};
    auto alloc = allocate_levels(variance, cost, 1000);
    REQUIRE(alloc.size() == 3);
    CHECK(alloc[0] == 1000);
    CHECK(alloc[0] > alloc[1]);
    CHECK(alloc[1] > alloc[2]);
    CHECK(alloc[2] >= 2);

    auto eq = mlmc_allocation_for_equivalent_n(hierarchy, 1000);
    double budget = 1000.0 * 16 * 16;
    CHECK(cost_units_multilevel(eq, hierarchy) == doctest::Approx(budget).epsilon(0.1));
    CHECK(eq[0] > eq[1]);
    CHECK(eq[1] > eq[2]);

    MeshLevel mesh = build_mesh(8);
    CHECK(cost_units_single_level(100, mesh) == doctest::Approx(6400.0));
    CHECK(cost_units_multilevel({10, 5}, build_mesh_hierarchy(4, 1)) ==
          doctest::Approx(10 * 16 + 5 * (64 + 16)));
}
