#include "doctest.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include "ratio/bayes.hpp"

using namespace ratio;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("observation nodes are interior reference vertices") {
    for (int m : {1, 4, 9, 16, 25}) {
        auto nodes = observation_nodes(m, 64);
        REQUIRE(nodes.rows() == m);
        for (int i = 0; i < m; ++i) {
            double si = nodes(i, 0) * 64, sj = nodes(i, 1) * 64;
            CHECK(si == doctest::Approx(std::round(si)).epsilon(1e-14));
            CHECK(sj == doctest::Approx(std::round(sj)).epsilon(1e-14));
            CHECK(nodes(i, 0) > 0.0);
            CHECK(nodes(i, 0) < 1.0);
            CHECK(nodes(i, 1) > 0.0);
            CHECK(nodes(i, 1) < 1.0);
        }
    }
    CHECK_THROWS(observation_nodes(5, 64)); // not a perfect square
    // exact spacings when the grid allows them
    auto nine = observation_nodes(9, 64);
    CHECK(nine(0, 0) == doctest::Approx(0.25));
    CHECK(nine(8, 1) == doctest::Approx(0.75));
}

TEST_CASE("likelihood factor") {
    ObservationSet obs;
    obs.m = 2;
    obs.sigma_eta2 = 0.5;
    obs.y.resize(2);
    obs.y << 1.0, -1.0;
    Vector exact = obs.y;
    LikelihoodEval hit = likelihood(exact, obs, 3.0);
    CHECK(hit.misfit == 0.0);
    CHECK(hit.theta == 1.0);
    CHECK(hit.psi == 3.0);
    Vector off(2);
    off << 2.0, -1.0;
    LikelihoodEval miss = likelihood(off, obs, 3.0);
    CHECK(miss.misfit == doctest::Approx(1.0));
    CHECK(miss.theta == doctest::Approx(std::exp(-1.0)));
    CHECK_THROWS(likelihood(Vector::Zero(3), obs, 0.0));
}

TEST_CASE("data generation is deterministic and seed sensitive") {
    KlBasis basis(CovarianceSpec{1.0, 0.3, 1}, 40, PriorKind::Gaussian);
    MeshLevel mesh = build_mesh(16);
    ObservationSet a = generate_data(basis, mesh, 4, 0.09, 11, 12);
    ObservationSet b = generate_data(basis, mesh, 4, 0.09, 11, 12);
    CHECK((a.y.array() == b.y.array()).all());
    ObservationSet c = generate_data(basis, mesh, 4, 0.09, 11, 13);
    CHECK(!(a.y.array() == c.y.array()).all());
    ObservationSet d = generate_data(basis, mesh, 4, 0.09, 10, 12);
    CHECK(!(a.y.array() == d.y.array()).all());
    // noise and truth are separate streams: same truth, different noise
    CHECK((a.y - c.y).cwiseAbs().maxCoeff() < 3.0);
}

TEST_CASE("data file round trip is byte stable") {
    KlBasis basis(CovarianceSpec{1.0, 0.3, 1}, 40, PriorKind::Gaussian);
    MeshLevel mesh = build_mesh(16);
    ObservationSet obs = generate_data(basis, mesh, 9, 0.09, 21, 22);
    std::string p1 = "/tmp/ratio_obs_a.dat", p2 = "/tmp/ratio_obs_b.dat";
    obs.save(p1);
    ObservationSet loaded = ObservationSet::load(p1);
    CHECK(loaded.m == obs.m);
    CHECK((loaded.y.array() == obs.y.array()).all());
    CHECK((loaded.nodes.array() == obs.nodes.array()).all());
    loaded.save(p2);
    CHECK(slurp(p1) == slurp(p2));
    CHECK_THROWS(ObservationSet::load("/tmp/ratio_obs_missing.dat"));
}

TEST_CASE("noise has the configured scale") {
    KlBasis basis(CovarianceSpec{1.0, 0.3, 1}, 40, PriorKind::Gaussian);
    MeshLevel mesh = build_mesh(16);
    ObservationSet clean = generate_data(basis, mesh, 25, 1e-300, 31, 32);
    double sum2 = 0.0;
    const int trials = 40;
    for (int t = 0; t < trials; ++t) {
        ObservationSet noisy = generate_data(basis, mesh, 25, 0.09, 31, 100 + t);
        sum2 += (noisy.y - clean.y).squaredNorm();
    }
    double sample_var = sum2 / (trials * 25);
    CHECK(sample_var == doctest::Approx(0.09).epsilon(0.15));
}
