#include "ratio/qmc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace ratio {

namespace {

/// B_2(x) on [0,1); the shift-averaged kernel of the product-weight
/// worst-case error in the unanchored weighted Sobolev space. (The Korobov
/// alpha=2 convention multiplies this by 2 pi^2, which uniformly rescales
/// the weights towards higher-order interactions.)
double bernoulli_kernel(double x) {
    return x * x - x + 1.0 / 6.0;
}

std::vector<double> kernel_table(std::int64_t n) {
    std::vector<double> omega(n);
    for (std::int64_t k = 0; k < n; ++k)
        omega[k] = bernoulli_kernel(static_cast<double>(k) / static_cast<double>(n));
    return omega;
}

} // namespace

double WeightSpec::weight(int j) const { return std::pow(static_cast<double>(j), -exponent); }

LatticeRule load_generating_vector(const std::string& path, std::int64_t n_points,
                                   int dimension) {
    if (n_points < 2) throw std::invalid_argument("lattice rule needs at least two points");
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open generating vector file: " + path);
    LatticeRule rule;
    rule.n_points = n_points;
    rule.provenance = LatticeProvenance::FileLoaded;
    std::string line;
    while (static_cast<int>(rule.z.size()) < dimension && std::getline(in, line)) {
        std::istringstream ls(line);
        std::int64_t a, b;
        if (!(ls >> a)) continue; // blank line
        std::int64_t value = (ls >> b) ? b : a;
        std::int64_t reduced = value % n_points;
        if (reduced < 0) reduced += n_points;
        int component = static_cast<int>(rule.z.size()) + 1;
        if (reduced == 0 || std::gcd(reduced, n_points) != 1)
            throw std::runtime_error("generating vector component " + std::to_string(component) +
                                     " = " + std::to_string(value) + " is not coprime with N = " +
                                     std::to_string(n_points));
        rule.z.push_back(reduced);
    }
    if (static_cast<int>(rule.z.size()) < dimension)
        throw std::runtime_error("generating vector file " + path + " has only " +
                                 std::to_string(rule.z.size()) + " usable components, need " +
                                 std::to_string(dimension));
    return rule;
}

double cbc_criterion(const std::vector<std::int64_t>& z, std::int64_t n, const WeightSpec& w) {
    auto omega = kernel_table(n);
    double sum = 0.0;
    for (std::int64_t k = 0; k < n; ++k) {
        double prod = 1.0;
        for (std::size_t j = 0; j < z.size(); ++j) {
            std::int64_t kz = (k * (z[j] % n)) % n;
            prod *= 1.0 + w.weight(static_cast<int>(j) + 1) * omega[kz];
        }
        sum += prod;
    }
    return sum / static_cast<double>(n) - 1.0;
}

LatticeRule cbc_construct(std::int64_t n, int dimension, const WeightSpec& weights) {
    if (n < 2) throw std::invalid_argument("lattice rule needs at least two points");
    if (dimension < 1) throw std::invalid_argument("dimension must be at least 1");
    auto omega = kernel_table(n);
    std::vector<std::int64_t> candidates;
    for (std::int64_t z = 1; z < n; ++z)
        if (std::gcd(z, n) == 1) candidates.push_back(z);

    LatticeRule rule;
    rule.n_points = n;
    rule.provenance = LatticeProvenance::CbcBuilt;
    std::vector<double> running(n, 1.0); // product over chosen components, per point
    for (int j = 1; j <= dimension; ++j) {
        double gamma = weights.weight(j);
        std::int64_t best = -1;
        double best_value = 0.0;
        for (std::int64_t z : candidates) {
            double sum = 0.0;
            std::int64_t kz = 0;
            for (std::int64_t k = 0; k < n; ++k) {
                sum += running[k] * (1.0 + gamma * omega[kz]);
                kz += z;
                if (kz >= n) kz -= n;
            }
            if (best < 0 || sum < best_value) {
                best = z;
                best_value = sum;
            }
        }
        rule.z.push_back(best);
        std::int64_t kz = 0;
        for (std::int64_t k = 0; k < n; ++k) {
            running[k] *= 1.0 + gamma * omega[kz];
            kz += best;
            if (kz >= n) kz -= n;
        }
    }
    return rule;
}

void save_generating_vector(const LatticeRule& rule, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path);
    for (std::size_t j = 0; j < rule.z.size(); ++j) out << j + 1 << ' ' << rule.z[j] << '\n';
}

Vector random_shift(int dimension, std::uint64_t seed) {
    RandomStream stream(seed);
    Vector shift(dimension);
    for (int j = 0; j < dimension; ++j) shift[j] = stream.uniform01();
    return shift;
}

Vector lattice_point(const LatticeRule& rule, const Vector& shift, std::int64_t i,
                     int dimension) {
    if (dimension > rule.dimension() || dimension > shift.size())
        throw std::invalid_argument("lattice rule / shift dimension too small");
    if (i < 1 || i > rule.n_points) throw std::invalid_argument("lattice index out of range");
    Vector point(dimension);
    for (int j = 0; j < dimension; ++j) {
        double v = static_cast<double>((i * rule.z[j]) % rule.n_points) /
                       static_cast<double>(rule.n_points) +
                   shift[j];
        point[j] = v - std::floor(v);
    }
    return point;
}

Vector map_to_parameters(const Vector& point, PriorKind prior) {
    Vector xi(point.size());
    if (prior == PriorKind::Uniform) {
        xi = 2.0 * point.array() - 1.0;
    } else {
        for (int j = 0; j < point.size(); ++j) {
            double v = std::clamp(point[j], 1e-16, 1.0 - 1e-16);
            xi[j] = inverse_normal_cdf(v);
        }
    }
    return xi;
}

} // namespace ratio
