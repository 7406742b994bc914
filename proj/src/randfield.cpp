#include "ratio/randfield.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace ratio {

namespace {

constexpr double kHalf = 0.5; // domain half-width after shifting [0,1] to [-1/2,1/2]

double bisect(double lo, double hi, const auto& f) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0)) {
        std::ostringstream msg;
        msg << "root not bracketed on [" << lo << ", " << hi << "]: f(lo) = " << flo
            << ", f(hi) = " << fhi;
        throw std::runtime_error(msg.str());
    }
    while (hi - lo > 1e-12 * std::max(1.0, hi)) {
        double mid = 0.5 * (lo + hi);
        double fmid = f(mid);
        if (fmid == 0.0) return mid;
        if ((fmid > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace

std::vector<OneDMode> one_d_eigenpairs(double lambda, int count) {
    if (lambda <= 0.0) throw std::invalid_argument("correlation length must be positive");
    if (count < 1) throw std::invalid_argument("mode count must be positive");
    const double c = 1.0 / lambda;
    const double pi = std::numbers::pi;

    // Pole-free forms of the transcendental equations on [-1/2, 1/2]:
    //   even:  c cos(wa) - w sin(wa) = 0   (one root per wa in (n pi, n pi + pi/2))
    //   odd:   w cos(wa) + c sin(wa) = 0   (one root per wa in (n pi + pi/2, (n+1) pi))
    auto even_eq = [c](double w) { return c * std::cos(w * kHalf) - w * std::sin(w * kHalf); };
    auto odd_eq = [c](double w) { return w * std::cos(w * kHalf) + c * std::sin(w * kHalf); };

    std::vector<OneDMode> modes;
    modes.reserve(count);
    for (int k = 0; modes.size() < static_cast<std::size_t>(count); ++k) {
        int n = k / 2;
        OneDMode mode;
        mode.even = (k % 2 == 0);
        double lo, hi;
        if (mode.even) {
            lo = n * pi / kHalf;
            hi = (n * pi + pi / 2) / kHalf;
            mode.omega = bisect(lo + 1e-14 * (1 + lo), hi - 1e-14 * hi, even_eq);
        } else {
            lo = (n * pi + pi / 2) / kHalf;
            hi = (n + 1) * pi / kHalf;
            mode.omega = bisect(lo + 1e-14 * lo, hi - 1e-14 * hi, odd_eq);
        }
        mode.eigenvalue = 2.0 * c / (mode.omega * mode.omega + c * c);
        double w = mode.omega;
        double s = std::sin(w) / (2.0 * w); // sin(2 w a) / (2 w) with a = 1/2
        mode.norm = 1.0 / std::sqrt(mode.even ? kHalf + s : kHalf - s);
        modes.push_back(mode);
    }
    return modes;
}

KlBasis::KlBasis(const CovarianceSpec& spec, int truncation, PriorKind prior, double mean,
                 double k_star)
    : spec_(spec), J_(truncation), prior_(prior), mean_(mean), k_star_(k_star) {
    if (spec.sigma2 <= 0.0) throw std::invalid_argument("variance must be positive");
    if (spec.lambda <= 0.0) throw std::invalid_argument("correlation length must be positive");
    if (spec.norm_order != 1)
        throw std::invalid_argument("only the 1-norm exponential kernel is implemented");
    if (truncation < 1) throw std::invalid_argument("truncation order must be at least 1");

    // Grow the 1-D pool until every tensor mode outside the M x M block is
    // provably below the J-th retained eigenvalue (bounded by l_0 * l_M).
    int pool = std::max(static_cast<int>(std::ceil(std::sqrt(double(J_)))) + 8, 16);
    constexpr int kPoolLimit = 4096;
    for (;;) {
        if (pool > kPoolLimit)
            throw std::runtime_error("1-D mode pool limit exceeded while building KL basis");
        auto modes = one_d_eigenpairs(spec_.lambda, pool + 1);
        if (static_cast<long>(pool) * pool < J_) {
            pool *= 2;
            continue;
        }
        struct Entry {
            double value;
            int ix, iy;
        };
        std::vector<Entry> entries;
        entries.reserve(static_cast<std::size_t>(pool) * pool);
        for (int ix = 0; ix < pool; ++ix)
            for (int iy = 0; iy < pool; ++iy)
                entries.push_back({spec_.sigma2 * modes[ix].eigenvalue * modes[iy].eigenvalue,
                                   ix, iy});
        std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
            if (a.value != b.value) return a.value > b.value;
            if (a.ix != b.ix) return a.ix < b.ix;
            return a.iy < b.iy;
        });
        double out_of_pool_bound = spec_.sigma2 * modes[0].eigenvalue * modes[pool].eigenvalue;
        if (out_of_pool_bound >= entries[J_ - 1].value) {
            pool *= 2;
            continue;
        }
        modes1d_ = std::move(modes);
        pairs_.resize(J_);
        eigenvalues_.resize(J_);
        gammas_.resize(J_);
        for (int j = 0; j < J_; ++j) {
            pairs_[j] = {entries[j].ix, entries[j].iy};
            eigenvalues_[j] = entries[j].value;
            gammas_[j] = std::sqrt(entries[j].value);
        }
        break;
    }
}

double KlBasis::eigenfunction(int j, double x, double y) const {
    const auto& [ix, iy] = pairs_.at(j);
    return modes1d_[ix].evaluate(x) * modes1d_[iy].evaluate(y);
}

std::pair<int, int> KlBasis::mode_indices(int j) const { return pairs_.at(j); }

Vector KlBasis::decay_sequence() const {
    auto sup1d = [](const OneDMode& m) {
        if (m.even) return m.norm;
        double half_arg = m.omega * 0.5;
        return m.norm * (half_arg >= std::numbers::pi / 2 ? 1.0 : std::sin(half_arg));
    };
    Vector b(J_);
    for (int j = 0; j < J_; ++j) {
        const auto& [ix, iy] = pairs_[j];
        b[j] = gammas_[j] * sup1d(modes1d_[ix]) * sup1d(modes1d_[iy]);
    }
    return b;
}

Matrix KlBasis::tabulate(const MeshLevel& mesh) const {
    // 1-D factor values at the distinct lattice coordinates, then products.
    int n1 = mesh.n + 1;
    int n_modes = static_cast<int>(modes1d_.size());
    Matrix axis(n1, n_modes);
    for (int i = 0; i < n1; ++i)
        for (int k = 0; k < n_modes; ++k) axis(i, k) = modes1d_[k].evaluate(i * mesh.h);
    Matrix table(mesh.num_nodes(), J_);
    for (int j = 0; j < J_; ++j) {
        const auto& [ix, iy] = pairs_[j];
        for (int jy = 0; jy < n1; ++jy)
            for (int jx = 0; jx < n1; ++jx)
                table(mesh.vertex(jx, jy), j) = axis(jx, ix) * axis(jy, iy);
    }
    return table;
}

double KlBasis::mercer_sum(double x, double y) const {
    double sum = 0.0;
    for (int j = 0; j < J_; ++j) {
        double phi = eigenfunction(j, x, y);
        sum += eigenvalues_[j] * phi * phi;
    }
    return sum;
}

Vector KlBasis::sample_parameters(RandomStream& stream) const {
    Vector xi(J_);
    if (prior_ == PriorKind::Gaussian)
        for (int j = 0; j < J_; ++j) xi[j] = stream.normal();
    else
        for (int j = 0; j < J_; ++j) xi[j] = stream.uniform_sym();
    return xi;
}

void KlBasis::save(const std::string& path, const MeshLevel& mesh) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open KL cache file for writing: " + path);
    out.precision(17);
    out << "kl-cache 1\n";
    out << spec_.sigma2 << ' ' << spec_.lambda << ' ' << spec_.norm_order << ' ' << J_ << ' '
        << (prior_ == PriorKind::Gaussian ? "gaussian" : "uniform") << ' ' << mesh.n << '\n';
    for (int j = 0; j < J_; ++j) out << eigenvalues_[j] << '\n';
    Matrix table = tabulate(mesh);
    for (int v = 0; v < table.rows(); ++v) {
        for (int j = 0; j < J_; ++j) out << table(v, j) << (j + 1 < J_ ? ' ' : '\n');
    }
}

Matrix KlBasis::load_tabulation(const std::string& path, const CovarianceSpec& spec, int J,
                                const MeshLevel& mesh) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open KL cache file: " + path);
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "kl-cache" || version != 1)
        throw std::runtime_error("unrecognised KL cache header in " + path);
    double sigma2, lambda;
    int norm_order, stored_j, mesh_n;
    std::string prior_name;
    in >> sigma2 >> lambda >> norm_order >> stored_j >> prior_name >> mesh_n;
    if (std::abs(sigma2 - spec.sigma2) > 1e-14 || std::abs(lambda - spec.lambda) > 1e-14 ||
        norm_order != spec.norm_order || stored_j != J || mesh_n != mesh.n)
        throw std::runtime_error("KL cache header does not match the requested basis: " + path);
    double skip;
    for (int j = 0; j < stored_j; ++j) in >> skip;
    Matrix table(mesh.num_nodes(), J);
    for (int v = 0; v < table.rows(); ++v)
        for (int j = 0; j < J; ++j) in >> table(v, j);
    if (!in) throw std::runtime_error("truncated KL cache file: " + path);
    return table;
}

FieldSampler::FieldSampler(const KlBasis& basis, const MeshLevel& mesh)
    : basis_(&basis), mesh_(&mesh), table_(basis.tabulate(mesh)) {}

Vector FieldSampler::realise_log_field(const Vector& xi) const {
    if (xi.size() != basis_->truncation())
        throw std::invalid_argument("parameter vector length does not match the KL truncation");
    Vector u = table_ * basis_->gammas().cwiseProduct(xi);
    u.array() += basis_->mean();
    return u;
}

FieldSample FieldSampler::realise(const Vector& xi) const {
    Vector u = realise_log_field(xi);
    FieldSample sample;
    if (basis_->prior() == PriorKind::Gaussian) {
        sample.values = u.array().exp() + basis_->k_star();
    } else {
        sample.values = u;
    }
    sample.k_min = sample.values.minCoeff();
    sample.k_max = sample.values.maxCoeff();
    if (sample.k_min <= 0.0)
        throw std::runtime_error(
            "field realisation is not positive (admissibility violation), k_min = " +
            std::to_string(sample.k_min));
    return sample;
}

} // namespace ratio
