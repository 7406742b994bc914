#include "ratio/studies.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "ratio/rng.hpp"

namespace fs = std::filesystem;

namespace ratio {

namespace {

constexpr std::uint64_t kReferenceTag = 999;

double rms_error(const std::vector<ReplicationResult>& reps, double reference,
                 double (*pick)(const ReplicationResult&)) {
    double sum = 0.0;
    int count = 0;
    for (const auto& r : reps) {
        double v = pick(r);
        if (!std::isfinite(v)) continue;
        sum += (v - reference) * (v - reference);
        ++count;
    }
    return count > 0 ? std::sqrt(sum / count) : std::numeric_limits<double>::quiet_NaN();
}

double pick_ratio(const ReplicationResult& r) { return r.ratio; }
double pick_q(const ReplicationResult& r) { return r.q; }
double pick_z(const ReplicationResult& r) { return r.z; }

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hex16(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

} // namespace

double FitResult::predict(double x) const {
    return std::pow(10.0, intercept + slope * std::log10(x));
}

FitResult fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("log-log fit needs at least two points");
    std::size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0))
            throw std::invalid_argument("log-log fit requires positive data");
        lx[i] = std::log10(x[i]);
        ly[i] = std::log10(y[i]);
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    double denom = n * sxx - sx * sx;
    FitResult fit;
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    if (n > 2) {
        double rss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double resid = ly[i] - (fit.intercept + fit.slope * lx[i]);
            rss += resid * resid;
        }
        double s2 = rss / (n - 2);
        fit.slope_std_error = std::sqrt(s2 * n / denom);
    }
    return fit;
}

std::string format_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_csv(const Table& table, const std::map<std::string, std::string>& metadata,
               const std::string& path) {
    fs::create_directories(fs::path(path).parent_path().empty()
                               ? fs::path(".")
                               : fs::path(path).parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open CSV for writing: " + path);
    for (const auto& [k, v] : metadata) out << "# " << k << "=" << v << '\n';
    for (std::size_t c = 0; c < table.columns.size(); ++c)
        out << table.columns[c] << (c + 1 < table.columns.size() ? "," : "\n");
    for (const auto& row : table.rows) {
        if (row.size() != table.columns.size())
            throw std::logic_error("CSV row width does not match the header");
        for (std::size_t c = 0; c < row.size(); ++c)
            out << row[c] << (c + 1 < row.size() ? "," : "\n");
    }
}

StudyContext::StudyContext(StudyConfig config)
    : cfg_(std::move(config)),
      basis_(CovarianceSpec{cfg_.sigma2, cfg_.lambda, 1}, cfg_.kl_truncation, cfg_.prior),
      reference_mesh_(build_mesh(cfg_.reference_n)) {
    fs::create_directories(cfg_.out_dir);
    fs::create_directories(cfg_.out_dir + "/cache");
}

std::map<std::string, std::string> StudyContext::metadata() const {
    auto m = cfg_.to_map();
    m["config_hash"] = cfg_.hash();
    m["format_version"] = "1";
    return m;
}

const ObservationSet& StudyContext::data() {
    if (data_) return *data_;
    std::string path = cfg_.resolved_data_file();
    if (fs::exists(path)) {
        data_ = ObservationSet::load(path);
        if (data_->m != cfg_.observations || data_->ref_n != cfg_.reference_n)
            throw std::runtime_error("data file " + path +
                                     " does not match the configured problem");
    } else {
        data_ = generate_data(basis_, reference_mesh_, cfg_.observations, cfg_.sigma_eta2,
                              cfg_.truth_seed, cfg_.noise_seed, cfg_.solver_tol);
        data_->save(path);
    }
    return *data_;
}

ObservationSet StudyContext::data_for(int m, double sigma_eta2) const {
    return generate_data(basis_, reference_mesh_, m, sigma_eta2, cfg_.truth_seed,
                         cfg_.noise_seed, cfg_.solver_tol);
}

std::vector<MeshLevel> StudyContext::hierarchy_to(int mesh_n) const {
    std::vector<MeshLevel> hierarchy;
    int levels = 0;
    int n = cfg_.h0_inverse;
    while (n < mesh_n) {
        n *= 2;
        ++levels;
    }
    if (n != mesh_n)
        throw std::invalid_argument("mesh 1/" + std::to_string(mesh_n) +
                                    " is not in the hierarchy rooted at 1/" +
                                    std::to_string(cfg_.h0_inverse));
    return build_mesh_hierarchy(cfg_.h0_inverse, levels);
}

Reference StudyContext::reference_for(int mesh_n, const ObservationSet& obs,
                                      std::int64_t equivalent_n) {
    std::string key = "ref;" + cfg_.hash() + ";" + std::to_string(mesh_n) + ";" +
                      std::to_string(obs.m) + ";" + format_g(obs.sigma_eta2) + ";" +
                      std::to_string(equivalent_n);
    std::string path = cfg_.out_dir + "/cache/ref_" + std::to_string(mesh_n) + "_" +
                       hex16(fnv1a(key)) + ".txt";
    if (fs::exists(path)) {
        std::ifstream in(path);
        Reference ref;
        in >> ref.q >> ref.z;
        if (in) return ref;
    }
    auto hierarchy = hierarchy_to(mesh_n);
    SamplePlan plan;
    plan.method = Method::MLMC;
    plan.n_per_level = mlmc_allocation_for_equivalent_n(hierarchy, equivalent_n);
    plan.dependence = Dependence::Dependent;
    plan.replications = 1;
    plan.solver_tol = cfg_.solver_tol;
    plan.seed = derive_seed({cfg_.study_seed, kReferenceTag, static_cast<std::uint64_t>(mesh_n),
                             static_cast<std::uint64_t>(obs.m),
                             static_cast<std::uint64_t>(std::llround(obs.sigma_eta2 * 1e12)),
                             static_cast<std::uint64_t>(equivalent_n)});
    EstimatorReport report = mlmc_estimate(plan, basis_, hierarchy, obs);
    Reference ref{report.q, report.z};
    std::ofstream out(path);
    out.precision(17);
    out << ref.q << ' ' << ref.z << '\n';
    return ref;
}

LatticeRule StudyContext::rule_for(std::int64_t n_points) {
    if (!cfg_.lattice_file.empty())
        return load_generating_vector(cfg_.lattice_file, n_points, cfg_.kl_truncation);
    WeightSpec weights{cfg_.weight_exponent};
    std::string path = cfg_.out_dir + "/cache/cbc_" + std::to_string(n_points) + "_" +
                       std::to_string(cfg_.kl_truncation) + "_" +
                       hex16(fnv1a(format_g(cfg_.weight_exponent))) + ".txt";
    if (fs::exists(path)) return load_generating_vector(path, n_points, cfg_.kl_truncation);
    LatticeRule rule = cbc_construct(n_points, cfg_.kl_truncation, weights);
    save_generating_vector(rule, path);
    return rule;
}

EstimatorReport StudyContext::run_method(Method method, std::int64_t n, const MeshLevel& mesh,
                                         const std::vector<MeshLevel>& hierarchy,
                                         const ObservationSet& obs, Dependence dependence) {
    SamplePlan plan;
    plan.method = method;
    plan.dependence = dependence;
    plan.seed = cfg_.study_seed;
    plan.solver_tol = cfg_.solver_tol;
    switch (method) {
        case Method::MC:
            plan.n = n;
            plan.replications = cfg_.replications;
            return mc_estimate(plan, basis_, mesh, obs);
        case Method::QMC: {
            plan.n = n;
            plan.replications = cfg_.qmc_shifts;
            LatticeRule rule = rule_for(n);
            return qmc_estimate(plan, basis_, mesh, obs, rule);
        }
        case Method::MLMC:
            plan.n_per_level = mlmc_allocation_for_equivalent_n(hierarchy, n);
            plan.replications = cfg_.replications;
            return mlmc_estimate(plan, basis_, hierarchy, obs);
    }
    throw std::logic_error("unreachable");
}

Table StudyContext::h_study() {
    const ObservationSet& obs = data();
    std::int64_t ref_budget =
        static_cast<std::int64_t>(cfg_.reference_factor * (std::int64_t{1} << cfg_.n_grid_max_log2));
    std::vector<int> mesh_ns;
    std::vector<Reference> refs;
    for (int l = 0; l <= cfg_.levels; ++l) {
        int n = cfg_.h0_inverse << l;
        mesh_ns.push_back(n);
        refs.push_back(reference_for(n, obs, ref_budget));
    }
    Table table;
    table.columns = {"level", "h",  "q_h",    "z_h",    "ratio_h",
                     "dq",    "dz", "dratio", "cost_units_reference"};
    for (std::size_t l = 0; l < mesh_ns.size(); ++l) {
        double h = 1.0 / mesh_ns[l];
        std::string dq = "", dz = "", dr = "";
        if (l > 0) {
            dq = format_g(std::abs(refs[l].q - refs[l - 1].q));
            dz = format_g(std::abs(refs[l].z - refs[l - 1].z));
            dr = format_g(std::abs(refs[l].ratio() - refs[l - 1].ratio()));
        }
        auto hierarchy = hierarchy_to(mesh_ns[l]);
        double cost =
            cost_units_multilevel(mlmc_allocation_for_equivalent_n(hierarchy, ref_budget), hierarchy);
        table.rows.push_back({std::to_string(l), format_g(h), format_g(refs[l].q),
                              format_g(refs[l].z), format_g(refs[l].ratio()), dq, dz, dr,
                              format_g(cost)});
    }
    return table;
}

Table StudyContext::n_study() {
    const ObservationSet& obs = data();
    const MeshLevel mesh = build_mesh(cfg_.study_mesh_n);
    auto hierarchy = hierarchy_to(cfg_.study_mesh_n);
    std::int64_t ref_budget = static_cast<std::int64_t>(
        4.0 * cfg_.reference_factor * (std::int64_t{1} << cfg_.n_grid_max_log2));
    Reference ref = reference_for(cfg_.study_mesh_n, obs, ref_budget);
    Dependence dep = cfg_.independent ? Dependence::Independent : Dependence::Dependent;

    Table table;
    table.columns = {"method",  "N",           "error_ratio",  "spread_ratio", "error_q",
                     "error_z", "cost_units",  "replications", "nonpositive_z"};
    for (Method method : {Method::MC, Method::QMC, Method::MLMC}) {
        const char* name = method == Method::MC ? "mc" : method == Method::QMC ? "qmc" : "mlmc";
        for (std::int64_t n : cfg_.n_grid()) {
            EstimatorReport report = run_method(method, n, mesh, hierarchy, obs, dep);
            table.rows.push_back({name, std::to_string(n),
                                  format_g(rms_error(report.replications, ref.ratio(), pick_ratio)),
                                  format_g(std::sqrt(report.ratio_variance)),
                                  format_g(rms_error(report.replications, ref.q, pick_q)),
                                  format_g(rms_error(report.replications, ref.z, pick_z)),
                                  format_g(report.cost_units),
                                  std::to_string(report.replications.size()),
                                  std::to_string(report.nonpositive_z_count)});
        }
    }
    return table;
}

Table StudyContext::cost_study() {
    const ObservationSet& obs = data();
    // Bias model from the h-study differences (Richardson-style).
    Table hs = h_study();
    std::vector<double> hvals, dratios;
    for (const auto& row : hs.rows) {
        if (row[7].empty()) continue;
        hvals.push_back(std::stod(row[1]));
        dratios.push_back(std::stod(row[7]));
    }
    FitResult bias_fit = fit_loglog(hvals, dratios);

    // The cost hierarchy is rooted below the study h0 so the MLMC level sum
    // saturates within the accessible epsilon range.
    int finest_n = cfg_.h0_inverse << cfg_.cost_levels;
    int extra = 0;
    while ((cfg_.cost_h0_inverse << (cfg_.cost_levels + extra)) < finest_n) ++extra;
    if ((cfg_.cost_h0_inverse << (cfg_.cost_levels + extra)) != finest_n)
        throw std::invalid_argument("cost_h0_inverse must divide the finest cost mesh");
    auto cost_hierarchy = build_mesh_hierarchy(cfg_.cost_h0_inverse, cfg_.cost_levels + extra);
    std::int64_t ref_budget = static_cast<std::int64_t>(
        4.0 * cfg_.reference_factor * (std::int64_t{1} << cfg_.n_grid_max_log2));
    const MeshLevel pilot_mesh = build_mesh(cfg_.study_mesh_n);
    auto pilot_hierarchy = hierarchy_to(cfg_.study_mesh_n);
    Reference pilot_ref = reference_for(cfg_.study_mesh_n, obs, ref_budget);

    // MC pilot: per-sample ratio variance from replication scatter.
    std::int64_t pilot_n = 256;
    EstimatorReport mc_pilot =
        run_method(Method::MC, pilot_n, pilot_mesh, pilot_hierarchy, obs, Dependence::Dependent);
    double mc_sample_variance = mc_pilot.ratio_variance * static_cast<double>(pilot_n);

    // QMC pilot: single-shift spread at the largest pilot N calibrates the
    // constant of the asymptotic c/N error model. The constant is taken at
    // the largest N so the model overpredicts the error in the shallower
    // small-N regime and the chosen N always meets the sampling budget.
    std::int64_t qmc_pilot_n = 1024;
    EstimatorReport qmc_pilot = run_method(Method::QMC, qmc_pilot_n, pilot_mesh,
                                           pilot_hierarchy, obs, Dependence::Dependent);
    double qmc_constant =
        std::sqrt(qmc_pilot.ratio_variance) * static_cast<double>(qmc_pilot_n);

    // MLMC variance screen on the full cost hierarchy.
    SamplePlan screen;
    screen.method = Method::MLMC;
    screen.n_per_level.assign(cost_hierarchy.size(), 500);
    screen.replications = 1;
    screen.seed = derive_seed({cfg_.study_seed, 555});
    screen.solver_tol = cfg_.solver_tol;
    EstimatorReport screen_report = mlmc_estimate(screen, basis_, cost_hierarchy, obs);
    double ratio_ref = pilot_ref.ratio();
    double z_ref = pilot_ref.z;
    // Effective per-level variances of the linearised ratio error
    // (Y_psi - r Y_theta) / z. With shared samples the coupling covariance
    // cancels most of the variance; with disjoint samples it is absent.
    std::vector<double> level_var_dep(cost_hierarchy.size()),
        level_var_ind(cost_hierarchy.size()), level_cost(cost_hierarchy.size());
    for (std::size_t l = 0; l < cost_hierarchy.size(); ++l) {
        double vp = screen_report.level_variance_psi[l];
        double vt = screen_report.level_variance_theta[l];
        double cv = screen_report.level_covariance[l];
        level_var_ind[l] = (vp + ratio_ref * ratio_ref * vt) / (z_ref * z_ref);
        level_var_dep[l] =
            (vp - 2.0 * ratio_ref * cv + ratio_ref * ratio_ref * vt) / (z_ref * z_ref);
        level_cost[l] = static_cast<double>(cost_hierarchy[l].n) * cost_hierarchy[l].n;
        if (l > 0)
            level_cost[l] +=
                static_cast<double>(cost_hierarchy[l - 1].n) * cost_hierarchy[l - 1].n;
    }

    Table table;
    table.columns = {"method", "dependence", "eps",        "mesh_n",   "samples",
                     "levels", "cost_units", "estimate",   "bias_model"};
    for (double eps : cfg_.eps_grid()) {
        double target = eps / std::sqrt(2.0);
        // coarsest mesh whose modelled bias is within budget; finest otherwise
        std::size_t chosen = cost_hierarchy.size() - 1;
        for (std::size_t l = 0; l < cost_hierarchy.size(); ++l) {
            if (bias_fit.predict(cost_hierarchy[l].h) <= target) {
                chosen = l;
                break;
            }
        }
        const MeshLevel& mesh = cost_hierarchy[chosen];
        std::vector<MeshLevel> hierarchy(cost_hierarchy.begin(),
                                         cost_hierarchy.begin() + chosen + 1);
        double bias_here = bias_fit.predict(mesh.h);

        for (Dependence dep : {Dependence::Dependent, Dependence::Independent}) {
            const char* dep_name = dep == Dependence::Dependent ? "dependent" : "independent";
            double dep_factor = dep == Dependence::Dependent ? 1.0 : 2.0;

            { // MC
                std::int64_t n = std::max<std::int64_t>(
                    2, static_cast<std::int64_t>(std::ceil(mc_sample_variance / (target * target))));
                SamplePlan plan;
                plan.method = Method::MC;
                plan.n = n;
                plan.dependence = dep;
                plan.replications = 1;
                plan.seed = cfg_.study_seed;
                plan.solver_tol = cfg_.solver_tol;
                EstimatorReport rep = mc_estimate(plan, basis_, mesh, obs);
                table.rows.push_back({"mc", dep_name, format_g(eps), std::to_string(mesh.n),
                                      std::to_string(n), "1",
                                      format_g(dep_factor * cost_units_single_level(n, mesh)),
                                      format_g(rep.ratio), format_g(bias_here)});
            }
            { // QMC
                double n_raw = qmc_constant / target;
                std::int64_t n = 2;
                while (n < static_cast<std::int64_t>(std::ceil(n_raw))) n <<= 1;
                SamplePlan plan;
                plan.method = Method::QMC;
                plan.n = n;
                plan.dependence = dep;
                plan.replications = 1;
                plan.seed = cfg_.study_seed;
                plan.solver_tol = cfg_.solver_tol;
                LatticeRule rule = rule_for(n);
                EstimatorReport rep = qmc_estimate(plan, basis_, mesh, obs, rule);
                table.rows.push_back({"qmc", dep_name, format_g(eps), std::to_string(mesh.n),
                                      std::to_string(n), "1",
                                      format_g(dep_factor * cost_units_single_level(n, mesh)),
                                      format_g(rep.ratio), format_g(bias_here)});
            }
            { // MLMC: N_l = (1/target^2) sqrt(V_l/C_l) sum_k sqrt(V_k C_k)
                const std::vector<double>& level_var =
                    dep == Dependence::Dependent ? level_var_dep : level_var_ind;
                std::size_t levels = chosen + 1;
                double sum_vc = 0.0;
                for (std::size_t l = 0; l < levels; ++l)
                    sum_vc += std::sqrt(level_var[l] * level_cost[l]);
                std::vector<std::int64_t> n_per_level(levels);
                std::int64_t total = 0;
                for (std::size_t l = 0; l < levels; ++l) {
                    double raw =
                        std::sqrt(level_var[l] / level_cost[l]) * sum_vc / (target * target);
                    n_per_level[l] = std::max<std::int64_t>(
                        2, static_cast<std::int64_t>(std::ceil(raw)));
                    total += n_per_level[l];
                }
                SamplePlan plan;
                plan.method = Method::MLMC;
                plan.n_per_level = n_per_level;
                plan.dependence = dep;
                plan.replications = 1;
                plan.seed = cfg_.study_seed;
                plan.solver_tol = cfg_.solver_tol;
                EstimatorReport rep = mlmc_estimate(plan, basis_, hierarchy, obs);
                table.rows.push_back(
                    {"mlmc", dep_name, format_g(eps), std::to_string(mesh.n),
                     std::to_string(total), std::to_string(levels),
                     format_g(dep_factor * cost_units_multilevel(n_per_level, hierarchy)),
                     format_g(rep.ratio), format_g(bias_here)});
            }
        }
    }
    return table;
}

Table StudyContext::robustness_study() {
    const MeshLevel mesh = build_mesh(cfg_.study_mesh_n);
    auto hierarchy = hierarchy_to(cfg_.study_mesh_n);
    std::int64_t ref_budget =
        static_cast<std::int64_t>(cfg_.reference_factor * (std::int64_t{1} << cfg_.n_grid_max_log2));

    Table table;
    table.columns = {"sweep", "m", "sigma_eta2", "method", "N", "error_ratio", "cost_units"};
    auto run_setting = [&](const char* sweep, int m, double sigma_eta2) {
        ObservationSet obs = data_for(m, sigma_eta2);
        Reference ref = reference_for(cfg_.study_mesh_n, obs, ref_budget);
        for (Method method : {Method::MC, Method::QMC, Method::MLMC}) {
            const char* name =
                method == Method::MC ? "mc" : method == Method::QMC ? "qmc" : "mlmc";
            EstimatorReport rep = run_method(method, cfg_.robustness_n, mesh, hierarchy, obs,
                                             Dependence::Dependent);
            table.rows.push_back({sweep, std::to_string(m), format_g(sigma_eta2), name,
                                  std::to_string(cfg_.robustness_n),
                                  format_g(rms_error(rep.replications, ref.ratio(), pick_ratio)),
                                  format_g(rep.cost_units)});
        }
    };
    for (double sigma : cfg_.noise_sweep) run_setting("noise", cfg_.observations, sigma);
    for (int m : cfg_.m_sweep) run_setting("m", m, cfg_.sigma_eta2);
    return table;
}

} // namespace ratio
