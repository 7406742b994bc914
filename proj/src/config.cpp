#include "ratio/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ratio {

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
        if (!item.empty()) parts.push_back(item);
    return parts;
}

} // namespace

std::vector<std::int64_t> StudyConfig::n_grid() const {
    std::vector<std::int64_t> grid;
    for (int p = n_grid_min_log2; p <= n_grid_max_log2; ++p)
        grid.push_back(std::int64_t{1} << p);
    return grid;
}

std::vector<double> StudyConfig::eps_grid() const {
    std::vector<double> grid;
    double eps = eps_max;
    for (int i = 0; i < eps_count; ++i, eps /= std::sqrt(2.0)) grid.push_back(eps);
    return grid;
}

std::string StudyConfig::resolved_data_file() const {
    return data_file.empty() ? out_dir + "/observations.dat" : data_file;
}

std::map<std::string, std::string> StudyConfig::to_map() const {
    std::map<std::string, std::string> m;
    m["sigma2"] = format_double(sigma2);
    m["lambda"] = format_double(lambda);
    m["kl_truncation"] = std::to_string(kl_truncation);
    m["prior"] = prior == PriorKind::Gaussian ? "gaussian" : "uniform";
    m["reference_n"] = std::to_string(reference_n);
    m["observations"] = std::to_string(observations);
    m["sigma_eta2"] = format_double(sigma_eta2);
    m["truth_seed"] = std::to_string(truth_seed);
    m["noise_seed"] = std::to_string(noise_seed);
    m["study_seed"] = std::to_string(study_seed);
    m["h0_inverse"] = std::to_string(h0_inverse);
    m["levels"] = std::to_string(levels);
    m["study_mesh_n"] = std::to_string(study_mesh_n);
    m["cost_levels"] = std::to_string(cost_levels);
    m["cost_h0_inverse"] = std::to_string(cost_h0_inverse);
    m["solver_tol"] = format_double(solver_tol);
    m["n_grid_min_log2"] = std::to_string(n_grid_min_log2);
    m["n_grid_max_log2"] = std::to_string(n_grid_max_log2);
    m["independent"] = independent ? "1" : "0";
    m["replications"] = std::to_string(replications);
    m["qmc_shifts"] = std::to_string(qmc_shifts);
    m["lattice_file"] = lattice_file;
    m["weight_exponent"] = format_double(weight_exponent);
    m["reference_factor"] = format_double(reference_factor);
    m["eps_max"] = format_double(eps_max);
    m["eps_count"] = std::to_string(eps_count);
    {
        std::string s;
        for (double v : noise_sweep) s += (s.empty() ? "" : ",") + format_double(v);
        m["noise_sweep"] = s;
    }
    {
        std::string s;
        for (int v : m_sweep) s += (s.empty() ? "" : ",") + std::to_string(v);
        m["m_sweep"] = s;
    }
    m["robustness_n"] = std::to_string(robustness_n);
    m["out_dir"] = out_dir;
    m["data_file"] = data_file;
    return m;
}

std::string StudyConfig::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ull;
        }
    };
    for (const auto& [k, v] : to_map()) {
        mix(k);
        mix("=");
        mix(v);
        mix(";");
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void StudyConfig::set(const std::string& key, const std::string& value) {
    auto as_double = [&] { return std::stod(value); };
    auto as_int = [&] { return std::stoi(value); };
    auto as_u64 = [&] { return std::stoull(value); };
    if (key == "sigma2") sigma2 = as_double();
    else if (key == "lambda") lambda = as_double();
    else if (key == "kl_truncation") kl_truncation = as_int();
    else if (key == "prior") {
        if (value == "gaussian") prior = PriorKind::Gaussian;
        else if (value == "uniform") prior = PriorKind::Uniform;
        else throw std::invalid_argument("prior must be 'gaussian' or 'uniform', got " + value);
    }
    else if (key == "reference_n") reference_n = as_int();
    else if (key == "observations") observations = as_int();
    else if (key == "sigma_eta2") sigma_eta2 = as_double();
    else if (key == "truth_seed") truth_seed = as_u64();
    else if (key == "noise_seed") noise_seed = as_u64();
    else if (key == "study_seed") study_seed = as_u64();
    else if (key == "h0_inverse") h0_inverse = as_int();
    else if (key == "levels") levels = as_int();
    else if (key == "study_mesh_n") study_mesh_n = as_int();
    else if (key == "cost_levels") cost_levels = as_int();
    else if (key == "cost_h0_inverse") cost_h0_inverse = as_int();
    else if (key == "solver_tol") solver_tol = as_double();
    else if (key == "n_grid_min_log2") n_grid_min_log2 = as_int();
    else if (key == "n_grid_max_log2") n_grid_max_log2 = as_int();
    else if (key == "independent") independent = value == "1" || value == "true";
    else if (key == "replications") replications = as_int();
    else if (key == "qmc_shifts") qmc_shifts = as_int();
    else if (key == "lattice_file") lattice_file = value;
    else if (key == "weight_exponent") weight_exponent = as_double();
    else if (key == "reference_factor") reference_factor = as_double();
    else if (key == "eps_max") eps_max = as_double();
    else if (key == "eps_count") eps_count = as_int();
    else if (key == "noise_sweep") {
        noise_sweep.clear();
        for (const auto& part : split(value, ',')) noise_sweep.push_back(std::stod(part));
    }
    else if (key == "m_sweep") {
        m_sweep.clear();
        for (const auto& part : split(value, ',')) m_sweep.push_back(std::stoi(part));
    }
    else if (key == "robustness_n") robustness_n = std::stoll(value);
    else if (key == "out_dir") out_dir = value;
    else if (key == "data_file") data_file = value;
    else throw std::invalid_argument("unknown configuration key: " + key);
}

StudyConfig StudyConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    StudyConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected key=value");
        auto strip = [](std::string s) {
            auto b = s.find_first_not_of(" \t");
            auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        cfg.set(strip(line.substr(0, eq)), strip(line.substr(eq + 1)));
    }
    return cfg;
}

} // namespace ratio
