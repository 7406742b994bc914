#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ratio/parallel.hpp"
#include "ratio/studies.hpp"

namespace {

ratio::StudyConfig make_config(const std::string& config_file,
                               const std::vector<std::string>& overrides) {
    ratio::StudyConfig cfg;
    if (!config_file.empty()) cfg = ratio::StudyConfig::from_file(config_file);
    for (const auto& kv : overrides) {
        auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw CLI::ValidationError("--set", "expected key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return cfg;
}

void emit(ratio::StudyContext& ctx, const ratio::Table& table, const std::string& name) {
    std::string path = ctx.config().out_dir + "/" + name + ".csv";
    ratio::write_csv(table, ctx.metadata(), path);
    std::printf("wrote %s (%zu rows)\n", path.c_str(), table.rows.size());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"posterior-expectation ratio estimator studies"};
    app.require_subcommand(1);

    std::string config_file;
    std::vector<std::string> overrides;
    int threads = 1;
    app.add_option("-c,--config", config_file, "key=value configuration file");
    app.add_option("-s,--set", overrides, "override a configuration key (key=value)");
    app.add_option("-t,--threads", threads, "worker threads")->check(CLI::PositiveNumber);

    auto* gen = app.add_subcommand("generate-data", "synthesise and persist the data set");
    bool force = false;
    gen->add_flag("--force", force, "regenerate even if the data file exists");

    app.add_subcommand("h-study", "discretisation error of Q_h, Z_h and the ratio");
    app.add_subcommand("n-study", "sampling error of MC, QMC and MLMC on a fixed mesh");
    app.add_subcommand("cost-study", "cost to reach a target accuracy eps");
    app.add_subcommand("robustness-study", "noise-level and observation-count sweeps");

    auto* cbc = app.add_subcommand("cbc-build", "construct and save a lattice generating vector");
    std::int64_t cbc_points = 4096;
    int cbc_dim = 0;
    std::string cbc_out;
    cbc->add_option("-N,--points", cbc_points, "number of lattice points")
        ->check(CLI::Range(std::int64_t{2}, std::int64_t{1} << 30));
    cbc->add_option("-d,--dimension", cbc_dim, "number of components (default: KL truncation)");
    cbc->add_option("-o,--output", cbc_out, "output file")->required();

    auto* klc = app.add_subcommand("kl-cache", "tabulate the KL basis on a mesh and save it");
    int kl_mesh_n = 0;
    std::string kl_out;
    klc->add_option("-n,--mesh-n", kl_mesh_n, "cells per side (default: reference mesh)");
    klc->add_option("-o,--output", kl_out, "output file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        ratio::StudyConfig cfg = make_config(config_file, overrides);
        ratio::set_worker_threads(threads);

        if (gen->parsed()) {
            if (force) std::filesystem::remove(cfg.resolved_data_file());
            ratio::StudyContext ctx(cfg);
            const auto& obs = ctx.data();
            std::printf("data file %s: m=%d sigma_eta2=%g\n", cfg.resolved_data_file().c_str(),
                        obs.m, obs.sigma_eta2);
        } else if (app.got_subcommand("h-study")) {
            ratio::StudyContext ctx(cfg);
            emit(ctx, ctx.h_study(), "h_study");
        } else if (app.got_subcommand("n-study")) {
            ratio::StudyContext ctx(cfg);
            emit(ctx, ctx.n_study(), "n_study");
        } else if (app.got_subcommand("cost-study")) {
            ratio::StudyContext ctx(cfg);
            emit(ctx, ctx.cost_study(), "cost_study");
        } else if (app.got_subcommand("robustness-study")) {
            ratio::StudyContext ctx(cfg);
            emit(ctx, ctx.robustness_study(), "robustness_study");
        } else if (cbc->parsed()) {
            int dim = cbc_dim > 0 ? cbc_dim : cfg.kl_truncation;
            ratio::LatticeRule rule =
                ratio::cbc_construct(cbc_points, dim, ratio::WeightSpec{cfg.weight_exponent});
            ratio::save_generating_vector(rule, cbc_out);
            std::printf("wrote %s: N=%lld, %d components\n", cbc_out.c_str(),
                        static_cast<long long>(rule.n_points), rule.dimension());
        } else if (klc->parsed()) {
            int n = kl_mesh_n > 0 ? kl_mesh_n : cfg.reference_n;
            ratio::KlBasis basis(ratio::CovarianceSpec{cfg.sigma2, cfg.lambda, 1},
                                 cfg.kl_truncation, cfg.prior);
            basis.save(kl_out, ratio::build_mesh(n));
            std::printf("wrote %s: J=%d on mesh 1/%d\n", kl_out.c_str(), basis.truncation(), n);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
