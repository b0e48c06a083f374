// bklab command-line driver.
//
//   bklab <command> --config <file> [--out <dir>] [--threads <k>] [--verbose]
//
// Exit codes: 0 success, 1 usage error, 2 configuration or condition error,
// 3 numerical failure.

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <iostream>
#include <sstream>

#include "bklab/bk.hpp"
#include "bklab/errors.hpp"
#include "bklab/harness.hpp"
#include "bklab/paths.hpp"

namespace fs = std::filesystem;
using namespace bklab;

namespace {

struct Options {
    std::string config;
    std::string out;
    std::size_t threads = 0;
    bool verbose = false;
};

fs::path out_dir(const Options& opt, const ExperimentConfig& config) {
    return opt.out.empty() ? fs::path(config.outputs) : fs::path(opt.out);
}

template <class Writer>
void save(const fs::path& path, Writer&& writer) {
    std::ostringstream s;
    writer(s);
    write_text_file(path, s.str());
}

void save_manifest(const fs::path& dir, const ExperimentConfig& config, const std::string& command,
                   std::span<const std::uint64_t> seeds, const nlohmann::json& extra = {}) {
    auto m = make_manifest(config, command, seeds);
    if (!extra.is_null()) m["result"] = extra;
    write_text_file(dir / "run_manifest.json", m.dump(2) + "\n");
}

void print_warnings(const std::vector<std::string>& warnings, bool verbose) {
    if (!verbose) return;
    for (const auto& w : warnings) fmt::print(std::cerr, "warning: {}\n", w);
}

int cmd_simulate(const Options& opt) {
    const auto config = load_config(opt.config);
    const auto model = build_model(config.model);
    const std::uint64_t seed = config.simulate.seed.value_or(config.master_seed);
    const auto path = simulate_path(model, config.simulate.n, seed);
    const auto dir = out_dir(opt, config);
    save(dir / "path.csv", [&](std::ostream& o) { write_path_dump(o, path); });
    const std::uint64_t seeds[] = {seed};
    save_manifest(dir, config, "simulate", seeds);
    fmt::print("simulated n = {} (K = {}) -> {}\n", path.n, path.horizon, (dir / "path.csv").string());
    return 0;
}

void print_fits(const RateScanResult& result) {
    for (const auto& f : result.fits) {
        fmt::print("  {:<22} slope {:+.4f}  ratio stability {:.4f} (vs {})\n", f.statistic, f.fit.slope,
                   f.fit.ratio_stability, f.normalizer);
    }
}

int cmd_scan(const Options& opt, const std::string& command) {
    const auto config = load_config(opt.config);
    RateScanResult result;
    const auto dir = out_dir(opt, config);
    if (command == "rate-scan") {
        result = run_rate_scan(config, opt.threads);
        save(dir / "rate_scan.csv", [&](std::ostream& o) { write_rate_scan_csv(o, result); });
        save(dir / "rate_summary.csv", [&](std::ostream& o) { write_summary_csv(o, result); });
        save(dir / "fit.csv", [&](std::ostream& o) { write_fit_csv(o, result); });
    } else if (command == "lil-scan") {
        result = run_lil_scan(config, opt.threads);
        save(dir / "lil_scan.csv", [&](std::ostream& o) { write_lil_scan_csv(o, result); });
        save(dir / "lil_summary.csv", [&](std::ostream& o) { write_summary_csv(o, result); });
        save(dir / "lil_fit.csv", [&](std::ostream& o) { write_fit_csv(o, result); });
    } else {
        result = run_increment_check(config, opt.threads);
        save(dir / "increments.csv", [&](std::ostream& o) { write_increments_csv(o, result); });
        save(dir / "increment_summary.csv", [&](std::ostream& o) { write_summary_csv(o, result); });
        save(dir / "increment_fit.csv", [&](std::ostream& o) { write_fit_csv(o, result); });
    }
    const auto seeds = enumerate_seeds(config.master_seed, config.n_grid, config.replicates);
    save_manifest(dir, config, command, seeds);
    fmt::print("{}: {} runs of {} -> {}\n", command, result.rows.size(), result.model_id, dir.string());
    print_fits(result);
    print_warnings(result.warnings, opt.verbose);
    return 0;
}

int cmd_covariance(const Options& opt) {
    const auto config = load_config(opt.config);
    const auto result = run_covariance_check(config, opt.threads);
    const auto dir = out_dir(opt, config);
    save(dir / "covariance.csv", [&](std::ostream& o) { write_covariance_check_csv(o, result); });
    save(dir / "covariance_grid.csv", [&](std::ostream& o) { write_covariance_csv(o, result.grid); });
    std::vector<std::uint64_t> seeds;
    for (std::size_t n : config.covariance.n) {
        const std::size_t grid[] = {n};
        const auto s = enumerate_seeds(config.master_seed, grid, config.covariance.replicates);
        seeds.insert(seeds.end(), s.begin(), s.end());
    }
    save_manifest(dir, config, "covariance-check", seeds);
    fmt::print("covariance-check: {}\n", result.model_id);
    for (const auto& r : result.rows) {
        fmt::print("  n {:>7} x {:+.3f}  var {:.5f} +- {:.5f}  gamma {:.5f} +- {:.5f}  {}\n", r.n, r.x,
                   r.replicate_var, r.replicate_var_se, r.gamma, r.gamma_se, r.agree ? "agree" : "DISAGREE");
    }
    print_warnings(result.warnings, opt.verbose);
    return 0;
}

int cmd_check_model(const Options& opt) {
    const auto config = load_config(opt.config);
    const auto check = check_model(config);
    nlohmann::json report;
    report["model_id"] = check.model_id;
    report["admissible"] = check.admissibility.admissible;
    report["admissibility"] = check.admissibility.message;
    if (check.admissibility.admissible_rho) {
        report["admissible_rho"] = {check.admissibility.admissible_rho->first,
                                    check.admissibility.admissible_rho->second};
    }
    report["smoothness_violation"] = check.smoothness.violation;
    report["smoothness_enforced"] = check.smoothness_enforced;
    report["sup_pdf"] = check.smoothness.sup_pdf;
    report["sup_abs_deriv"] = check.smoothness.sup_abs_deriv;
    report["sup_abs_deriv2"] = check.smoothness.sup_abs_deriv2;
    if (check.gamma) report["gamma"] = *check.gamma;
    report["gamma_estimated"] = check.gamma_estimated;
    if (check.nu_min) report["nu_min"] = *check.nu_min;
    report["failures"] = check.failures;
    report["notes"] = check.notes;
    report["ok"] = check.ok();
    const auto dir = out_dir(opt, config);
    save_manifest(dir, config, "check-model", {}, report);

    fmt::print("model {}\n", check.model_id);
    for (const auto& n : check.notes) fmt::print("  note: {}\n", n);
    if (check.smoothness.violation) {
        fmt::print("  smoothness: FLAGGED at x = {:.6g}\n", check.smoothness.violation_at);
    } else {
        fmt::print("  smoothness: ok (sup f = {:.6g})\n", check.smoothness.sup_pdf);
    }
    if (check.nu_min) fmt::print("  nu threshold: {:.6g}\n", *check.nu_min);
    for (const auto& f : check.failures) fmt::print(std::cerr, "condition failed: {}\n", f);
    return check.ok() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bahadur-Kiefer simulation laboratory for linear processes"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);

    Options opt;
    const char* commands[][2] = {
        {"simulate", "Simulate one path and write a path dump"},
        {"rate-scan", "Replicated residual scan with rate fits"},
        {"lil-scan", "Normalized sup statistics of the empirical process"},
        {"increment-check", "Increment modulus of the uniform empirical process"},
        {"covariance-check", "Replicate variance of sqrt(n) N_n against the limit covariance"},
        {"check-model", "Run the model condition gates"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", opt.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", opt.out, "Output directory (default: the config's outputs entry)");
        sub->add_option("--threads", opt.threads, "Worker threads, 0 = all cores")->default_val(0);
        sub->add_flag("--verbose", opt.verbose, "Print warnings");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 1;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        if (command == "simulate") return cmd_simulate(opt);
        if (command == "rate-scan" || command == "lil-scan" || command == "increment-check") {
            return cmd_scan(opt, command);
        }
        if (command == "covariance-check") return cmd_covariance(opt);
        if (command == "check-model") return cmd_check_model(opt);
    } catch (const ConfigError& e) {
        fmt::print(std::cerr, "config error: {}\n", e.what());
        return 2;
    } catch (const ConditionError& e) {
        fmt::print(std::cerr, "condition error: {}\n", e.what());
        return 2;
    } catch (const DomainError& e) {
        fmt::print(std::cerr, "domain error: {}\n", e.what());
        return 2;
    } catch (const ModelError& e) {
        fmt::print(std::cerr, "model error: {}\n", e.what());
        return 2;
    } catch (const NumericalError& e) {
        fmt::print(std::cerr, "numerical failure: {}\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        fmt::print(std::cerr, "error: {}\n", e.what());
        return 3;
    }
    return 1;
}
