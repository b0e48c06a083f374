#include <fmt/format.h>
#include <fmt/ostream.h>
#include <fstream>
#include <ostream>

#include "bklab/errors.hpp"
#include "bklab/harness.hpp"
#include "bklab/kernels.hpp"

namespace bklab {
namespace {

std::string num(double v) { return fmt::format("{:.17g}", v); }

}  // namespace

void write_rate_scan_csv(std::ostream& out, const RateScanResult& result) {
    fmt::print(out, "n,replicate,seed,sup_abs,weighted_sup,pointwise_mid,lil_beta,lil_u\n");
    for (const auto& r : result.rows) {
        fmt::print(out, "{},{},{},{},{},{},{},{}\n", r.n, r.replicate, r.seed, num(r.sup_abs), num(r.weighted_sup),
                   num(r.pointwise_mid), num(r.lil_beta), num(r.lil_u));
    }
}

void write_lil_scan_csv(std::ostream& out, const RateScanResult& result) {
    fmt::print(out, "n,replicate,seed,lil_beta,lil_u\n");
    for (const auto& r : result.rows) {
        fmt::print(out, "{},{},{},{},{}\n", r.n, r.replicate, r.seed, num(r.lil_beta), num(r.lil_u));
    }
}

void write_increments_csv(std::ostream& out, const RateScanResult& result) {
    fmt::print(out, "n,replicate,seed,d_n,modulus,normalized\n");
    for (const auto& r : result.rows) {
        fmt::print(out, "{},{},{},{},{},{}\n", r.n, r.replicate, r.seed, num(r.d_n), num(r.modulus),
                   num(r.modulus_normalized));
    }
}

void write_summary_csv(std::ostream& out, const RateScanResult& result) {
    fmt::print(out,
               "n,replicates,sup_abs_mean,sup_abs_median,sup_abs_max,weighted_median,weighted_max,"
               "pointwise_abs_median,lil_beta_median,lil_beta_max,lil_u_median,lil_u_max,"
               "modulus_normalized_median,refine_rel_change\n");
    for (const auto& s : result.summaries) {
        fmt::print(out, "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", s.n, s.replicates, num(s.sup_abs_mean),
                   num(s.sup_abs_median), num(s.sup_abs_max), num(s.weighted_median), num(s.weighted_max),
                   num(s.pointwise_abs_median), num(s.lil_beta_median), num(s.lil_beta_max), num(s.lil_u_median),
                   num(s.lil_u_max), num(s.modulus_normalized_median), num(s.refine_rel_change));
    }
}

void write_fit_csv(std::ostream& out, const RateScanResult& result) {
    fmt::print(out, "statistic,normalizer,slope,intercept,ratio_stability\n");
    for (const auto& f : result.fits) {
        fmt::print(out, "{},{},{},{},{}\n", f.statistic, f.normalizer, num(f.fit.slope), num(f.fit.intercept),
                   num(f.fit.ratio_stability));
    }
}

void write_covariance_check_csv(std::ostream& out, const CovarianceCheckResult& result) {
    fmt::print(out,
               "n,x,replicates,replicate_var,replicate_var_se,gamma,gamma_se,L,mc_draws,horizon_warning,agree,"
               "qq_max_dev\n");
    for (const auto& r : result.rows) {
        fmt::print(out, "{},{},{},{},{},{},{},{},{},{},{},{}\n", r.n, num(r.x), r.replicates, num(r.replicate_var),
                   num(r.replicate_var_se), num(r.gamma), num(r.gamma_se), r.lag_horizon, r.mc_draws,
                   r.gamma_horizon_warning ? 1 : 0, r.agree ? 1 : 0, num(r.qq_max_dev));
    }
}

nlohmann::json make_manifest(const ExperimentConfig& config, const std::string& command,
                             std::span<const std::uint64_t> seeds) {
    nlohmann::json m;
    m["tool"] = "bklab";
    m["version"] = kToolVersion;
    m["command"] = command;
    m["kernel_isa"] = std::string(kernels::isa_name(kernels::active_isa()));
    m["config"] = config.source;
    m["seed_rule"] =
        "derive_seed(master, n, r) = splitmix64(splitmix64(splitmix64(master) ^ n) ^ (r + 0x632BE59BD9B4E019)); "
        "splitmix64(z): z += 0x9E3779B97F4A7C15; z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9; "
        "z = (z ^ (z >> 27)) * 0x94D049BB133111EB; return z ^ (z >> 31); all arithmetic mod 2^64";
    m["uniform_rule"] = "mt19937_64 seeded with the derived seed; u = ((x >> 11) + 0.5) * 2^-53";
    m["master_seed"] = config.master_seed;
    m["derived_seeds"] = std::vector<std::uint64_t>(seeds.begin(), seeds.end());
    return m;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError(fmt::format("cannot write {}", path.string()));
    out << text;
    if (!out) throw ConfigError(fmt::format("write failed for {}", path.string()));
}

}  // namespace bklab
