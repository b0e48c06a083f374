// Acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance [--threads k] [--report file] [--strict]
//
// Exit status is 0 when every criterion was evaluated, whatever its verdict,
// and 1 with --strict when any criterion fails. Internal errors exit 2.

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "bklab/bk.hpp"
#include "bklab/decomp.hpp"
#include "bklab/empirical.hpp"
#include "bklab/errors.hpp"
#include "bklab/harness.hpp"
#include "bklab/paths.hpp"
#include "bklab/rng.hpp"
#include "quadrature.hpp"

using namespace bklab;
using nlohmann::json;

namespace {

constexpr std::uint64_t kMasterSeed = 20240611;

struct Verdict {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    std::function<Verdict()> run;
};

std::size_t g_threads = 0;

std::vector<std::size_t> rate_grid() {
    std::vector<std::size_t> g;
    for (int k = 12; k <= 18; ++k) g.push_back(std::size_t{1} << k);
    return g;
}

json iid_uniform_doc() {
    json d;
    d["version"] = 1;
    d["model"] = json::parse(R"({"innovation": "uniform", "coefficients": {"kind": "finite", "values": [1]},
                                 "rho": 0.45})");
    d["n_grid"] = rate_grid();
    d["replicates"] = 200;
    d["master_seed"] = kMasterSeed;
    return d;
}

json power_gaussian_doc() {
    json d;
    d["version"] = 1;
    d["model"] = json::parse(R"({"innovation": "normal", "coefficients": {"kind": "power_law", "tau": 3},
                                 "gamma1": 1, "gamma2": 1})");
    d["n_grid"] = rate_grid();
    d["replicates"] = 200;
    d["master_seed"] = kMasterSeed;
    d["nu"] = 2.5;
    return d;
}

// The two rate scans are shared by criteria 3, 4, 5, 7 and 8.
struct RateRuns {
    RateScanResult iid;
    RateScanResult power;
};

const RateRuns& rate_runs() {
    static const RateRuns runs = [] {
        ScanParts parts;
        parts.increments = true;
        RateRuns r;
        r.iid = run_scan(parse_config(iid_uniform_doc()), parts, g_threads);
        r.power = run_scan(parse_config(power_gaussian_doc()), parts, g_threads);
        return r;
    }();
    return runs;
}

const RateFit& find_fit(const RateScanResult& r, const std::string& statistic) {
    for (const auto& f : r.fits) {
        if (f.statistic == statistic) return f.fit;
    }
    throw StateError("missing fit for " + statistic);
}

Verdict decomposition_identity() {
    const std::vector<LinearProcessModel> models{
        LinearProcessModel::create(InnovationModel::normal(), CoefficientSequence::finite({1.0}), 0.3),
        LinearProcessModel::create(InnovationModel::normal(), CoefficientSequence::finite({1.0, 0.5}), 0.3),
        LinearProcessModel::create(InnovationModel::normal(), CoefficientSequence::power_law(3.0), 0.45),
        LinearProcessModel::create(InnovationModel::logistic(), CoefficientSequence::geometric(0.6), 0.3),
        LinearProcessModel::create(InnovationModel::student_t(5.0), CoefficientSequence::finite({1.0, -0.4, 0.2}),
                                   0.3),
    };
    const double xs[] = {-2.0, -0.5, 0.0, 0.7, 1.9};
    double worst = 0.0;
    for (std::size_t m = 0; m < models.size(); ++m) {
        const auto oracle = build_marginal_oracle(models[m], MarginalOracle::kDefaultMixturePoints, m);
        const auto path = simulate_path(models[m], 1000, derive_seed(kMasterSeed, 1000, m));
        const auto s = summarize(path.x);
        for (double x : xs) {
            const double beta = beta_process(s, oracle, x);
            const double check = decompose(path, oracle, x).beta_check;
            worst = std::max(worst, std::fabs(check - beta) / std::max(1.0, std::fabs(beta)));
        }
    }
    return {worst <= 1e-12, fmt::format("5 models x 5 points, n = 1000: max relative error {:.3g} (<= 1e-12)", worst)};
}

Verdict iid_degeneration() {
    const auto model = LinearProcessModel::create(InnovationModel::uniform(), CoefficientSequence::finite({1.0}), 0.45);
    const auto oracle = build_marginal_oracle(model, 1000, 0);
    const TruncatedOracleCache cache(model, oracle, 1000, 0);
    double max_n = 0.0;
    double max_yhat = 0.0;
    double max_resid = 0.0;
    for (std::uint64_t r = 0; r < 5; ++r) {
        const auto path = simulate_path(model, 4096, derive_seed(kMasterSeed, 4096, r));
        const auto pit = summarize(pit_transform(path, oracle));
        const auto s = summarize(path.x);
        for (double x : {0.1, 0.3, 0.5, 0.7, 0.9}) {
            max_n = std::max(max_n, std::fabs(decompose(path, oracle, x).N));
            for (double v : truncated_summands(truncate_path(path, model, model.rho()), cache, x)) {
                max_yhat = std::max(max_yhat, std::fabs(v));
            }
        }
        const auto series = residual_sup(s, pit, oracle, 0.05, 0.95, 4096);
        for (std::size_t i = 0; i < series.y_grid.size(); ++i) {
            const double y = series.y_grid[i];
            max_resid = std::max(max_resid, std::fabs(series.values[i] - (u_process(pit, y) - alpha_process(pit, y))));
        }
    }
    double max_gamma = 0.0;
    for (auto [x, y] : {std::pair{0.2, 0.2}, std::pair{0.2, 0.8}, std::pair{0.5, 0.5}}) {
        max_gamma = std::max(max_gamma, std::fabs(covariance_gamma(model, oracle, x, y, 8, 1000, kMasterSeed).gamma));
    }
    const bool pass = max_n == 0.0 && max_gamma == 0.0 && max_yhat == 0.0 && max_resid <= 1e-12;
    return {pass, fmt::format("max |N| {:.3g}, max |Gamma| {:.3g}, max |Y_hat| {:.3g}, max |R - (u - alpha)| {:.3g}",
                              max_n, max_gamma, max_yhat, max_resid)};
}

Verdict rate_scaling() {
    const auto& runs = rate_runs();
    bool pass = true;
    std::string detail;
    for (const auto* r : {&runs.iid, &runs.power}) {
        const auto& f = find_fit(*r, "sup_abs");
        const bool slope_ok = f.slope >= -0.30 && f.slope <= -0.20;
        const bool ratio_ok = f.ratio_stability <= 2.0;
        pass = pass && slope_ok && ratio_ok;
        detail += fmt::format("{}: slope {:+.4f} [{}], ratio {:.3f} [{}]; ", r->model_id, f.slope,
                              slope_ok ? "in [-0.30,-0.20]" : "outside [-0.30,-0.20]", f.ratio_stability,
                              ratio_ok ? "<= 2" : "> 2");
    }
    const double lo = rate_b(4096.0);
    const double hi = rate_b(262144.0);
    detail += fmt::format("b_n itself has slope {:+.4f} on this grid", std::log(hi / lo) / std::log(64.0));
    return {pass, detail};
}

Verdict pointwise_kiefer() {
    const auto& runs = rate_runs();
    bool pass = true;
    std::string detail;
    for (const auto* r : {&runs.iid, &runs.power}) {
        const auto& f = find_fit(*r, "pointwise_mid");
        pass = pass && f.ratio_stability <= 2.0;
        detail += fmt::format("{}: ratio {:.3f}; ", r->model_id, f.ratio_stability);
    }
    return {pass, detail + "bound 2"};
}

Verdict weighted_residual() {
    const auto& f = find_fit(rate_runs().power, "weighted_sup");
    const bool pass = f.slope >= -0.35 && f.slope <= -0.15 && f.ratio_stability <= 2.0;
    return {pass, fmt::format("{} with nu = 2.5: slope {:+.4f} (window [-0.35,-0.15]), ratio {:.3f} (<= 2)",
                              rate_runs().power.model_id, f.slope, f.ratio_stability)};
}

Verdict covariance_link() {
    json d;
    d["version"] = 1;
    d["model"] = json::parse(R"({"innovation": "normal", "coefficients": {"kind": "finite", "values": [1, 0.5]},
                                 "rho": 0.3})");
    d["n_grid"] = json::array({16384});
    d["master_seed"] = kMasterSeed;
    d["covariance"] = json::parse(R"({"x_grid": [-1, 0, 1], "n": [16384], "replicates": 1000,
                                      "lag_horizon": 32, "mc_draws": 20000, "seed": 20240611})");
    const auto result = run_covariance_check(parse_config(d), g_threads);
    bool pass = true;
    std::string detail;
    for (const auto& row : result.rows) {
        const auto quad = oracle::ma1_gamma(0.5, row.x, row.x).gamma;
        const bool quad_ok = std::fabs(row.gamma - quad) <= 3.0 * row.gamma_se;
        pass = pass && row.agree && quad_ok;
        detail += fmt::format("x={:+.0f}: var {:.5f}+-{:.5f} vs Gamma {:.5f}+-{:.5f} [{}], quadrature {:.5f} [{}]; ",
                              row.x, row.replicate_var, row.replicate_var_se, row.gamma, row.gamma_se,
                              row.agree ? "ok" : "off", quad, quad_ok ? "ok" : "off");
    }
    return {pass, detail};
}

Verdict lil_boundedness() {
    const auto& runs = rate_runs();
    bool pass = true;
    std::string detail;
    for (const auto* r : {&runs.iid, &runs.power}) {
        double lo = INFINITY;
        double hi = 0.0;
        for (const auto& s : r->summaries) {
            lo = std::min(lo, s.lil_beta_median);
            hi = std::max(hi, s.lil_beta_median);
        }
        const bool ok = hi <= 1.0 && hi / lo <= 1.5;
        pass = pass && ok;
        detail += fmt::format("{}: medians in [{:.3f}, {:.3f}], spread {:.3f}; ", r->model_id, lo, hi, hi / lo);
    }
    return {pass, detail + "bounds 1.0 and 1.5"};
}

Verdict increment_modulus_check() {
    const auto& runs = rate_runs();
    bool pass = true;
    std::string detail;
    for (const auto* r : {&runs.iid, &runs.power}) {
        std::vector<double> med;
        for (const auto& s : r->summaries) med.push_back(s.modulus_normalized_median);
        const double spread = spread_ratio(med);
        pass = pass && spread <= 2.0;
        detail += fmt::format("{}: spread {:.3f}; ", r->model_id, spread);
    }
    return {pass, detail + "bound 2"};
}

Verdict determinism() {
    json d;
    d["version"] = 1;
    d["model"] = json::parse(R"({"innovation": "normal", "coefficients": {"kind": "power_law", "tau": 3},
                                 "gamma1": 1, "gamma2": 1})");
    d["n_grid"] = json::array({2048, 4096, 8192});
    d["replicates"] = 4;
    d["master_seed"] = kMasterSeed;
    d["nu"] = 2.5;
    d["covariance"] = json::parse(R"({"x_grid": [-0.5, 0.5], "n": [512], "replicates": 40, "lag_horizon": 8,
                                      "mc_draws": 2000, "limit_draws": 200})");
    const auto config = parse_config(d);
    ScanParts parts;
    parts.increments = true;
    auto render = [&](std::size_t threads) {
        const auto r = run_scan(config, parts, threads);
        const auto c = run_covariance_check(config, threads);
        std::ostringstream out;
        write_rate_scan_csv(out, r);
        write_summary_csv(out, r);
        write_fit_csv(out, r);
        write_lil_scan_csv(out, r);
        write_increments_csv(out, r);
        write_covariance_check_csv(out, c);
        write_covariance_csv(out, c.grid);
        return out.str();
    };
    const auto one = render(1);
    const auto again = render(1);
    const auto four = render(4);
    const auto two = render(2);
    const bool pass = one == again && one == four && one == two;
    return {pass, fmt::format("{} bytes of CSV; threads 1/1/2/4 {}", one.size(), pass ? "identical" : "DIFFER")};
}

Verdict condition_gates() {
    auto doc = [](const std::string& model) {
        json d;
        d["version"] = 1;
        d["model"] = json::parse(model);
        d["n_grid"] = json::array({1024, 2048, 4096});
        return d;
    };
    std::vector<std::string> misses;
    auto expect_throw = [&](const json& d, const std::string& label) {
        try {
            check_model(parse_config(d));
            misses.push_back(label);
        } catch (const ConditionError&) {
        } catch (const DomainError&) {
        }
    };
    expect_throw(doc(R"({"innovation": "normal", "coefficients": {"kind": "power_law", "tau": 2.5}, "rho": 0.45})"),
                 "tau = 2.5");
    for (double rho : {0.0, 0.5, 0.75, -0.2}) {
        auto d = doc(R"({"innovation": "normal", "coefficients": {"kind": "finite", "values": [1, 0.5]}})");
        d["model"]["rho"] = rho;
        expect_throw(d, fmt::format("rho = {}", rho));
    }
    auto nu = doc(R"({"innovation": "normal", "coefficients": {"kind": "finite", "values": [1, 0.5]}, "rho": 0.3,
                      "gamma1": 1, "gamma2": 1})");
    for (double v : {2.0, 1.5}) {
        nu["nu"] = v;
        if (check_model(parse_config(nu)).ok()) misses.push_back(fmt::format("nu = {}", v));
    }
    nu["nu"] = 2.5;
    if (!check_model(parse_config(nu)).ok()) misses.push_back("nu = 2.5 wrongly rejected");
    const auto laplace = check_model(parse_config(
        doc(R"({"innovation": "laplace", "coefficients": {"kind": "finite", "values": [1, 0.5]}, "rho": 0.3})")));
    if (!laplace.smoothness.violation || laplace.ok()) misses.push_back("laplace");
    const auto tau3 = check_model(parse_config(
        doc(R"({"innovation": "normal", "coefficients": {"kind": "power_law", "tau": 3}, "rho": 0.45})")));
    if (!tau3.ok()) misses.push_back("tau = 3 wrongly rejected");
    std::string detail = "tau = 2.5, rho outside (0, 1/2), nu <= nu_min and Laplace smoothness all gated";
    if (!misses.empty()) {
        detail = "not gated:";
        for (const auto& m : misses) detail += " " + m;
    }
    return {misses.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bklab acceptance criteria"};
    std::string report;
    bool strict = false;
    app.add_option("--threads", g_threads, "Worker threads, 0 = all cores");
    app.add_option("--report", report, "Also write the verdict lines to this file");
    app.add_flag("--strict", strict, "Exit 1 when any criterion fails");
    CLI11_PARSE(app, argc, argv);

    const std::vector<Criterion> criteria{
        {1, "decomposition identity", decomposition_identity},
        {2, "i.i.d. degeneration", iid_degeneration},
        {3, "rate scaling", rate_scaling},
        {4, "pointwise Kiefer scaling", pointwise_kiefer},
        {5, "weighted residual", weighted_residual},
        {6, "covariance link", covariance_link},
        {7, "LIL boundedness", lil_boundedness},
        {8, "increment modulus", increment_modulus_check},
        {9, "determinism", determinism},
        {10, "condition gates", condition_gates},
    };

    std::ostringstream lines;
    int failures = 0;
    bool errored = false;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            // A throwing criterion is a harness error: report it and keep going.
            v = {false, fmt::format("error: {}", e.what())};
            errored = true;
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const auto line =
            fmt::format("[{}] {:>2} {}: {} ({:.1f} s)\n", v.pass ? "PASS" : "FAIL", c.id, c.name, v.detail, secs);
        std::cout << line << std::flush;
        lines << line;
        if (!v.pass) ++failures;
    }
    const auto summary = fmt::format("{} of {} criteria passed\n", criteria.size() - failures, criteria.size());
    std::cout << summary;
    lines << summary;
    if (!report.empty()) std::ofstream(report) << lines.str();
    if (errored) return 2;
    return strict && failures > 0 ? 1 : 0;
}
