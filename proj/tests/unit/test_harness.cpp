#include <algorithm>
#include <cmath>
#include <gtest/gtest.h>
#include <sstream>
#include <stdexcept>

#include "bklab/bk.hpp"
#include "bklab/errors.hpp"
#include "bklab/harness.hpp"
#include "bklab/rng.hpp"

namespace bklab {
namespace {

using nlohmann::json;

json base_doc() {
    return json::parse(R"({
        "version": 1,
        "model": {"innovation": "normal", "coefficients": {"kind": "finite", "values": [1, 0.5]}, "rho": 0.3,
                  "gamma1": 1, "gamma2": 1},
        "n_grid": [64, 128, 256], "replicates": 5, "master_seed": 123, "nu": 2.5
    })");
}

std::string csv(const RateScanResult& r, void (*writer)(std::ostream&, const RateScanResult&)) {
    std::ostringstream s;
    writer(s, r);
    return s.str();
}

TEST(Seeds, FrozenDerivation) {
    EXPECT_EQ(splitmix64(0), 0xe220a8397b1dcdafULL);
    EXPECT_EQ(derive_seed(0, 0, 0), 0xd66f3b181c8b7998ULL);
    EXPECT_EQ(derive_seed(20240611, 4096, 199), 0xd164bddc5d58c5b2ULL);
    UniformStream s(5489);
    EXPECT_EQ(s.next_bits(), 14514284786278117030ULL);
    UniformStream u(5489);
    EXPECT_EQ(u.next(), (static_cast<double>(14514284786278117030ULL >> 11) + 0.5) * 0x1.0p-53);
}

TEST(Seeds, DistinctAcrossGrid) {
    const std::vector<std::size_t> grid{4096, 8192, 16384, 32768, 65536, 131072, 262144};
    const auto seeds = enumerate_seeds(20240611, grid, 1000);
    EXPECT_EQ(seeds.size(), 7000u);
    auto sorted = seeds;
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(std::adjacent_find(sorted.begin(), sorted.end()), sorted.end());
}

TEST(ParallelFor, CoversAndRethrowsLowestIndex) {
    std::vector<int> hit(100, 0);
    parallel_for(100, 4, [&](std::size_t i) { hit[i] += 1; });
    EXPECT_EQ(std::count(hit.begin(), hit.end(), 1), 100);
    try {
        parallel_for(50, 4, [](std::size_t i) {
            if (i == 7 || i == 31) throw std::runtime_error(std::to_string(i));
        });
        FAIL() << "no exception";
    } catch (const std::runtime_error& e) {
        EXPECT_STREQ(e.what(), "7");
    }
    EXPECT_GE(resolve_threads(0), 1u);
    EXPECT_EQ(resolve_threads(3), 3u);
}

TEST(Fit, ExactPowerLaws) {
    std::vector<std::pair<double, double>> quarter, half, scaled;
    for (double n : {64.0, 256.0, 4096.0, 65536.0}) {
        quarter.emplace_back(n, std::pow(n, -0.25));
        half.emplace_back(n, std::pow(n, -0.5));
        scaled.emplace_back(n, 3.0 * rate_b(n));
    }
    const auto q = fit_rate(quarter);
    EXPECT_NEAR(q.slope, -0.25, 1e-12);
    EXPECT_NEAR(q.intercept, 0.0, 1e-12);
    EXPECT_NEAR(fit_rate(half).slope, -0.5, 1e-12);
    EXPECT_NEAR(fit_rate(scaled).ratio_stability, 1.0, 1e-12);
    EXPECT_THROW(fit_rate(std::span(quarter).first(2)), ConfigError);
    quarter[1].second = 0.0;
    EXPECT_THROW(fit_rate(quarter), NumericalError);
}

TEST(Fit, MedianAndSpread) {
    EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
    EXPECT_EQ(median({4.0, 1.0, 3.0, 2.0}), 2.5);
    const std::vector<double> v{1.0, 1.5, 2.0};
    EXPECT_EQ(spread_ratio(v), 2.0);
    EXPECT_THROW(median({}), DomainError);
}

TEST(Config, ParsesAndDefaults) {
    const auto c = parse_config(base_doc());
    EXPECT_EQ(c.n_grid.size(), 3u);
    EXPECT_EQ(c.replicates, 5u);
    EXPECT_EQ(c.a, 0.05);
    EXPECT_EQ(c.b, 0.95);
    EXPECT_EQ(c.refine, 4u);
    ASSERT_TRUE(c.nu.has_value());
    EXPECT_EQ(*c.nu, 2.5);
    EXPECT_EQ(c.model.innovation.family, "normal");

    auto doc = base_doc();
    doc["model"]["coefficients"] = json::parse(R"({"kind": "power_law", "tau": 3})");
    doc["model"].erase("rho");
    const auto model = build_model(parse_config(doc).model);
    EXPECT_NEAR(model.rho(), 0.5 * (0.4 + 0.5), 1e-15);
}

TEST(Config, RejectsMalformed) {
    auto unknown = base_doc();
    unknown["replicas"] = 3;
    EXPECT_THROW(parse_config(unknown), ConfigError);
    auto nested = base_doc();
    nested["model"]["coefficients"]["taus"] = 3;
    EXPECT_THROW(parse_config(nested), ConfigError);
    auto order = base_doc();
    order["n_grid"] = json::array({128, 64, 256});
    EXPECT_THROW(parse_config(order), ConfigError);
    auto small = base_doc();
    small["n_grid"] = json::array({8, 64, 256});
    EXPECT_THROW(parse_config(small), ConfigError);
    auto version = base_doc();
    version["version"] = 2;
    EXPECT_THROW(parse_config(version), ConfigError);
    auto family = base_doc();
    family["model"]["innovation"] = "cauchy";
    EXPECT_THROW(build_innovation(parse_config(family).model.innovation), ConfigError);
    auto interval = base_doc();
    interval["interval"] = json::array({0.9, 0.1});
    EXPECT_THROW(parse_config(interval), ConfigError);
    auto norho = base_doc();
    norho["model"].erase("rho");
    EXPECT_THROW(build_model(parse_config(norho).model), ConfigError);
}

TEST(Gates, PowerLawBoundary) {
    auto doc = base_doc();
    doc["model"]["coefficients"] = json::parse(R"({"kind": "power_law", "tau": 2.5})");
    doc["model"]["rho"] = 0.45;
    EXPECT_THROW(check_model(parse_config(doc)), ConditionError);
    doc["model"]["coefficients"]["tau"] = 3.0;
    EXPECT_TRUE(check_model(parse_config(doc)).ok());
    doc["model"]["rho"] = 0.2;
    EXPECT_THROW(check_model(parse_config(doc)), ConditionError);
}

TEST(Gates, RhoRange) {
    for (double rho : {0.0, 0.5, 0.7, -0.1}) {
        auto doc = base_doc();
        doc["model"]["rho"] = rho;
        EXPECT_THROW(check_model(parse_config(doc)), DomainError) << rho;
    }
}

TEST(Gates, NuThreshold) {
    auto doc = base_doc();
    doc["nu"] = 2.0;
    const auto c = check_model(parse_config(doc));
    EXPECT_FALSE(c.ok());
    ASSERT_TRUE(c.nu_min.has_value());
    EXPECT_EQ(*c.nu_min, 2.0);
    EXPECT_THROW(require_model(parse_config(doc)), ConditionError);
    doc["nu"] = 2.5;
    EXPECT_TRUE(check_model(parse_config(doc)).ok());
}

TEST(Gates, EstimatedGamma) {
    auto doc = base_doc();
    doc["model"].erase("gamma1");
    doc["model"].erase("gamma2");
    const auto c = check_model(parse_config(doc));
    EXPECT_TRUE(c.gamma_estimated);
    ASSERT_TRUE(c.gamma.has_value());
    EXPECT_GT(*c.gamma, 0.9);
}

TEST(Gates, LaplaceSmoothness) {
    auto doc = base_doc();
    doc["model"]["innovation"] = "laplace";
    doc.erase("nu");
    const auto dependent = check_model(parse_config(doc));
    EXPECT_TRUE(dependent.smoothness.violation);
    EXPECT_TRUE(dependent.smoothness_enforced);
    EXPECT_FALSE(dependent.ok());

    doc["model"]["coefficients"]["values"] = json::array({1});
    const auto iid = check_model(parse_config(doc));
    EXPECT_TRUE(iid.smoothness.violation);
    EXPECT_FALSE(iid.smoothness_enforced);
    EXPECT_TRUE(iid.ok());
    EXPECT_FALSE(iid.notes.empty());
}

TEST(Scan, ShapeAndDeterminism) {
    auto doc = base_doc();
    // The default increment window needs n d_n / log n >= 10, which 64 misses.
    doc["n_grid"] = {2048, 4096, 8192};
    const auto c = parse_config(doc);
    ScanParts parts;
    parts.increments = true;
    const auto a = run_scan(c, parts, 1);
    const auto b = run_scan(c, parts, 3);
    ASSERT_EQ(a.rows.size(), 15u);
    EXPECT_EQ(csv(a, write_rate_scan_csv), csv(b, write_rate_scan_csv));
    EXPECT_EQ(csv(a, write_summary_csv), csv(b, write_summary_csv));
    EXPECT_EQ(csv(a, write_fit_csv), csv(b, write_fit_csv));
    EXPECT_EQ(csv(a, write_increments_csv), csv(b, write_increments_csv));
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        const auto& r = a.rows[i];
        EXPECT_EQ(r.n, c.n_grid[i / 5]);
        EXPECT_EQ(r.replicate, i % 5);
        EXPECT_EQ(r.seed, derive_seed(c.master_seed, r.n, r.replicate));
        EXPECT_FALSE(std::isnan(r.weighted_sup));
        EXPECT_NEAR(r.lil_beta, r.lil_u, 1e-12);
    }
    // Per-n aggregates are recomputable from the rows.
    for (std::size_t k = 0; k < c.n_grid.size(); ++k) {
        std::vector<double> sup;
        for (const auto& r : a.rows) {
            if (r.n == c.n_grid[k]) sup.push_back(r.sup_abs);
        }
        EXPECT_EQ(a.summaries[k].sup_abs_median, median(sup));
        EXPECT_EQ(a.summaries[k].sup_abs_max, *std::max_element(sup.begin(), sup.end()));
    }
    const auto fit = std::find_if(a.fits.begin(), a.fits.end(), [](const NamedFit& f) { return f.statistic == "sup_abs"; });
    ASSERT_NE(fit, a.fits.end());
}

TEST(Scan, SingleRow) {
    auto doc = base_doc();
    doc["n_grid"] = json::array({16});
    doc["replicates"] = 1;
    const auto c = parse_config(doc);
    const auto a = run_rate_scan(c, 1);
    const auto b = run_rate_scan(c, 1);
    EXPECT_EQ(a.rows.size(), 1u);
    EXPECT_TRUE(a.fits.empty());
    EXPECT_EQ(csv(a, write_rate_scan_csv), csv(b, write_rate_scan_csv));
}

TEST(Scan, AbortsOnFailedGate) {
    auto doc = base_doc();
    doc["nu"] = 1.0;
    EXPECT_THROW(run_rate_scan(parse_config(doc), 1), ConditionError);
}

TEST(Increment, WindowRules) {
    auto c = parse_config(base_doc());
    EXPECT_DOUBLE_EQ(increment_window(c, 4096), rate_lambda(4096.0));
    auto doc = base_doc();
    doc["increment"] = json::parse(R"({"d_n": 1.5})");
    EXPECT_THROW(increment_window(parse_config(doc), 4096), ConfigError);
    doc["increment"] = json::parse(R"({"d_n": 1e-6})");
    EXPECT_THROW(increment_window(parse_config(doc), 4096), ConfigError);
    doc["increment"] = json::parse(R"({"d_n": 0.2})");
    EXPECT_DOUBLE_EQ(increment_window(parse_config(doc), 4096), 0.2);
}

TEST(Covariance, IidBothSidesZero) {
    auto doc = base_doc();
    doc["model"]["coefficients"]["values"] = json::array({1});
    doc["covariance"] = json::parse(R"({"x_grid": [-1, 0, 1], "n": 1024, "replicates": 50, "mc_draws": 1000,
                                         "lag_horizon": 4, "limit_draws": 100})");
    const auto r = run_covariance_check(parse_config(doc), 1);
    ASSERT_EQ(r.rows.size(), 3u);
    for (const auto& row : r.rows) {
        EXPECT_EQ(row.gamma, 0.0);
        EXPECT_EQ(row.replicate_var, 0.0);
        EXPECT_TRUE(row.agree);
    }
}

TEST(Output, ManifestAndCsvHeaders) {
    const auto c = parse_config(base_doc());
    const auto seeds = enumerate_seeds(c.master_seed, c.n_grid, c.replicates);
    const auto m = make_manifest(c, "rate-scan", seeds);
    EXPECT_EQ(m["command"], "rate-scan");
    EXPECT_EQ(m["master_seed"], 123u);
    EXPECT_EQ(m["derived_seeds"].size(), 15u);
    EXPECT_EQ(m["config"], base_doc());
    EXPECT_EQ(m["version"], kToolVersion);
    EXPECT_TRUE(m.contains("seed_rule"));
    RateScanResult empty;
    EXPECT_EQ(csv(empty, write_rate_scan_csv), "n,replicate,seed,sup_abs,weighted_sup,pointwise_mid,lil_beta,lil_u\n");
    EXPECT_EQ(csv(empty, write_fit_csv).rfind("statistic,normalizer,slope,intercept,ratio_stability", 0), 0u);
}

TEST(Output, LoadConfigFromDisk) {
    const auto c = load_config(std::string(BKLAB_TEST_DATA) + "/small_scan.json");
    EXPECT_EQ(c.master_seed, 99u);
    EXPECT_THROW(load_config(std::string(BKLAB_TEST_DATA) + "/bad_key.json"), ConfigError);
    EXPECT_THROW(load_config(std::string(BKLAB_TEST_DATA) + "/missing.json"), ConfigError);
}

}  // namespace
}  // namespace bklab
