#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <set>
#include <sstream>

#include "bklab/bk.hpp"
#include "bklab/errors.hpp"
#include "bklab/harness.hpp"

namespace bklab {
namespace {

using nlohmann::json;

void require_object(const json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(fmt::format("{}: expected an object", where));
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
    for (const auto& [key, _] : j.items()) {
        if (!known.count(key)) throw ConfigError(fmt::format("{}: unknown key '{}'", where, key));
    }
}

template <class T>
T get(const json& j, const std::string& key, const std::string& where) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("{}.{}: {}", where, key, e.what()));
    }
}

template <class T>
void read(const json& j, const std::string& key, const std::string& where, T& out) {
    if (j.contains(key)) out = get<T>(j, key, where);
}

template <class T>
void read_opt(const json& j, const std::string& key, const std::string& where, std::optional<T>& out) {
    if (j.contains(key) && !j.at(key).is_null()) out = get<T>(j, key, where);
}

InnovationSpec parse_innovation(const json& j) {
    const std::string where = "model.innovation";
    InnovationSpec s;
    if (j.is_string()) {
        s.family = j.get<std::string>();
        return s;
    }
    require_object(j, where);
    reject_unknown(j, {"family", "scale", "lower", "upper", "rate", "dof"}, where);
    s.family = get<std::string>(j, "family", where);
    read(j, "scale", where, s.scale);
    read(j, "lower", where, s.lower);
    read(j, "upper", where, s.upper);
    read(j, "rate", where, s.rate);
    read(j, "dof", where, s.dof);
    return s;
}

CoefficientSpec parse_coefficients(const json& j) {
    const std::string where = "model.coefficients";
    require_object(j, where);
    reject_unknown(j, {"kind", "tau", "r", "values"}, where);
    CoefficientSpec s;
    s.kind = get<std::string>(j, "kind", where);
    read(j, "tau", where, s.tau);
    read(j, "r", where, s.r);
    read(j, "values", where, s.values);
    return s;
}

ModelSpec parse_model(const json& j) {
    const std::string where = "model";
    require_object(j, where);
    reject_unknown(j, {"innovation", "coefficients", "rho", "gamma1", "gamma2", "trunc_tol", "oracle"}, where);
    ModelSpec s;
    if (!j.contains("innovation")) throw ConfigError("model.innovation is required");
    if (!j.contains("coefficients")) throw ConfigError("model.coefficients is required");
    s.innovation = parse_innovation(j.at("innovation"));
    s.coefficients = parse_coefficients(j.at("coefficients"));
    read_opt(j, "rho", where, s.rho);
    read_opt(j, "gamma1", where, s.gamma1);
    read_opt(j, "gamma2", where, s.gamma2);
    read(j, "trunc_tol", where, s.trunc_tol);
    if (j.contains("oracle")) {
        const auto& o = j.at("oracle");
        require_object(o, "model.oracle");
        reject_unknown(o, {"mixture_points", "seed"}, "model.oracle");
        read(o, "mixture_points", "model.oracle", s.mixture_points);
        read(o, "seed", "model.oracle", s.oracle_seed);
    }
    return s;
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
    require_object(doc, "config");
    reject_unknown(doc,
                   {"version", "model", "n_grid", "replicates", "master_seed", "interval", "nu", "refine",
                    "increment", "covariance", "simulate", "outputs"},
                   "config");
    ExperimentConfig c;
    c.source = doc;
    read(doc, "version", "config", c.version);
    if (c.version != 1) throw ConfigError(fmt::format("unsupported config version {}", c.version));
    if (!doc.contains("model")) throw ConfigError("config.model is required");
    c.model = parse_model(doc.at("model"));
    read(doc, "n_grid", "config", c.n_grid);
    read(doc, "replicates", "config", c.replicates);
    read(doc, "master_seed", "config", c.master_seed);
    if (doc.contains("interval")) {
        const auto iv = get<std::vector<double>>(doc, "interval", "config");
        if (iv.size() != 2) throw ConfigError("config.interval must have two entries");
        c.a = iv[0];
        c.b = iv[1];
    }
    read_opt(doc, "nu", "config", c.nu);
    read(doc, "refine", "config", c.refine);
    read(doc, "outputs", "config", c.outputs);

    if (doc.contains("increment")) {
        const auto& j = doc.at("increment");
        require_object(j, "increment");
        reject_unknown(j, {"d_n"}, "increment");
        if (j.contains("d_n")) {
            const auto& d = j.at("d_n");
            if (d.is_string()) {
                c.increment.rule = d.get<std::string>();
                if (c.increment.rule != "lambda") {
                    throw ConfigError(fmt::format("increment.d_n: unknown rule '{}'", c.increment.rule));
                }
            } else if (d.is_number()) {
                c.increment.rule = "custom";
                c.increment.custom = d.get<double>();
            } else {
                throw ConfigError("increment.d_n must be \"lambda\" or a number");
            }
        }
    }
    if (doc.contains("covariance")) {
        const auto& j = doc.at("covariance");
        const std::string where = "covariance";
        require_object(j, where);
        reject_unknown(j, {"x_grid", "n", "replicates", "lag_horizon", "mc_draws", "seed", "limit_draws"}, where);
        read(j, "x_grid", where, c.covariance.x_grid);
        if (j.contains("n")) {
            if (j.at("n").is_array()) {
                c.covariance.n = get<std::vector<std::size_t>>(j, "n", where);
            } else {
                c.covariance.n = {get<std::size_t>(j, "n", where)};
            }
        }
        read(j, "replicates", where, c.covariance.replicates);
        read(j, "lag_horizon", where, c.covariance.lag_horizon);
        read(j, "mc_draws", where, c.covariance.mc_draws);
        read(j, "seed", where, c.covariance.seed);
        read(j, "limit_draws", where, c.covariance.limit_draws);
    }
    if (doc.contains("simulate")) {
        const auto& j = doc.at("simulate");
        require_object(j, "simulate");
        reject_unknown(j, {"n", "seed"}, "simulate");
        read(j, "n", "simulate", c.simulate.n);
        read_opt(j, "seed", "simulate", c.simulate.seed);
    }

    if (c.replicates < 1) throw ConfigError("replicates must be at least 1");
    for (std::size_t i = 0; i < c.n_grid.size(); ++i) {
        if (c.n_grid[i] < 16) throw ConfigError(fmt::format("n_grid entry {} below 16", c.n_grid[i]));
        if (i > 0 && c.n_grid[i] <= c.n_grid[i - 1]) throw ConfigError("n_grid must be strictly increasing");
    }
    if (!(c.a >= 0.0 && c.a < c.b && c.b <= 1.0)) {
        throw ConfigError(fmt::format("interval ({}, {}) must satisfy 0 <= a < b <= 1", c.a, c.b));
    }
    if (c.nu && !(*c.nu >= 0.0)) throw ConfigError("nu must be nonnegative");
    if (c.simulate.n < 1) throw ConfigError("simulate.n must be at least 1");
    if (c.covariance.replicates < 2) throw ConfigError("covariance.replicates must be at least 2");
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot open config file {}", path.string()));
    json doc;
    try {
        doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
    }
    return parse_config(doc);
}

InnovationModel build_innovation(const InnovationSpec& s) {
    if (s.family == "normal" || s.family == "gaussian") return InnovationModel::normal(s.scale);
    if (s.family == "logistic") return InnovationModel::logistic(s.scale);
    if (s.family == "laplace") return InnovationModel::laplace(s.scale);
    if (s.family == "uniform") return InnovationModel::uniform(s.lower, s.upper);
    if (s.family == "exponential") return InnovationModel::exponential(s.rate);
    if (s.family == "student_t") return InnovationModel::student_t(s.dof, s.scale);
    throw ConfigError(fmt::format("unknown innovation family '{}'", s.family));
}

CoefficientSequence build_coefficients(const CoefficientSpec& s) {
    if (s.kind == "power_law") return CoefficientSequence::power_law(s.tau);
    if (s.kind == "geometric") return CoefficientSequence::geometric(s.r);
    if (s.kind == "finite") return CoefficientSequence::finite(s.values);
    throw ConfigError(fmt::format("unknown coefficient kind '{}'", s.kind));
}

LinearProcessModel build_model(const ModelSpec& s) {
    auto innovations = build_innovation(s.innovation);
    auto coefficients = build_coefficients(s.coefficients);
    double rho = 0.0;
    if (s.rho) {
        rho = *s.rho;
    } else if (coefficients.kind() == CoefficientKind::PowerLaw) {
        rho = 0.5 * (2.0 / (2.0 * coefficients.tau() - 1.0) + 0.5);
    } else {
        throw ConfigError(fmt::format("model.rho is required for {} weights", coefficients.describe()));
    }
    return LinearProcessModel::create(std::move(innovations), std::move(coefficients), rho, s.gamma1, s.gamma2,
                                      s.trunc_tol);
}

ModelCheck check_model(const ExperimentConfig& config) {
    const auto model = build_model(config.model);
    ModelCheck check;
    check.model_id = model.id();

    check.admissibility = check_dependence_condition(model.coefficients(), model.rho());
    if (!check.admissibility.admissible) check.failures.push_back(check.admissibility.message);
    check.notes.push_back(check.admissibility.message);

    const auto& innov = model.innovations();
    check.smoothness = validate_innovation(innov);
    check.smoothness_enforced = !model.iid();
    if (check.smoothness.violation) {
        const auto msg = fmt::format(
            "innovation density {} violates the smoothness condition sup(f + |f'| + |f''|) < inf: derivative "
            "check fails at x = {:.6g}",
            innov.name(), check.smoothness.violation_at);
        if (check.smoothness_enforced) {
            check.failures.push_back(msg);
        } else {
            check.notes.push_back(msg + " (not enforced: the model has no past)");
        }
    }
    if (!check.smoothness.moments_ok && check.smoothness_enforced) {
        check.failures.push_back(fmt::format("innovation {} needs a finite moment of order > 2", innov.name()));
    }

    if (config.nu) {
        if (model.gamma1() && model.gamma2()) {
            check.gamma = std::min(*model.gamma1(), *model.gamma2());
        } else {
            const auto oracle = build_marginal_oracle(model, config.model.mixture_points, config.model.oracle_seed);
            const auto est = csr_exponents(oracle);
            const double g1 = model.gamma1().value_or(est.gamma1);
            const double g2 = model.gamma2().value_or(est.gamma2);
            check.gamma = std::min(g1, g2);
            check.gamma_estimated = true;
        }
        if (!(*check.gamma >= 1.0)) {
            check.failures.push_back(fmt::format(
                "weighted residual needs tail exponent gamma >= 1, got {:.4g}; drop nu for this model", *check.gamma));
        } else {
            check.nu_min = csr_nu_min(*check.gamma);
            if (!(*config.nu > *check.nu_min)) {
                check.failures.push_back(
                    fmt::format("weight exponent nu = {} must exceed max(2 gamma, 3 gamma - 2) = {:.6g} (gamma = {:.6g})",
                                *config.nu, *check.nu_min, *check.gamma));
            }
        }
    }
    return check;
}

ModelCheck require_model(const ExperimentConfig& config) {
    auto check = check_model(config);
    if (!check.ok()) throw ConditionError(check.failures.front());
    return check;
}

}  // namespace bklab
