#include "fgp/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include "fgp/builtins.hpp"
#include "fgp/errors.hpp"
#include "fgp/portfolio.hpp"
#include "fgp/replication.hpp"

namespace fgp::lab {

namespace {

void write_text_file(const std::filesystem::path& file, const std::string& content) {
    std::filesystem::create_directories(file.parent_path());
    std::ofstream os(file, std::ios::binary);
    if (!os) throw ConfigError("cannot open for writing: " + file.string());
    os << content;
    if (!os) throw ConfigError("write failed: " + file.string());
}

std::string path_file_name(std::uint64_t seed, int index) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%llu_%03d.csv", static_cast<unsigned long long>(seed), index);
    return buf;
}

builtins::BuiltinContext context_for(const ExperimentConfig& config) {
    return builtins::BuiltinContext{covariance(config.market).at(0.0), config.grid.horizon};
}

nlohmann::json report_envelope(const char* command, const ExperimentConfig& config) {
    return {{"command", command},
            {"version", kVersion},
            {"config_hash", config_hash(config)},
            {"config", config.to_json()}};
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double quantile90(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[static_cast<std::size_t>(0.9 * (v.size() - 1))];
}

std::vector<PdeSample> subsample_path(const GeneratingFunction& claim, const PricePath& path,
                                      int per_path) {
    const bool with_riskless = claim.arity() == path.assets() + 1;
    std::vector<PdeSample> samples;
    const int stride = std::max(1, path.steps() / per_path);
    for (int k = 0; k < path.steps(); k += stride) {
        PdeSample s;
        s.t = path.time(k);
        if (with_riskless) s.x.push_back(path.riskless[k]);
        for (int i = 0; i < path.assets(); ++i) s.x.push_back(path.price(k, i));
        samples.push_back(std::move(s));
    }
    return samples;
}

} // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string config_hash(const ExperimentConfig& config) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(config.to_json().dump())));
    return buf;
}

Tolerances Tolerances::from_json(const nlohmann::json& j) {
    Tolerances t;
    t.decomposition_gap = j.value("decomposition_gap", t.decomposition_gap);
    t.residual_drift = j.value("residual_drift", t.residual_drift);
    t.pde_residual = j.value("pde_residual", t.pde_residual);
    t.pde_residual_fd = j.value("pde_residual_fd", t.pde_residual_fd);
    t.hedge_median = j.value("hedge_median", t.hedge_median);
    for (double v : {t.decomposition_gap, t.residual_drift, t.pde_residual, t.pde_residual_fd,
                     t.hedge_median})
        if (!(v > 0.0)) throw ConfigError("tolerances: all entries must be positive");
    return t;
}

nlohmann::json Tolerances::to_json() const {
    return {{"decomposition_gap", decomposition_gap},
            {"residual_drift", residual_drift},
            {"pde_residual", pde_residual},
            {"pde_residual_fd", pde_residual_fd},
            {"hedge_median", hedge_median}};
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    try {
        c.market = MarketModel::from_json(j.at("market"));
        c.claim = j.at("claim");
        c.grid.horizon = j.at("grid").at("horizon").get<double>();
        c.grid.steps = j.at("grid").at("steps").get<int>();
        c.paths = j.value("paths", 1);
        if (!j.contains("seed")) throw ConfigError("seed: required, no implicit entropy");
        c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("tolerances")) c.tolerances = Tolerances::from_json(j.at("tolerances"));
        if (j.contains("output_dir"))
            c.output_dir = j.at("output_dir").get<std::string>();
        if (j.contains("hedge_steps")) c.hedge_steps = j.at("hedge_steps").get<std::vector<int>>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (!(c.grid.horizon > 0.0)) throw ConfigError("grid.horizon: must be positive");
    if (c.grid.steps < 1) throw ConfigError("grid.steps: must be at least 1");
    if (c.paths < 1) throw ConfigError("paths: must be at least 1");
    if (c.hedge_steps.empty()) throw ConfigError("hedge_steps: must be non-empty");
    for (std::size_t i = 1; i < c.hedge_steps.size(); ++i)
        if (c.hedge_steps[i] <= c.hedge_steps[i - 1])
            throw ConfigError("hedge_steps: must be strictly increasing");
    for (int m : c.hedge_steps)
        if (m < 1 || c.hedge_steps.back() % m != 0)
            throw ConfigError("hedge_steps: every entry must divide the largest");
    // every referenced builtin name must resolve before any file is written
    builtins::from_json(c.claim, builtins::BuiltinContext{covariance(c.market).at(0.0),
                                                          c.grid.horizon});
    return c;
}

nlohmann::json ExperimentConfig::to_json() const {
    return {{"market", market.to_json()},
            {"claim", claim},
            {"grid", {{"horizon", grid.horizon}, {"steps", grid.steps}}},
            {"paths", paths},
            {"seed", seed},
            {"tolerances", tolerances.to_json()},
            {"output_dir", output_dir.string()},
            {"hedge_steps", hedge_steps}};
}

ExperimentConfig load_config(const std::filesystem::path& file) {
    std::ifstream is(file);
    if (!is) throw ConfigError("cannot open config file: " + file.string());
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config parse error in " + file.string() + ": " + e.what());
    }
    return ExperimentConfig::from_json(j);
}

CommandResult run_simulate(const ExperimentConfig& config) {
    nlohmann::json files = nlohmann::json::array();
    for (int p = 0; p < config.paths; ++p) {
        const PricePath path =
            simulate_path(config.market, config.grid, config.seed, static_cast<std::uint64_t>(p));
        std::ostringstream os;
        path.write_csv(os);
        const std::string name = path_file_name(config.seed, p);
        write_text_file(config.output_dir / "paths" / name, os.str());
        files.push_back("paths/" + name);
    }
    nlohmann::json report = report_envelope("simulate", config);
    report["files"] = files;
    write_text_file(config.output_dir / "manifest.json", report.dump(2) + "\n");
    return CommandResult{0, report};
}

CommandResult run_decompose(const ExperimentConfig& config, int refine) {
    if (refine < 0 || refine > 6) throw ConfigError("refine: must lie in [0, 6]");
    const auto claim = builtins::from_json(config.claim, context_for(config));
    const CovarianceView cov = covariance(config.market);
    const bool smooth = claim.smoothness() == Smoothness::smooth;

    const int levels = refine + 1;
    const int fine_factor = 1 << refine;
    TimeGrid fine_grid{config.grid.horizon, config.grid.steps * fine_factor};

    std::vector<std::vector<double>> gaps(levels); // gaps[l][path], level l has steps * 2^l
    double max_gap = 0.0;
    double residual_drift_max = 0.0;
    bool pi_constant = true;
    double drift_slope_sum = 0.0;
    double egr0 = 0.0;
    int succeeded = 0;
    bool drift_matches_egr_scaled = true;
    nlohmann::json errors = nlohmann::json::array();
    nlohmann::json per_path = nlohmann::json::array();

    const bool is_diversity = config.claim.value("kind", "") == "diversity";
    const double diversity_factor = is_diversity ? 1.0 - config.claim.value("p", 0.0) : 0.0;

    for (int p = 0; p < config.paths; ++p) {
        try {
            const PricePath fine =
                simulate_path(config.market, fine_grid, config.seed, static_cast<std::uint64_t>(p));
            for (int level = 0; level < levels; ++level) {
                const PricePath path = coarsen_path(fine, fine_factor >> level);
                const auto traj = integrate_value(claim, path, cov);
                if (level == 0) {
                    double path_residual_max = 0.0;
                    for (double r : traj.drift_residual)
                        path_residual_max = std::max(path_residual_max, std::abs(r));
                    residual_drift_max = std::max(residual_drift_max, path_residual_max);
                    for (const auto& w : traj.weights)
                        for (std::size_t i = 0; i < w.risky.size(); ++i)
                            if (std::abs(w.risky[i] - traj.weights.front().risky[i]) > 1e-12)
                                pi_constant = false;
                    nlohmann::json stats{{"path", p},
                                         {"residual_drift_final", traj.drift_residual.back()},
                                         {"residual_drift_max", path_residual_max}};
                    if (smooth) {
                        const double gap = traj.max_decomposition_gap();
                        max_gap = std::max(max_gap, gap);
                        stats["max_gap"] = gap;
                        stats["drift_final"] = traj.drift_analytic.back();
                        drift_slope_sum += traj.drift_analytic.back() / config.grid.horizon;
                        if (p == 0) egr0 = traj.excess_growth.front();
                        if (is_diversity) {
                            double egr_sum = 0.0;
                            const double dt = path.grid.dt();
                            for (int k = 0; k < path.steps(); ++k)
                                egr_sum += traj.excess_growth[k] * dt;
                            if (std::abs(traj.drift_analytic.back() -
                                         diversity_factor * egr_sum) > 1e-12)
                                drift_matches_egr_scaled = false;
                        }
                    }
                    per_path.push_back(std::move(stats));
                    std::ostringstream os;
                    traj.write_csv(os);
                    write_text_file(config.output_dir / "trajectories" /
                                        path_file_name(config.seed, p),
                                    os.str());
                }
                if (smooth) gaps[level].push_back(decomposition_check(claim, path, cov));
            }
            ++succeeded;
        } catch (const Error& e) {
            errors.push_back({{"path", p}, {"error", e.what()}});
        }
    }
    if (succeeded == 0) throw ConfigError("decompose: every path failed");

    nlohmann::json report = report_envelope("decompose", config);
    report["paths_succeeded"] = succeeded;
    report["errors"] = errors;
    report["per_path"] = per_path;
    report["analytic_drift_valid"] = smooth;
    if (smooth) {
        report["max_gap"] = max_gap;
        report["drift_slope"] = drift_slope_sum / succeeded;
        report["egr0"] = egr0;
    }
    report["residual_drift_max"] = residual_drift_max;
    report["residual_drift_below_tolerance"] =
        residual_drift_max < config.tolerances.residual_drift;
    report["pi_constant"] = pi_constant;
    if (is_diversity) report["drift_matches_egr_scaled"] = drift_matches_egr_scaled;
    if (refine > 0 && smooth) {
        nlohmann::json refinement;
        nlohmann::json ratios = nlohmann::json::array();
        for (int level = 0; level + 1 < levels; ++level) {
            std::vector<double> r;
            for (std::size_t p = 0; p < gaps[level].size(); ++p)
                r.push_back(gaps[level][p] / std::max(gaps[level + 1][p], 1e-300));
            ratios.push_back({{"steps_coarse", config.grid.steps << level},
                              {"steps_fine", config.grid.steps << (level + 1)},
                              {"median_gap_coarse", median(gaps[level])},
                              {"median_gap_fine", median(gaps[level + 1])},
                              {"median_ratio", median(r)}});
        }
        refinement["levels"] = ratios;
        report["refinement"] = refinement;
    }

    const bool gap_ok = !smooth || max_gap < config.tolerances.decomposition_gap;
    write_text_file(config.output_dir / "decompose_report.json", report.dump(2) + "\n");
    return CommandResult{gap_ok ? 0 : 2, report};
}

CommandResult run_replicate_check(const ExperimentConfig& config) {
    const auto claim = builtins::from_json(config.claim, context_for(config));
    const CovarianceView cov = covariance(config.market);

    std::vector<PdeSample> samples;
    const TimeGrid grid{config.grid.horizon, std::min(config.grid.steps, 64)};
    const int sample_paths = std::min(config.paths, 4);
    for (int p = 0; p < sample_paths; ++p) {
        const PricePath path =
            simulate_path(config.market, grid, config.seed, static_cast<std::uint64_t>(p));
        auto s = subsample_path(claim, path, 16);
        samples.insert(samples.end(), s.begin(), s.end());
    }

    const auto analytic =
        pde_residual(claim, cov, config.market.riskless_rate, samples,
                     config.tolerances.pde_residual, DerivativeBackend::analytic_if_available);
    const auto fd = pde_residual(claim, cov, config.market.riskless_rate, samples,
                                 config.tolerances.pde_residual_fd,
                                 DerivativeBackend::finite_difference);

    const auto& primary = analytic.analytic_backend ? analytic : fd;
    nlohmann::json report = report_envelope("replicate-check", config);
    report["analytic"] = analytic.to_json();
    report["finite_difference"] = fd.to_json();
    report["verdict"] = primary.replicable ? "replicable" : "not_replicable";
    write_text_file(config.output_dir / "replicate_report.json", report.dump(2) + "\n");
    return CommandResult{primary.replicable ? 0 : 2, report};
}

CommandResult run_price(const ExperimentConfig& config) {
    ClaimProblem problem{config.claim, config.market, config.grid.horizon};
    const auto step1 = builtins::from_json(config.claim, context_for(config));

    nlohmann::json report = report_envelope("price", config);
    ThreeStepOptions opts;
    opts.tolerance = config.tolerances.pde_residual;
    opts.fd_tolerance = config.tolerances.pde_residual_fd;
    opts.seed = config.seed;
    std::optional<ThreeStepResult> result;
    try {
        result = three_step_price(problem, step1, opts);
    } catch (const PipelineError& e) {
        report["verdict"] = "rejected";
        report["error"] = e.what();
        write_text_file(config.output_dir / "price_report.json", report.dump(2) + "\n");
        return CommandResult{2, report};
    }

    const auto& vhat = result->claim_function;
    const double T = config.grid.horizon;
    const auto terminal = builtins::from_json(config.claim, context_for(config));

    std::string csv = "t,x0,scale";
    for (int i = 1; i <= config.market.n; ++i) csv += ",X" + std::to_string(i);
    csv += ",price\n";
    bool terminal_exact = true;
    const std::vector<double> t_values = {0.0, T / 4.0, T / 2.0, 3.0 * T / 4.0, T};
    for (double t : t_values) {
        const double x0 = config.market.initial_riskless * std::exp(config.market.riskless_rate * t);
        for (int s = 0; s < 9; ++s) {
            const double scale = 0.25 * std::pow(2.0, s * 0.5);
            std::vector<double> args(config.market.n + 1);
            args[0] = x0;
            for (int i = 0; i < config.market.n; ++i)
                args[i + 1] = scale * config.market.initial_prices[i];
            const double price = vhat.value(args, t);
            if (t == T) {
                const std::vector<double> x(args.begin() + 1, args.end());
                if (price != terminal.value(x, T)) terminal_exact = false;
            }
            char buf[128];
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g", t, x0, scale);
            csv += buf;
            for (int i = 0; i < config.market.n; ++i) {
                std::snprintf(buf, sizeof(buf), ",%.17g", args[i + 1]);
                csv += buf;
            }
            std::snprintf(buf, sizeof(buf), ",%.17g\n", price);
            csv += buf;
        }
    }
    write_text_file(config.output_dir / "price_table.csv", csv);

    report["verdict"] = "priced";
    report["step1"] = result->step1_report.to_json();
    report["lifted"] = result->lifted_report.to_json();
    report["terminal_exact"] = terminal_exact;
    report["table"] = "price_table.csv";
    write_text_file(config.output_dir / "price_report.json", report.dump(2) + "\n");
    return CommandResult{0, report};
}

CommandResult run_hedge(const ExperimentConfig& config) {
    const auto claim = builtins::from_json(config.claim, context_for(config));
    const CovarianceView cov = covariance(config.market);
    const int m_max = config.hedge_steps.back();
    const double strike_scale = config.claim.value("strike", 1.0);

    std::vector<std::vector<double>> errors(config.hedge_steps.size());
    nlohmann::json path_errors = nlohmann::json::array();
    for (int p = 0; p < config.paths; ++p) {
        try {
            const PricePath fine = simulate_path(config.market, TimeGrid{config.grid.horizon, m_max},
                                                 config.seed, static_cast<std::uint64_t>(p));
            for (std::size_t level = 0; level < config.hedge_steps.size(); ++level) {
                const PricePath path = coarsen_path(fine, m_max / config.hedge_steps[level]);
                const auto traj = integrate_value(claim, path, cov);
                const double z_terminal = std::exp(traj.log_value.back());
                const double v_terminal = std::exp(traj.log_generating.back());
                errors[level].push_back(std::abs(z_terminal - v_terminal));
            }
        } catch (const Error& e) {
            path_errors.push_back({{"path", p}, {"error", e.what()}});
        }
    }
    if (errors.front().empty()) throw ConfigError("hedge: every path failed");

    nlohmann::json per_level = nlohmann::json::array();
    std::vector<double> medians;
    for (std::size_t level = 0; level < config.hedge_steps.size(); ++level) {
        medians.push_back(median(errors[level]));
        per_level.push_back({{"steps", config.hedge_steps[level]},
                             {"median_abs_error", medians.back()},
                             {"p90_abs_error", quantile90(errors[level])},
                             {"paths", errors[level].size()}});
    }
    bool decreasing = true;
    for (std::size_t level = 1; level < medians.size(); ++level)
        if (!(medians[level] < medians[level - 1])) decreasing = false;
    const bool final_ok = medians.back() < config.tolerances.hedge_median * strike_scale;

    nlohmann::json report = report_envelope("hedge", config);
    report["levels"] = per_level;
    report["errors"] = path_errors;
    report["median_strictly_decreasing"] = decreasing;
    report["final_median_below_tolerance"] = final_ok;
    report["verdict"] = (decreasing && final_ok) ? "converging" : "not_converging";
    write_text_file(config.output_dir / "hedge_report.json", report.dump(2) + "\n");
    return CommandResult{(decreasing && final_ok) ? 0 : 2, report};
}

} // namespace fgp::lab
