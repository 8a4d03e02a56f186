#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "fgp/market.hpp"

namespace fgp::lab {

inline constexpr const char* kVersion = "fgp 0.1.0";

struct Tolerances {
    double decomposition_gap = 1e-3;
    double residual_drift = 1e-3;
    double pde_residual = 1e-6;
    double pde_residual_fd = 1e-4;
    double hedge_median = 1e-2; // relative to the strike scale

    static Tolerances from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

// One experiment = (market, claim, grid, paths, seed, tolerances). Commands
// are pure functions of the config, so reruns reproduce outputs
// byte-identically; the seed is mandatory.
struct ExperimentConfig {
    MarketModel market;
    nlohmann::json claim;
    TimeGrid grid;
    int paths = 1;
    std::uint64_t seed = 0;
    Tolerances tolerances;
    std::filesystem::path output_dir = "out";
    std::vector<int> hedge_steps = {250, 1000, 4000};

    static ExperimentConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

ExperimentConfig load_config(const std::filesystem::path& file);

// Exit codes: 0 success, 1 config/IO error (thrown as ConfigError), 2
// verdict failure (residual or gap above tolerance, pipeline rejection).
struct CommandResult {
    int exit_code = 0;
    nlohmann::json report;
};

CommandResult run_simulate(const ExperimentConfig& config);
CommandResult run_decompose(const ExperimentConfig& config, int refine = 0);
CommandResult run_replicate_check(const ExperimentConfig& config);
CommandResult run_price(const ExperimentConfig& config);
CommandResult run_hedge(const ExperimentConfig& config);

std::uint64_t fnv1a64(std::string_view bytes);
std::string config_hash(const ExperimentConfig& config);

} // namespace fgp::lab
