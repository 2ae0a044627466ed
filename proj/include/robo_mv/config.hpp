#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "robo_mv/cycle_analytics.hpp"
#include "robo_mv/market.hpp"
#include "robo_mv/risk_profile.hpp"
#include "robo_mv/solver.hpp"

namespace robo_mv {

using json = nlohmann::ordered_json;

/// Everything a CLI run needs. Regimes are 1-based in files and 0-based in memory.
struct RunConfig {
    MarketParams market;
    RiskProfileParams profile;
    GridSpec grid;
    CycleStrategy strategy;
    int horizon = 36;
    int initial_state = 0;
    double initial_wealth = 1.0;
    long paths = 10000;
    std::uint64_t seed = 1;
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();
    bool liquidation = false;
};

MarketParams market_from_json(const json& j);
RiskProfileParams profile_from_json(const json& j);
GridSpec grid_from_json(const json& j);

/// Parses a full run config; unknown or missing required keys raise config errors naming the key.
RunConfig run_config_from_json(const json& j);
RunConfig load_run_config(const std::filesystem::path& path);

json to_json(const MarketParams& m);
json to_json(const RiskProfileParams& p);
json to_json(const GridSpec& g);
json to_json(const RunConfig& c);

/// CSV with a header row and 12 significant digits.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

void write_json(const std::filesystem::path& path, const json& j);

}  // namespace robo_mv
