#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "genrs/multicast.hpp"

namespace genrs {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A batch experiment: request profile, link budget, channel model,
/// scheme list, sweep axis, and Monte-Carlo bookkeeping.  Loaded from a
/// flat key = value text file (one key per line, # comments).
struct ExperimentConfig {
    std::string scenario = "slow";  // slow | fast
    int users = 0;
    int messages = 0;
    std::vector<std::vector<int>> requests;
    std::vector<double> alpha;  // resolved per group, canonical order

    std::vector<std::string> schemes;

    std::string channel = "onering";  // onering | iid
    int groups = 1;                   // one-ring user groups
    double angular_spread_deg = 10.0;
    double antenna_spacing = 0.5;     // wavelengths
    double lambda = 1.0;              // iid per-antenna variance

    int subcarriers = 4;
    int antennas = 4;
    double bandwidth_hz = 30e3;
    double noise_w = 1e-9;
    double power_dbm = 30.0;

    std::string sweep = "none";  // none | M | P | G
    std::vector<double> sweep_values;

    int realizations = 20;
    std::uint64_t seed = 1;
    std::string out_dir;

    // Algorithm knobs.
    double cccp_obj_tol_rel = 1e-3;
    int cccp_max_outer = 50;
    int ssca_iterations = 200;
    int mc_samples = 2000;
    double solver_tol = 1e-6;

    double power_watts() const { return std::pow(10.0, (power_dbm - 30.0) / 10.0); }
    RequestProfile profile() const;
};

/// Parses and validates; throws ConfigError naming the offending key or
/// compatibility rule.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& text);
void validate_config(const ExperimentConfig& cfg);

}  // namespace genrs
