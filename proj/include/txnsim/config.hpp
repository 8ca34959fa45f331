#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace txnsim {

// Raised for malformed or out-of-range configuration; the CLI maps it to exit code 1.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// All model parameters for one simulation run. Defaults follow the reference
// scenario: 1600 nodes, one-day horizon of 84600 tau0, cascade probability
// 0.01 inside a 10 tau0 dependency window, transaction TTL 60 tau0, lengths
// from a discrete normal with mean 10 and standard deviation 4.
struct SimConfig {
    std::uint32_t n_nodes = 1600;
    std::uint32_t capacity = 4;
    double density = 0.2;
    double duration = 84600.0;                                   // S, in tau0
    double inject_rate = 1.0;                                    // r, txn per tau0
    double mean_ttf = std::numeric_limits<double>::infinity();   // T_f; inf disables faults
    double cascade_prob = 0.01;                                  // p0
    double dep_window = 10.0;                                    // T
    double ttl = 60.0;
    double txn_len_mean = 10.0;
    double txn_len_sd = 4.0;
    std::uint64_t seed = 1;
    double abort_threshold = 1e-6;

    void validate() const;
};

// Parameters of an experiment sweep on top of a base SimConfig.
struct ExperimentConfig {
    SimConfig base;
    std::vector<std::uint32_t> capacities = {2,  3,  4,  5,  6,  7,  8,  9,  10, 11, 12,
                                             13, 14, 15, 16, 17, 18, 19, 20, 21, 22};
    std::vector<double> densities = {0.01, 0.011, 0.015, 0.025, 0.04, 0.055, 0.075, 0.1,
                                     0.2,  0.3,   0.5,   0.6,   0.75, 0.85,  0.99};
    std::uint32_t replications = 5;
    double bisection_tolerance = 0.05;  // relative width of the final bracket
    std::vector<double> ray_angles = {0, 9, 18, 27, 36, 45, 54, 63, 72, 81, 90};  // degrees
    std::vector<double> p0_values;      // non-empty enables the p0 sensitivity sub-sweep

    void validate() const;
};

// Flat key=value text with '#' comments; unknown keys are rejected. `overrides`
// are applied after the file (CLI --set key=value), same syntax and checks.
ExperimentConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {});
ExperimentConfig parse_config_file(const std::string& path, const std::vector<std::string>& overrides = {});

// Resolved config as a key=value block that parse_config maps back to the
// identical ExperimentConfig (doubles are emitted with round-trip precision).
std::string emit_config(const ExperimentConfig& cfg);

}  // namespace txnsim
