#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace bmsprt::cli {

/// Everything a subcommand needs. Unset optionals take subcommand-specific
/// defaults (compare-maxsprt defaults to Bernoulli data of 10^5 sessions).
struct RunConfig {
    std::string metric = "query_success_rate";
    std::string stderr_method = "auto";
    std::size_t block_size = 1000;
    double alpha = 0.05;
    std::string tau = "auto";  ///< a positive number or "auto"
    std::optional<double> tau_fraction;  ///< auto tau fraction; 0.03, or 0.10 for compare-maxsprt
    double prior_mean = 0.0;
    std::size_t resamples = 1000;  ///< B
    std::size_t prior_samples = 5000;  ///< M
    std::string bandwidth = "silverman";  ///< or a fixed positive bandwidth

    std::uint64_t seed_data = 1;
    std::uint64_t seed_split = 2;
    std::uint64_t seed_bootstrap = 3;
    std::uint64_t seed_prior = 4;
    std::uint64_t seed_calibration = 5;

    std::string input;
    std::string input_b;
    std::optional<std::string> model;  ///< correlated | revenue | bernoulli
    std::optional<std::size_t> n_sessions;
    double bernoulli_p = 0.05;

    std::filesystem::path out = ".";
    std::optional<std::string> offsets;  ///< comma list; "2tau" means 2 * tau
    double offset = 0.0;
    std::size_t trials = 200;
    std::size_t looks = 15;
    std::string block_sizes = "1000,2000,4000";
    std::size_t calibration_trials = 1000;
    std::optional<double> p0;
    bool full_trajectory = false;
    std::size_t threads = 1;
};

enum ExitCode : int { kOk = 0, kInternal = 1, kConfig = 2, kData = 3 };

/// Runs one subcommand. Results are written only after every computation
/// has finished, so a failing run leaves no result files behind.
/// Throws ConfigError / DataError (and friends) on failure.
void run(const std::string& subcommand, const RunConfig& cfg);

/// Parses command-line flags (and an optional --config key=value file, flags
/// winning), runs the subcommand and maps errors to exit codes.
int main(int argc, char** argv);

/// Comma-separated list of offsets; entries may be plain reals or multiples
/// of tau written as "<k>tau".
std::vector<double> parse_offsets(const std::string& text, double tau);

std::vector<std::size_t> parse_sizes(const std::string& text);

}  // namespace bmsprt::cli
