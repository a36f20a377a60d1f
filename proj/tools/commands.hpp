#pragma once

#include "cpo/types.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace cpo::cli {

/// Every knob a command reads. A run is fully determined by (config, seed).
struct RunConfig {
    std::string task{"gaussian_linear"};
    double alpha{0.05};
    Index k_max{15};
    double epsilon{-1}; // < 0: 1% of the K = 1 volume
    Index samples_per_ball{1000};
    Index steps{1000};
    double eta{0}; // <= 0: automatic
    Index rp_count{5};
    std::uint64_t seed{0};
    std::string out{"out"};

    std::string score{"gpcp"};
    Index k{10}; // GPCP draws; 0 runs K selection first
    Index ptc_draws{100};
    Index n_cal{1000};
    Index n_cal2{1000};
    Index n_train{1000};
    Index n_test{1000};
    Index instances{10};
    Index dim{0};
    Index grid_rows{8};
    Index grid_cols{8};
    Index x_index{0};
    double connect_radius{0}; // <= 0: the region radius
    std::string region;       // path to a calibration artifact

    /// Throws InvalidArgument on out-of-range values.
    void validate() const;
    /// Canonical key=value text of every setting that affects results.
    std::string canonical() const;
    std::string hash() const;
};

/// Applies one `key = value` setting; keys accept '-' or '_'.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);
/// Flat `key = value` file, '#' starts a comment.
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);

/// Writes via a temporary file and rename.
void write_atomic(const std::filesystem::path& path, const std::string& contents);

/// Each command writes its artifacts under config.out and returns the paths.
std::vector<std::filesystem::path> cmd_calibrate(const RunConfig& config);
std::vector<std::filesystem::path> cmd_select_k(const RunConfig& config);
std::vector<std::filesystem::path> cmd_optimize(const RunConfig& config);
std::vector<std::filesystem::path> cmd_rps(const RunConfig& config);
std::vector<std::filesystem::path> cmd_bench(const RunConfig& config);

/// Full command-line entry point; returns the process exit code.
int run(int argc, char** argv);

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitInfeasible = 3;
inline constexpr int kExitNumeric = 4;

} // namespace cpo::cli
