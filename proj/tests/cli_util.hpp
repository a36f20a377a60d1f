#pragma once

#include "commands.hpp"

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

namespace cli_util {

inline int run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "cpo");
    std::vector<char*> argv;
    for (auto& a : args)
        argv.push_back(a.data());
    return cpo::cli::run(static_cast<int>(argv.size()), argv.data());
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("cpo_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace cli_util
