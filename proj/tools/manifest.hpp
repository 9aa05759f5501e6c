#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace fcd::cli {

/// FNV-1a 64 of a file's bytes as 16 lowercase hex digits.
std::string file_digest(const std::filesystem::path& path);

/// Record of one command run, written next to its primary output as
/// `<out>.manifest.json`.
class RunManifest {
public:
    explicit RunManifest(std::vector<std::string> args);

    void seed(std::uint64_t seed, std::vector<std::string> substreams);
    void input(const std::filesystem::path& path);
    void config(const std::filesystem::path& path);
    void output(const std::filesystem::path& path);

    /// Digests the outputs and writes `<primary>.manifest.json`.
    void write(const std::filesystem::path& primary) const;

private:
    std::vector<std::string> args_;
    nlohmann::json seeds_ = nlohmann::json::object();
    std::vector<std::filesystem::path> inputs_;
    std::vector<std::filesystem::path> configs_;
    std::vector<std::filesystem::path> outputs_;
    std::chrono::steady_clock::time_point start_;
    std::chrono::system_clock::time_point started_at_;
};

std::filesystem::path manifest_path(const std::filesystem::path& primary);

}  // namespace fcd::cli
