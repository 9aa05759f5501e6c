#include "manifest.hpp"

#include <cstdio>
#include <ctime>

#include "fcdcast/binary_io.hpp"
#include "fcdcast/version.hpp"

namespace fcd::cli {

std::string file_digest(const std::filesystem::path& path) {
    std::uint64_t h = 14695981039346656037ull;
    for (char c : io::read_file(path)) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::filesystem::path manifest_path(const std::filesystem::path& primary) {
    auto p = primary;
    p += ".manifest.json";
    return p;
}

RunManifest::RunManifest(std::vector<std::string> args)
    : args_(std::move(args)), start_(std::chrono::steady_clock::now()), started_at_(std::chrono::system_clock::now()) {}

void RunManifest::seed(std::uint64_t seed, std::vector<std::string> substreams) {
    seeds_ = {{"seed", seed}, {"substreams", substreams}};
}

void RunManifest::input(const std::filesystem::path& path) { inputs_.push_back(path); }
void RunManifest::config(const std::filesystem::path& path) { configs_.push_back(path); }
void RunManifest::output(const std::filesystem::path& path) { outputs_.push_back(path); }

void RunManifest::write(const std::filesystem::path& primary) const {
    using nlohmann::json;
    const auto digests = [](const std::vector<std::filesystem::path>& paths) {
        json out = json::array();
        for (const auto& p : paths) out.push_back({{"path", p.string()}, {"fnv1a64", file_digest(p)}});
        return out;
    };
    const std::time_t t = std::chrono::system_clock::to_time_t(started_at_);
    std::tm utc{};
    gmtime_r(&t, &utc);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &utc);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    const json j = {{"tool", "fcdcast"},
                    {"version", kVersion},
                    {"command", args_},
                    {"working_directory", std::filesystem::current_path().string()},
                    {"seeds", seeds_},
                    {"inputs", digests(inputs_)},
                    {"configs", digests(configs_)},
                    {"outputs", digests(outputs_)},
                    {"started_utc", stamp},
                    {"wall_clock_seconds", seconds}};
    io::write_text_atomic(manifest_path(primary), j.dump(2) + "\n");
}

}  // namespace fcd::cli
