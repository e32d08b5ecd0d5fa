#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "robustqm/cli/config.hpp"

namespace robustqm::cli {

inline constexpr const char* tool_version = "0.1.0";

struct OutputFile {
    std::string path;  ///< relative to the output directory
    std::string sha256;
};

struct RunManifest {
    std::string config_digest;
    std::string tool_version;
    std::string started;
    std::string finished;
    std::vector<OutputFile> output_files;
    std::string status;      ///< "ok" or "failed"
    std::string error_name;  ///< empty on success
    std::string error_message;

    Json to_json() const;
};

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Runs the experiment, writes its CSV files and manifest.json into the
/// output directory (override wins over the config's). On a library error
/// the manifest records status "failed" with the error name and the error
/// is rethrown.
RunManifest run(const RunConfig& config,
                const std::optional<std::filesystem::path>& output_dir_override = {});

} // namespace robustqm::cli
