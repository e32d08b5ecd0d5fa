#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace robustqm::cli {

using Json = nlohmann::json;

inline const std::vector<std::string>& experiment_kinds() {
    static const std::vector<std::string> kinds{
        "eprb-scan", "eprb-simulate", "sg-scan",     "evidence",  "appendix-a",
        "tise-solve", "tise-minimize", "tdse-run",   "gauge-check"};
    return kinds;
}

/// Experiments whose output depends on random draws; they need a seed.
bool is_stochastic(const std::string& experiment);

struct RunConfig {
    std::string experiment;
    std::optional<std::uint64_t> seed;
    std::string output_dir = "out";
    /// Every parameter of the experiment, defaults filled in.
    Json parameters = Json::object();

    /// Canonical form hashed into the manifest (sorted keys, no whitespace).
    std::string canonical() const;
};

struct Diagnostic {
    std::string path;  ///< e.g. "parameters.theta"; "" for document-level problems
    std::string message;
};

std::string to_string(const Diagnostic& d);

class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(std::vector<Diagnostic> diagnostics);
    const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }

  private:
    std::vector<Diagnostic> diagnostics_;
};

/// Parses and checks a JSON config document. Throws ConfigError listing every
/// problem found.
RunConfig validate_config(const std::string& text);

/// Reads the file at `path` and validates it.
RunConfig load_config(const std::string& path);

} // namespace robustqm::cli
