#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "robustqm/errors.hpp"

namespace robustqm::cli {

class IoError : public Error {
  public:
    explicit IoError(const std::string& what) : Error("IoError", what) {}
};

struct Column {
    std::string name;
    std::vector<double> values;
};

/// Formats a double with 17 significant digits so it parses back exactly.
std::string format_double(double v);

/// Writes the file through a temporary sibling and a rename, so a reader
/// never sees a partial file at `path`.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// Header row of column names, then one row per index; LF line endings.
/// Columns must have equal lengths (DomainError otherwise).
void emit_csv(const std::vector<Column>& columns, const std::filesystem::path& path);

} // namespace robustqm::cli
