#include "robustqm/cli/csv.hpp"

#include <cstdio>
#include <fstream>
#include <system_error>

#include <unistd.h>

namespace robustqm::cli {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path(), ec);
        if (ec) throw IoError(path.parent_path().string() + ": " + ec.message());
    }
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError(tmp.string() + ": cannot open for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            fs::remove(tmp, ec);
            throw IoError(tmp.string() + ": write failed");
        }
    }
    fs::rename(tmp, path, ec);
    if (ec) {
        std::error_code ignore;
        fs::remove(tmp, ignore);
        throw IoError(path.string() + ": " + ec.message());
    }
}

void emit_csv(const std::vector<Column>& columns, const std::filesystem::path& path) {
    const std::size_t rows = columns.empty() ? 0 : columns.front().values.size();
    for (const auto& c : columns)
        if (c.values.size() != rows)
            throw DomainError("emit_csv: column '" + c.name + "' has " +
                              std::to_string(c.values.size()) + " rows, expected " +
                              std::to_string(rows));
    std::string text;
    for (std::size_t j = 0; j < columns.size(); ++j) {
        if (j) text += ',';
        text += columns[j].name;
    }
    text += '\n';
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < columns.size(); ++j) {
            if (j) text += ',';
            text += format_double(columns[j].values[i]);
        }
        text += '\n';
    }
    write_atomic(path, text);
}

} // namespace robustqm::cli
