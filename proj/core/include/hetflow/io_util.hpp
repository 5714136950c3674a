#pragma once

#include <string>

namespace hetflow {

/// Shortest decimal form that still reads back reasonably; fixed for small
/// magnitudes so CSV files stay grep-friendly.
std::string format_double(double v);

/// Fixed-precision seconds used in trace/timeline CSVs.
std::string format_seconds(double v);

/// Write-then-rename so concurrent runs never observe a half-written file.
void atomic_write_file(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

} // namespace hetflow
