#pragma once

#include <functional>
#include <string>
#include <vector>

namespace mitoscan {

/// Shortest decimal representation that round-trips the exact double.
std::string format_double(double v);

std::vector<std::string> split_csv_line(const std::string& line);
std::string trim(const std::string& s);

/// True if the string parses fully as a floating-point number.
bool is_numeric(const std::string& s);

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Work is striped
/// deterministically; callers write results into preallocated slots so the
/// outcome is independent of scheduling.
void parallel_for(long n, int jobs, const std::function<void(long)>& fn);

}  // namespace mitoscan
