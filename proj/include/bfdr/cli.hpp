#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bfdr::cli {

inline constexpr const char* kVersion = "0.1.0";

// Exit codes: 0 success, 1 runtime failure, 2 usage error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// "lo:hi:step" (endpoints inclusive within 1e-9) or a comma-separated list.
std::vector<double> parse_grid(const std::string& text);
std::vector<std::size_t> parse_size_list(const std::string& text);

}  // namespace bfdr::cli
