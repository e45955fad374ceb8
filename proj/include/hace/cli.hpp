#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hace::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kRuntimeFailure = 1;
inline constexpr int kInvalidInput = 2;

int run(int argc, char** argv);
// Same as above with explicit streams; args exclude the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hace::cli
