#pragma once

#include <ostream>
#include <string_view>

#include "sqvm/functions.hpp"
#include "sqvm/value.hpp"

namespace sqvm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitVerifyFailed = 2;

/// `name/n=EXPR`, EXPR in the scripted prefix form. Throws SyntaxError or
/// UsageError.
HostFunction parse_function_spec(std::string_view spec);
/// `name/n=STEP[;FINAL[;INIT]]`; FINAL defaults to (acc), INIT to 0.
HostAggregate parse_aggregate_spec(std::string_view spec);
/// Command-line parameter: NULL, an integer, a real, or else text.
ValueCell parse_value(std::string_view text);

/// Entry point of the `sqvm` tool. argv[0] is the program name.
int main(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

}  // namespace sqvm::cli
