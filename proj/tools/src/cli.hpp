#pragma once

// Command-line front end. Everything lives in a library so the tests can
// drive complete invocations without spawning processes.

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace trapent::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2, kNotConverged = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// 10 significant digits; scientific notation when |x| < 1e-3 or >= 1e6.
std::string format_number(double x);

/// MIN:MAX:POINTS, evenly spaced and inclusive. POINTS = 1 needs MIN = MAX.
struct Range {
  double min = 0.0;
  double max = 0.0;
  int points = 1;

  std::vector<double> values() const;
};
Range parse_range(std::string_view text, std::string_view flag);

/// "0", "2", "0,2" or "all" (= 0,1,2).
std::vector<int> parse_branches(std::string_view text);

/// "1:0,2:0,1:1" -> {(1,0), (2,0), (1,1)}; n is 1-based.
std::vector<std::pair<int, int>> parse_modes(std::string_view text);

/// Run one invocation. args excludes the program name. Output goes to `out`
/// unless --out names a file; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace trapent::cli
