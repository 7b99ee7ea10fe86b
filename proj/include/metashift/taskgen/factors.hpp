#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace metashift::taskgen {

enum class Level { Lo, Hi, LoHi };
enum class Source { Ricker, Spike, Gabor };

struct Range {
  double lo;
  double hi;
};

/// One point of the 3^5 factorial design.
struct FactorLevels {
  int circles = 0;  // 0, 2 or 4
  int layers = 0;   // 0, 2 or 4
  Level velocity = Level::Lo;
  Level frequency = Level::Lo;
  Source source = Source::Ricker;

  bool operator==(const FactorLevels&) const = default;
};

/// km/s: Lo [1.50, 3.75], Hi [3.75, 6.00], LoHi the union.
Range velocity_range(Level level);
/// Hz: Lo [1, 8], Hi [8, 15], LoHi the union.
Range frequency_range(Level level);

/// All 243 combinations; circles varies slowest, source fastest.
std::vector<FactorLevels> full_design();
/// 27-point desk design over circles x frequency x source (layers 0, velocity Lo).
std::vector<FactorLevels> mini_design();

/// Throws ValidationError when a field is not one of its three levels.
void validate(const FactorLevels& f);

std::string_view to_string(Level level);
std::string_view to_string(Source source);
Level parse_level(std::string_view s);
Source parse_source(std::string_view s);
std::string describe(const FactorLevels& f);

}  // namespace metashift::taskgen
