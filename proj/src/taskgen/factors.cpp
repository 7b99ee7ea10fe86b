#include "metashift/taskgen/factors.hpp"

#include <string>

#include "metashift/common/error.hpp"

namespace metashift::taskgen {

Range velocity_range(Level level) {
  switch (level) {
    case Level::Lo: return {1.50, 3.75};
    case Level::Hi: return {3.75, 6.00};
    case Level::LoHi: return {1.50, 6.00};
  }
  return {1.50, 6.00};
}

Range frequency_range(Level level) {
  switch (level) {
    case Level::Lo: return {1.0, 8.0};
    case Level::Hi: return {8.0, 15.0};
    case Level::LoHi: return {1.0, 15.0};
  }
  return {1.0, 15.0};
}

namespace {
constexpr int kCounts[] = {0, 2, 4};
constexpr Level kLevels[] = {Level::Lo, Level::Hi, Level::LoHi};
constexpr Source kSources[] = {Source::Ricker, Source::Spike, Source::Gabor};
}  // namespace

std::vector<FactorLevels> full_design() {
  std::vector<FactorLevels> out;
  out.reserve(243);
  for (int c : kCounts)
    for (int l : kCounts)
      for (Level v : kLevels)
        for (Level f : kLevels)
          for (Source s : kSources) out.push_back({c, l, v, f, s});
  return out;
}

std::vector<FactorLevels> mini_design() {
  std::vector<FactorLevels> out;
  out.reserve(27);
  for (int c : kCounts)
    for (Level f : kLevels)
      for (Source s : kSources) out.push_back({c, 0, Level::Lo, f, s});
  return out;
}

void validate(const FactorLevels& f) {
  auto count_ok = [](int n) { return n == 0 || n == 2 || n == 4; };
  if (!count_ok(f.circles)) throw ValidationError("circles must be 0, 2 or 4");
  if (!count_ok(f.layers)) throw ValidationError("layers must be 0, 2 or 4");
  auto level_ok = [](Level l) { return l == Level::Lo || l == Level::Hi || l == Level::LoHi; };
  if (!level_ok(f.velocity) || !level_ok(f.frequency)) throw ValidationError("invalid level");
  if (f.source != Source::Ricker && f.source != Source::Spike && f.source != Source::Gabor)
    throw ValidationError("invalid source");
}

std::string_view to_string(Level level) {
  switch (level) {
    case Level::Lo: return "Lo";
    case Level::Hi: return "Hi";
    case Level::LoHi: return "LoHi";
  }
  return "?";
}

std::string_view to_string(Source source) {
  switch (source) {
    case Source::Ricker: return "Ricker";
    case Source::Spike: return "Spike";
    case Source::Gabor: return "Gabor";
  }
  return "?";
}

Level parse_level(std::string_view s) {
  if (s == "Lo") return Level::Lo;
  if (s == "Hi") return Level::Hi;
  if (s == "LoHi") return Level::LoHi;
  throw ValidationError("unknown level '" + std::string(s) + "'");
}

Source parse_source(std::string_view s) {
  if (s == "Ricker") return Source::Ricker;
  if (s == "Spike") return Source::Spike;
  if (s == "Gabor") return Source::Gabor;
  throw ValidationError("unknown source '" + std::string(s) + "'");
}

std::string describe(const FactorLevels& f) {
  return "Circles:" + std::to_string(f.circles) + " Layers:" + std::to_string(f.layers) +
         " Velocity:" + std::string(to_string(f.velocity)) +
         " Frequency:" + std::string(to_string(f.frequency)) +
         " Source:" + std::string(to_string(f.source));
}

}  // namespace metashift::taskgen
