#include "metashift/meta/config.hpp"

#include <cstdio>
#include <sstream>

#include "metashift/common/error.hpp"

namespace metashift::meta {

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::reptile: return "reptile";
    case Algorithm::fomaml: return "fomaml";
    case Algorithm::tdl: return "tdl";
    case Algorithm::dnc: return "dnc";
  }
  return "reptile";
}

std::string_view to_string(Sampling s) { return s == Sampling::uniform ? "uniform" : "diverse"; }

Algorithm parse_algorithm(std::string_view s) {
  for (auto a : {Algorithm::reptile, Algorithm::fomaml, Algorithm::tdl, Algorithm::dnc})
    if (s == to_string(a)) return a;
  throw ValidationError("unknown algorithm '" + std::string(s) + "' (expected reptile, fomaml, tdl or dnc)");
}

Sampling parse_sampling(std::string_view s) {
  if (s == "uniform") return Sampling::uniform;
  if (s == "diverse") return Sampling::diverse;
  throw ValidationError("unknown sampling '" + std::string(s) + "' (expected uniform or diverse)");
}

MetaConfig default_config(Algorithm a) {
  MetaConfig c;
  c.algorithm = a;
  if (a == Algorithm::dnc) {
    c.patience = 150;
    c.ensembles = 10;
  }
  return c;
}

void validate(const MetaConfig& c) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ValidationError(std::string("training config: ") + what);
  };
  require(c.n_per_class >= 1, "n_per_class must be >= 1");
  require(c.inner_lr >= 0.0f, "inner_lr must be >= 0");
  require(c.outer_lr > 0.0f, "outer_lr must be > 0");
  require(c.inner_steps >= 1, "inner_steps must be >= 1");
  require(c.task_batch >= 1, "task_batch must be >= 1");
  require(c.patience >= 1, "patience must be >= 1");
  require(c.max_epochs >= 1, "max_epochs must be >= 1");
  require(c.batch_size >= 1, "batch_size must be >= 1");
  require(c.val_fraction > 0.0 && c.val_fraction < 1.0, "val_fraction must lie in (0, 1)");
  require(c.ensembles >= 1, "ensembles must be >= 1");
  require(c.architecture != nn::ArchSize::custom, "architecture must be mini, small, big or huge");
  require(c.algorithm != Algorithm::tdl || c.sampling == Sampling::uniform, "tdl supports uniform sampling only");
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

std::string config_text(const MetaConfig& c) {
  std::ostringstream o;
  o << "algorithm = " << to_string(c.algorithm) << '\n'
    << "architecture = " << nn::to_string(c.architecture) << '\n'
    << "n_per_class = " << c.n_per_class << '\n'
    << "inner_lr = " << fmt(c.inner_lr) << '\n'
    << "outer_lr = " << fmt(c.outer_lr) << '\n'
    << "inner_steps = " << c.inner_steps << '\n'
    << "task_batch = " << c.task_batch << '\n'
    << "patience = " << c.patience << '\n'
    << "max_epochs = " << c.max_epochs << '\n'
    << "batch_size = " << c.batch_size << '\n'
    << "val_fraction = " << fmt(c.val_fraction) << '\n'
    << "ensembles = " << c.ensembles << '\n'
    << "sampling = " << to_string(c.sampling) << '\n'
    << "seed = " << c.seed << '\n';
  return o.str();
}

MetaConfig parse_config_text(std::string_view text) {
  MetaConfig c;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("training config: expected 'key = value', got '" + line + "'");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "algorithm") c.algorithm = parse_algorithm(value);
      else if (key == "architecture") c.architecture = nn::parse_arch_size(value);
      else if (key == "n_per_class") c.n_per_class = std::stoi(value);
      else if (key == "inner_lr") c.inner_lr = std::stof(value);
      else if (key == "outer_lr") c.outer_lr = std::stof(value);
      else if (key == "inner_steps") c.inner_steps = std::stoi(value);
      else if (key == "task_batch") c.task_batch = std::stoi(value);
      else if (key == "patience") c.patience = std::stoi(value);
      else if (key == "max_epochs") c.max_epochs = std::stoi(value);
      else if (key == "batch_size") c.batch_size = std::stoi(value);
      else if (key == "val_fraction") c.val_fraction = std::stod(value);
      else if (key == "ensembles") c.ensembles = std::stoi(value);
      else if (key == "sampling") c.sampling = parse_sampling(value);
      else if (key == "seed") c.seed = std::stoull(value);
      else throw FormatError("training config: unknown key '" + key + "'");
    } catch (const std::logic_error&) {
      throw FormatError("training config: bad value for '" + key + "': '" + value + "'");
    }
  }
  return c;
}

}  // namespace metashift::meta
