#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "metashift/nn/architecture.hpp"

namespace metashift::meta {

enum class Algorithm { reptile, fomaml, tdl, dnc };
enum class Sampling { uniform, diverse };

std::string_view to_string(Algorithm a);
std::string_view to_string(Sampling s);
Algorithm parse_algorithm(std::string_view s);
Sampling parse_sampling(std::string_view s);

struct MetaConfig {
  Algorithm algorithm = Algorithm::reptile;
  nn::ArchSize architecture = nn::ArchSize::mini;
  int n_per_class = 5;     // N
  float inner_lr = 1e-2f;  // alpha
  float outer_lr = 5e-4f;  // beta
  int inner_steps = 5;     // G
  int task_batch = 5;
  int patience = 200;
  int max_epochs = 5000;
  int batch_size = 16;  // TDL and D&C
  double val_fraction = 0.2;
  int ensembles = 20;
  Sampling sampling = Sampling::uniform;
  std::uint64_t seed = 0;

  bool operator==(const MetaConfig&) const = default;
};

/// Defaults for an algorithm: patience 150 and 10 ensembles for D&C,
/// patience 200 and 20 ensembles otherwise.
MetaConfig default_config(Algorithm a);

/// Throws ValidationError for out-of-range fields.
void validate(const MetaConfig& c);

/// "key = value" lines covering every field, in a fixed order.
std::string config_text(const MetaConfig& c);
/// Inverse of config_text; unknown keys are errors, missing keys keep defaults.
MetaConfig parse_config_text(std::string_view text);

}  // namespace metashift::meta
