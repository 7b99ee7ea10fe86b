#include "metashift/nn/architecture.hpp"

#include <algorithm>
#include <string>

#include "metashift/common/error.hpp"

namespace metashift::nn {

std::string_view to_string(ArchSize size) {
  switch (size) {
    case ArchSize::mini: return "mini";
    case ArchSize::small: return "small";
    case ArchSize::big: return "big";
    case ArchSize::huge: return "huge";
    case ArchSize::custom: return "custom";
  }
  return "custom";
}

ArchSize parse_arch_size(std::string_view name) {
  if (name == "mini") return ArchSize::mini;
  if (name == "small") return ArchSize::small;
  if (name == "big") return ArchSize::big;
  if (name == "huge") return ArchSize::huge;
  throw ValidationError("unknown architecture '" + std::string(name) +
                        "' (expected mini, small, big or huge)");
}

bool ArchitectureSpec::pools_after(std::size_t conv_index) const {
  return std::find(pool_after.begin(), pool_after.end(), static_cast<int>(conv_index)) !=
         pool_after.end();
}

int ArchitectureSpec::output_length(int samples) const {
  int len = samples;
  for (std::size_t i = 0; i < conv.size(); ++i)
    if (pools_after(i)) len /= 2;
  return len;
}

std::size_t ArchitectureSpec::weight_count(std::size_t layer) const {
  if (is_conv(layer)) {
    const auto& c = conv[layer];
    return static_cast<std::size_t>(c.out_channels) * c.in_channels * c.kernel;
  }
  const auto& d = mlp[layer - conv.size()];
  return static_cast<std::size_t>(d.out_dim) * d.in_dim;
}

std::size_t ArchitectureSpec::bias_count(std::size_t layer) const {
  return is_conv(layer) ? static_cast<std::size_t>(conv[layer].out_channels)
                        : static_cast<std::size_t>(mlp[layer - conv.size()].out_dim);
}

namespace {

ArchitectureSpec make(ArchSize size, std::vector<int> channels, int kernel, std::vector<int> pools,
                      std::vector<int> widths) {
  ArchitectureSpec spec;
  spec.size = size;
  int in = 2;
  for (int c : channels) {
    spec.conv.push_back({in, c, kernel});
    in = c;
  }
  spec.pool_after = std::move(pools);
  for (int w : widths) {
    spec.mlp.push_back({in, w});
    in = w;
  }
  spec.mlp.push_back({in, 1});
  return spec;
}

}  // namespace

ArchitectureSpec build_architecture(ArchSize size) {
  switch (size) {
    case ArchSize::mini: return make(size, {4, 8}, 3, {1}, {8, 16});
    case ArchSize::small: return make(size, {16, 32}, 3, {1}, {32, 64});
    case ArchSize::big: return make(size, {16, 32, 64}, 3, {2}, {64, 128, 64});
    case ArchSize::huge: return make(size, {32, 64, 128, 192}, 5, {1, 3}, {192, 384, 192});
    case ArchSize::custom: break;
  }
  throw ValidationError("build_architecture: custom specs must be assembled by hand");
}

void validate(const ArchitectureSpec& spec) {
  if (spec.conv.empty() || spec.mlp.empty())
    throw ValidationError("architecture needs at least one conv and one dense layer");
  for (std::size_t i = 0; i < spec.conv.size(); ++i) {
    const auto& c = spec.conv[i];
    if (c.in_channels <= 0 || c.out_channels <= 0 || c.kernel <= 0 || c.kernel % 2 == 0)
      throw ValidationError("conv layer " + std::to_string(i) + ": invalid shape");
    if (i > 0 && c.in_channels != spec.conv[i - 1].out_channels)
      throw ValidationError("conv layer " + std::to_string(i) + ": channel chain broken");
  }
  for (int p : spec.pool_after)
    if (p < 0 || static_cast<std::size_t>(p) >= spec.conv.size())
      throw ValidationError("pool position " + std::to_string(p) + " out of range");
  int in = spec.gap_dim();
  for (std::size_t j = 0; j < spec.mlp.size(); ++j) {
    if (spec.mlp[j].in_dim != in || spec.mlp[j].out_dim <= 0)
      throw ValidationError("dense layer " + std::to_string(j) + ": dimension chain broken");
    in = spec.mlp[j].out_dim;
  }
  if (in != 1) throw ValidationError("final dense layer must have output dim 1");
}

std::size_t count_params(const ArchitectureSpec& spec) {
  std::size_t n = 0;
  for (std::size_t l = 0; l < spec.num_layers(); ++l) n += spec.weight_count(l) + spec.bias_count(l);
  return n;
}

}  // namespace metashift::nn
