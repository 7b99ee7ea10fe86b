#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace metashift::nn {

/// The four scaled classifier variants. `custom` marks hand-built specs
/// (tests, toy nets); it cannot be named on the command line.
enum class ArchSize { mini, small, big, huge, custom };

std::string_view to_string(ArchSize size);

/// Parses "mini" | "small" | "big" | "huge"; throws ValidationError otherwise.
ArchSize parse_arch_size(std::string_view name);

struct ConvSpec {
  int in_channels;
  int out_channels;
  int kernel;  // odd; "same" zero padding of kernel/2 on each side

  bool operator==(const ConvSpec&) const = default;
};

struct DenseSpec {
  int in_dim;
  int out_dim;

  bool operator==(const DenseSpec&) const = default;
};

/// Layer layout of a 1D-CNN -> global-average-pool -> MLP -> sigmoid classifier.
/// Layer indices run over conv layers first, then dense layers.
struct ArchitectureSpec {
  ArchSize size = ArchSize::custom;
  std::vector<ConvSpec> conv;
  std::vector<int> pool_after;  // conv indices followed by max-pool(2, 2)
  std::vector<DenseSpec> mlp;

  std::size_t num_layers() const { return conv.size() + mlp.size(); }
  bool is_conv(std::size_t layer) const { return layer < conv.size(); }
  bool pools_after(std::size_t conv_index) const;
  int input_channels() const { return conv.front().in_channels; }
  /// Channel count entering the MLP (= width of the pooled representation).
  int gap_dim() const { return conv.back().out_channels; }
  /// Sequence length after the conv stack for an input of `samples`.
  int output_length(int samples) const;

  std::size_t weight_count(std::size_t layer) const;
  std::size_t bias_count(std::size_t layer) const;

  bool operator==(const ArchitectureSpec&) const = default;
};

/// Layout for one of the named variants.
ArchitectureSpec build_architecture(ArchSize size);

/// Checks channel chaining, odd kernels, final scalar output.
void validate(const ArchitectureSpec& spec);

/// Exact number of trainable weights + biases.
std::size_t count_params(const ArchitectureSpec& spec);

}  // namespace metashift::nn
