#include "metashift/nn/checkpoint.hpp"

#include "metashift/common/error.hpp"
#include "metashift/common/io.hpp"

namespace metashift::nn {

namespace {
constexpr std::string_view kMagic = "MSNN";
}

std::string encode_checkpoint(const ParameterSet& params) {
  io::ByteWriter w;
  w.bytes(kMagic);
  w.scalar<std::uint16_t>(kCheckpointVersion);
  const auto name = to_string(params.spec().size);
  w.scalar<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
  w.bytes(name);
  for (std::size_t l = 0; l < params.spec().num_layers(); ++l) {
    for (auto arr : {params.weights(l), params.bias(l)}) {
      w.scalar<std::uint32_t>(static_cast<std::uint32_t>(arr.size()));
      w.floats(arr);
    }
  }
  return w.str();
}

namespace {

ParameterSet decode(std::string_view bytes, const ArchitectureSpec* explicit_spec,
                    const std::string& source) {
  io::ByteReader r(bytes, source);
  if (r.bytes(4, "magic") != kMagic) throw FormatError(source + ": bad magic (not an MSNN checkpoint)");
  const auto version = r.scalar<std::uint16_t>("format version");
  if (version != kCheckpointVersion)
    throw FormatError(source + ": checkpoint format version " + std::to_string(version) +
                      " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
  const auto name_len = r.scalar<std::uint32_t>("architecture name length");
  const std::string name(r.bytes(name_len, "architecture name"));
  ArchitectureSpec spec;
  if (explicit_spec) {
    spec = *explicit_spec;
    if (name != to_string(spec.size))
      throw FormatError(source + ": architecture '" + name + "' does not match expected '" +
                        std::string(to_string(spec.size)) + "'");
  } else {
    try {
      spec = build_architecture(parse_arch_size(name));
    } catch (const ValidationError&) {
      throw FormatError(source + ": unknown architecture '" + name + "'");
    }
  }
  ParameterSet params(spec);
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    for (auto arr : {params.weights(l), params.bias(l)}) {
      const auto n = r.scalar<std::uint32_t>("array length");
      if (n != arr.size())
        throw FormatError(source + ": layer " + std::to_string(l) + " holds " + std::to_string(n) +
                          " values, expected " + std::to_string(arr.size()));
      r.floats(arr, "layer " + std::to_string(l) + " values");
    }
  }
  if (r.remaining() != 0) throw FormatError(source + ": trailing bytes after last layer");
  return params;
}

}  // namespace

ParameterSet decode_checkpoint(std::string_view bytes, const std::string& source) {
  return decode(bytes, nullptr, source);
}

ParameterSet decode_checkpoint(std::string_view bytes, const ArchitectureSpec& spec,
                               const std::string& source) {
  return decode(bytes, &spec, source);
}

void save_checkpoint(const ParameterSet& params, const std::filesystem::path& path) {
  io::write_file_atomic(path, encode_checkpoint(params));
}

ParameterSet load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(io::read_file(path), path.string());
}

}  // namespace metashift::nn
