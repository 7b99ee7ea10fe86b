#include "metashift/taskgen/archive.hpp"

#include <cstdio>

#include "json.hpp"
#include "metashift/common/error.hpp"
#include "metashift/common/io.hpp"

namespace metashift::taskgen {

using nlohmann::json;

namespace {

constexpr std::string_view kTaskMagic = "STSK";

std::string_view kind_name(TaskSetKind k) { return k == TaskSetKind::factorial ? "factorial" : "ood_snr"; }

TaskSetKind parse_kind(const std::string& s) {
  if (s == "factorial") return TaskSetKind::factorial;
  if (s == "ood_snr") return TaskSetKind::ood_snr;
  throw FormatError("manifest: unknown task set kind '" + s + "'");
}

std::string_view design_name(Design d) {
  switch (d) {
    case Design::full: return "full";
    case Design::mini: return "mini";
    case Design::ood: return "ood";
  }
  return "full";
}

Design parse_design(const std::string& s) {
  if (s == "full") return Design::full;
  if (s == "mini") return Design::mini;
  if (s == "ood") return Design::ood;
  throw FormatError("manifest: unknown design '" + s + "'");
}

json factors_json(const FactorLevels& f) {
  return {{"circles", f.circles},
          {"layers", f.layers},
          {"velocity", to_string(f.velocity)},
          {"frequency", to_string(f.frequency)},
          {"source", to_string(f.source)}};
}

FactorLevels parse_factors(const json& j) {
  FactorLevels f;
  f.circles = j.at("circles").get<int>();
  f.layers = j.at("layers").get<int>();
  f.velocity = parse_level(j.at("velocity").get<std::string>());
  f.frequency = parse_level(j.at("frequency").get<std::string>());
  f.source = parse_source(j.at("source").get<std::string>());
  validate(f);
  return f;
}

json partition_json(const Partition& p) {
  return {{"n_per_class", p.n_per_class}, {"seed", p.seed},     {"support", p.support},
          {"query", p.query},             {"kshot", p.kshot},   {"holdout", p.holdout}};
}

Partition parse_partition(const json& j) {
  Partition p;
  p.n_per_class = j.at("n_per_class").get<int>();
  p.seed = j.at("seed").get<std::uint64_t>();
  p.support = j.at("support").get<std::vector<std::uint32_t>>();
  p.query = j.at("query").get<std::vector<std::uint32_t>>();
  p.kshot = j.at("kshot").get<std::vector<std::uint32_t>>();
  p.holdout = j.at("holdout").get<std::vector<std::uint32_t>>();
  return p;
}

}  // namespace

std::string task_file_name(int task_id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "task_%04d.bin", task_id);
  return buf;
}

std::string encode_task_file(const Task& task) {
  const std::uint32_t samples = task.waveforms.empty() ? 0 : task.waveforms.front().samples;
  io::ByteWriter w;
  w.bytes(kTaskMagic);
  w.scalar<std::uint16_t>(kArchiveVersion);
  w.scalar<std::uint32_t>(static_cast<std::uint32_t>(task.waveforms.size()));
  w.scalar<std::uint32_t>(2);
  w.scalar<std::uint32_t>(samples);
  for (const auto& wf : task.waveforms) w.scalar<std::uint8_t>(wf.label);
  for (const auto& wf : task.waveforms) {
    if (static_cast<std::uint32_t>(wf.samples) != samples)
      throw ValidationError("task " + std::to_string(task.id) + ": waveforms differ in length");
    w.floats(wf.data);
  }
  return w.str();
}

void decode_task_file(std::string_view bytes, Task& task, const std::string& source) {
  io::ByteReader r(bytes, source);
  if (r.bytes(4, "magic") != kTaskMagic) throw FormatError(source + ": bad magic (not an STSK task file)");
  const auto version = r.scalar<std::uint16_t>("format version");
  if (version != kArchiveVersion)
    throw FormatError(source + ": task file format version " + std::to_string(version) +
                      " is not supported (expected " + std::to_string(kArchiveVersion) + ")");
  const auto n = r.scalar<std::uint32_t>("waveform count");
  const auto channels = r.scalar<std::uint32_t>("channel count");
  const auto samples = r.scalar<std::uint32_t>("sample count");
  if (channels != 2) throw FormatError(source + ": expected 2 channels, found " + std::to_string(channels));
  task.waveforms.assign(n, LabeledWaveform{});
  for (auto& wf : task.waveforms) {
    wf.label = r.scalar<std::uint8_t>("labels");
    if (wf.label > 1) throw FormatError(source + ": label is not 0 or 1");
    wf.samples = static_cast<int>(samples);
  }
  for (auto& wf : task.waveforms) {
    wf.data.resize(2 * static_cast<std::size_t>(samples));
    r.floats(wf.data, "waveform data");
  }
  if (r.remaining() != 0) throw FormatError(source + ": trailing bytes after waveform data");
}

void save_archive(const TaskSet& set, const std::filesystem::path& dir, const std::string& config_hash) {
  std::filesystem::create_directories(dir);
  const auto& c = set.config;
  json manifest = {{"format_version", kArchiveVersion},
                   {"kind", kind_name(c.kind)},
                   {"design", design_name(c.design)},
                   {"reps_per_class", c.reps_per_class},
                   {"samples", c.samples},
                   {"master_seed", c.master_seed},
                   {"n_bins", c.n_bins},
                   {"snr_range", {c.snr_lo, c.snr_hi}}};
  json tasks = json::array();
  for (const auto& t : set.tasks) {
    json jt = {{"id", t.id},
               {"seed", t.seed},
               {"snr", t.snr},
               {"file", task_file_name(t.id)},
               {"n_waveforms", t.waveforms.size()}};
    jt["factors"] = t.factors ? factors_json(*t.factors) : json(nullptr);
    jt["partition"] = t.partition ? partition_json(*t.partition) : json(nullptr);
    tasks.push_back(std::move(jt));
    io::write_file_atomic(dir / task_file_name(t.id), encode_task_file(t));
  }
  if (!config_hash.empty()) manifest["config_hash"] = config_hash;
  manifest["tasks"] = std::move(tasks);
  io::write_file_atomic(dir / "manifest.json", manifest.dump(1) + "\n");
}

TaskSet load_archive(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  json m;
  try {
    m = json::parse(io::read_file(manifest_path));
  } catch (const json::parse_error& e) {
    throw FormatError(manifest_path.string() + ": " + e.what());
  }
  try {
    const auto version = m.at("format_version").get<int>();
    if (version != kArchiveVersion)
      throw FormatError(manifest_path.string() + ": archive format version " + std::to_string(version) +
                        " is not supported (expected " + std::to_string(kArchiveVersion) + ")");
    TaskSet set;
    auto& c = set.config;
    c.kind = parse_kind(m.at("kind").get<std::string>());
    c.design = parse_design(m.at("design").get<std::string>());
    c.reps_per_class = m.at("reps_per_class").get<int>();
    c.samples = m.at("samples").get<int>();
    c.master_seed = m.at("master_seed").get<std::uint64_t>();
    c.n_bins = m.at("n_bins").get<int>();
    c.snr_lo = m.at("snr_range").at(0).get<double>();
    c.snr_hi = m.at("snr_range").at(1).get<double>();
    for (const auto& jt : m.at("tasks")) {
      Task t;
      t.id = jt.at("id").get<int>();
      t.seed = jt.at("seed").get<std::uint64_t>();
      t.snr = jt.at("snr").get<double>();
      if (!jt.at("factors").is_null()) t.factors = parse_factors(jt.at("factors"));
      if (!jt.at("partition").is_null()) t.partition = parse_partition(jt.at("partition"));
      const auto file = dir / jt.at("file").get<std::string>();
      decode_task_file(io::read_file(file), t, file.string());
      if (t.waveforms.size() != jt.at("n_waveforms").get<std::size_t>())
        throw FormatError(file.string() + ": waveform count disagrees with manifest");
      set.tasks.push_back(std::move(t));
    }
    return set;
  } catch (const json::exception& e) {
    throw FormatError(manifest_path.string() + ": " + e.what());
  } catch (const ValidationError& e) {
    throw FormatError(manifest_path.string() + ": " + e.what());
  }
}

}  // namespace metashift::taskgen
