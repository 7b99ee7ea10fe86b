#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "metashift/taskgen/taskset.hpp"

namespace metashift::taskgen {

// Archive layout: <dir>/manifest.json plus one task_NNNN.bin per task.
// Task file: "STSK", u16 version, u32 n_waveforms, u32 channels (=2),
// u32 samples, u8 labels[n], then float32 LE data in waveform-major,
// channel-major, sample-minor order. Partitions live in the manifest.

inline constexpr std::uint16_t kArchiveVersion = 1;

std::string encode_task_file(const Task& task);
/// Decodes waveforms into `task`; `source` names the file in errors.
void decode_task_file(std::string_view bytes, Task& task, const std::string& source);

/// `config_hash`, when set, is recorded in the manifest; readers ignore it.
void save_archive(const TaskSet& set, const std::filesystem::path& dir, const std::string& config_hash = {});
TaskSet load_archive(const std::filesystem::path& dir);

std::string task_file_name(int task_id);

}  // namespace metashift::taskgen
