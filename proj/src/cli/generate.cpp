#include "commands.hpp"

#include "metashift/common/error.hpp"
#include "metashift/taskgen/archive.hpp"

namespace metashift::cli {

std::string canonical(const GenerateArgs& a, const Context& ctx) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "generate tasks=%s reps=%d samples=%d bins=%d snr=%.17g,%.17g seed=%llu", a.tasks.c_str(),
                a.reps, a.samples, a.tasks == "ood" ? a.bins : 0, a.snr_lo, a.snr_hi,
                static_cast<unsigned long long>(ctx.seed));
  return buf;
}

void cmd_generate(const GenerateArgs& a, const Context& ctx) {
  const fs::path dir = a.dir.empty() ? default_archive(ctx) : fs::path(a.dir);
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    if (!a.force) throw ValidationError(dir.string() + " is not empty; pass --force to overwrite");
    for (const auto& e : fs::directory_iterator(dir)) {
      const auto name = e.path().filename().string();
      if (name == "manifest.json" || (name.starts_with("task_") && name.ends_with(".bin"))) fs::remove(e.path());
    }
  }
  taskgen::TaskSet set;
  if (a.tasks == "ood") {
    set = taskgen::generate_ood_taskset(a.bins, a.reps, ctx.seed, a.samples, a.snr_lo, a.snr_hi, ctx.jobs);
  } else if (a.tasks == "full" || a.tasks == "mini") {
    set = taskgen::generate_taskset(a.reps, a.samples, ctx.seed, a.tasks == "full" ? taskgen::Design::full : taskgen::Design::mini,
                                    ctx.jobs);
  } else {
    throw ValidationError("--tasks must be full, mini or ood, got '" + a.tasks + "'");
  }
  taskgen::save_archive(set, dir, ctx.config_hash);
  ctx.say() << "generate: " << set.tasks.size() << " tasks x " << 2 * a.reps << " waveforms -> " << dir.string() << "\n";
}

}  // namespace metashift::cli
